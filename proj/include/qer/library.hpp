#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "qer/imaging.hpp"
#include "qer/measures.hpp"
#include "qer/models.hpp"

namespace qer {

/// N_bin equally spaced label intervals over [0, e_max]; the last bin is
/// closed so every in-range value has a label.
struct BinningScheme {
    MeasureKind measure = MeasureKind::Entropy;
    double e_max = 0.0;
    int n_bins = 0;

    double bin_width() const { return e_max / n_bins; }
};
void validate(const BinningScheme& scheme);

/// 1-based bin index of `value`; values beyond e_max (past a small numerical
/// slack) signal a mis-specified scheme and throw.
int bin_label(double value, const BinningScheme& scheme);

struct Provenance {
    ModelKind model = ModelKind::TfiPlus;
    double field = 0.0;
    std::string state_class; // "ground", "excited", "product", "separable", "dissipated"
    std::uint64_t seed = 0;
};

struct LabeledImage {
    StatImage image;
    double exact_value = 0.0;
    int bin = 0;
    Provenance provenance;
};

struct LibraryMeta {
    int format_version = 1;
    std::string recipe;
    std::string model;
    int sites = 0;
    int rotations = 0; // W
    BinningScheme scheme;
    std::uint64_t rotation_seed = 0;
    std::uint64_t build_seed = 0;
    std::string boundary = "periodic";
    long shots = 0; // 0 = exact images
    std::map<std::string, long> class_counts;
    nlohmann::json params; // recipe-specific knobs (h range, gamma, ...)
};

struct Library {
    LibraryMeta meta;
    std::vector<LabeledImage> entries;
    std::vector<std::string> build_log; // skipped-bin notices etc.
};

/// Ground-state recipe: for each bin, rejection-samples the field h > 1 by
/// bisection until the ground-state entropy lands on a uniformly jittered
/// target inside the bin, randomizes the Bloch orientation, and images the
/// state. Bin counts are exact quotas.
Library build_ground_library(ModelKind kind, const BinningScheme& scheme, int count,
                             const RotationSet& rotations, std::uint64_t seed);

/// Excited-state recipe: per field value, the full spectrum is grouped into
/// n_bins intervals between its own min and max measure, one state is kept
/// per interval, the rest are discarded. Labels use the global scheme.
Library build_excited_library(ModelKind kind, const BinningScheme& scheme,
                              const std::vector<double>& field_grid,
                              const RotationSet& rotations, std::uint64_t seed);

struct DynamicsCounts {
    long ground = 0;
    long excited = 0;
    long product = 0;
};

/// Union of TFI+ ground, TFI+ excited and random-product-state images in the
/// given proportions (1:1:1 by default in the CLI), labeled by entropy under
/// the experiment-wide scheme.
Library build_unitary_dynamics_library(const BinningScheme& scheme,
                                       const DynamicsCounts& counts,
                                       const RotationSet& rotations, std::uint64_t seed);

struct DissipativeCounts {
    long ground = 0;
    long excited = 0;
    long separable = 0;
    long dissipated = 0;
};

/// Union of TFI+ eigenstate images, random separable mixtures, and snapshots
/// of eigenstates decaying under the dissipative-only generator at
/// gamma = 0.1, labeled by log-negativity.
Library build_dissipative_library(const BinningScheme& scheme,
                                  const DissipativeCounts& counts,
                                  const RotationSet& rotations, std::uint64_t seed);

/// Relabels entries from their stored exact values under a new scheme with
/// the same measure (used for bin-count sweeps on one image set).
Library rebin(const Library& lib, const BinningScheme& scheme);

/// Recomputes labels from stored values on a random `fraction` sample;
/// throws ValidationError on any mismatch.
void audit_labels(const Library& lib, double fraction, std::uint64_t seed);

/// On-disk layout: <dir>/library.qerl (binary blob, checksummed) next to
/// <dir>/manifest.json. Images are stored as little-endian float32.
void write_library(const Library& lib, const std::filesystem::path& dir);
Library read_library(const std::filesystem::path& dir);

// Rotation-set file ("QERR"), shared across every command of an experiment.
void write_rotations(const RotationSet& set, const std::filesystem::path& file);
RotationSet read_rotations(const std::filesystem::path& file);

} // namespace qer
