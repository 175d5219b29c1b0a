#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "qer/cnn.hpp"
#include "qer/library.hpp"

namespace qer {

/// Distribution of the signed binning error delta = n - n_ANN, plus mean and
/// standard deviation of the rescaled error delta/N_bin.
struct ErrorStats {
    std::map<int, long> histogram;
    double mu = 0.0;
    double sigma = 0.0;
    int n_bins = 0;
    long count = 0;

    double p_delta(int delta) const;
    double p_abs_delta_le(int bound) const;
    double mean_delta() const;
};

ErrorStats evaluate(const NetworkParams& params, const Library& test);

/// Same evaluation driven by an arbitrary predictor (oracle and random
/// baselines in tests).
using BinPredictor = std::function<int(const StatImage&)>;
ErrorStats evaluate_with_predictor(const BinPredictor& predictor, const Library& test);

struct GridInput {
    ModelKind kind;
    const Library* train = nullptr;
    const Library* test = nullptr;
};
struct GridCell {
    ModelKind train_kind;
    ModelKind test_kind;
    ErrorStats stats;
};

/// Trains one network per class and evaluates every train/test combination.
std::vector<GridCell> cross_model_grid(std::span<const GridInput> inputs,
                                       const NetworkConfig& config_template,
                                       const TrainConfig& train_cfg);

struct NbinPoint {
    int n_bins = 0;
    ErrorStats stats;
};

/// Rebins one image set at each bin count, trains, and evaluates.
std::vector<NbinPoint> nbin_sweep(const Library& train, const Library& test,
                                  std::span<const int> nbin_values,
                                  const NetworkConfig& config_template,
                                  const TrainConfig& train_cfg);

struct EvolutionConfig {
    ModelSpec model;
    double gamma = 0.0; // 0 selects exact unitary evolution
    double dt = 0.0;    // integrator step; 0 picks the default
    std::vector<double> times;
    int ensemble = 20;
    std::uint64_t seed = 1;
};

/// 60 log-spaced times covering the growth and the dissipative crossover.
std::vector<double> default_time_grid();

struct DynamicsEval {
    std::vector<double> times;
    std::vector<long> shot_levels; // level 0 = exact images
    int ensemble = 0;
    int n_bins = 0;
    // indexed [shot_level][time]
    std::vector<std::vector<double>> mu_t;
    std::vector<std::vector<double>> sigma_t;
    std::vector<std::vector<double>> predicted_mid;
    std::vector<double> exact_mean;
    // signed binning errors, [shot_level][time][member]
    std::vector<std::vector<std::vector<int>>> delta;

    double mean_abs_delta(std::size_t shot_index) const;
};

/// Evolves an ensemble of random product states, images each checkpoint
/// exactly and at every shot level, and tracks prediction errors against the
/// exactly computed measure. The exact trajectory never goes through the
/// network path.
DynamicsEval evaluate_dynamics(const NetworkParams& params, const EvolutionConfig& evolution,
                               const RotationSet& rotations, const BinningScheme& scheme,
                               std::span<const long> shot_levels);

// CSV emitters (floats printed with 9 significant digits).
void write_errors_csv(const ErrorStats& stats, const std::filesystem::path& file);
void write_stats_csv(std::span<const NbinPoint> points, const std::filesystem::path& file);
void write_grid_csv(std::span<const GridCell> cells, const std::filesystem::path& file);
void write_dynamics_csv(const DynamicsEval& eval, const std::filesystem::path& file);

/// Grayscale portable pixmap of an image, max-scaled (display only).
void write_ppm(const StatImage& image, const std::filesystem::path& file);
std::pair<int, int> read_ppm_extents(const std::filesystem::path& file);

} // namespace qer
