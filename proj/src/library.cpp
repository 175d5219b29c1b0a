#include "qer/library.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <Eigen/Eigenvalues>
#include "qer/checksum_io.hpp"

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian and written natively");

namespace qer {

namespace {

constexpr double kFieldMin = 1.0001; // "h > 1", kept strictly above the critical point
constexpr double kFieldMax = 50.0;
constexpr double kBinSlack = 1e-9;

} // namespace

void validate(const BinningScheme& scheme) {
    if (scheme.e_max <= 0.0) {
        throw ValidationError("binning scheme needs e_max > 0");
    }
    if (scheme.n_bins < 2) {
        throw ValidationError("binning scheme needs at least 2 bins");
    }
}

int bin_label(double value, const BinningScheme& scheme) {
    validate(scheme);
    if (value < 0.0) {
        if (value > -kBinSlack) {
            value = 0.0; // numerical zero from an exactly unentangled state
        } else {
            throw ValidationError("cannot bin negative measure value " +
                                  std::to_string(value));
        }
    }
    if (value > scheme.e_max + kBinSlack) {
        throw ValidationError("value " + std::to_string(value) + " exceeds e_max " +
                              std::to_string(scheme.e_max) + "; mis-specified scheme");
    }
    const int n = static_cast<int>(std::floor(value / scheme.bin_width())) + 1;
    return std::min(n, scheme.n_bins); // closes the last bin at value == e_max
}

// ---------------------------------------------------------------------------
// ground-state sampling
// ---------------------------------------------------------------------------

namespace {

// Ground state via the real symmetric form (all chain Hamiltonians are real).
PureState ground_state_real(const ModelSpec& spec) {
    const Eigen::MatrixXd h = build_hamiltonian(spec).real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("ground-state eigensolver failed");
    }
    PureState psi;
    psi.sites = spec.sites;
    psi.amps = solver.eigenvectors().col(0).cast<Complex>();
    return psi;
}

struct GroundSample {
    PureState state;
    double value = 0.0;
    double field = 0.0;
};

// Bisects the monotone-decreasing S(h) on (1, 50] for a target entropy.
class GroundChain {
  public:
    GroundChain(ModelKind kind, int sites) : kind_(kind), sites_(sites) {
        reachable_ = entropy_at(kFieldMin);
    }

    double reachable() const { return reachable_; }

    GroundSample sample(double target) const {
        double lo = kFieldMin;  // high entropy end
        double hi = kFieldMax;  // low entropy end
        PureState psi;
        double s = 0.0, mid = 0.0;
        for (int it = 0; it < 64; ++it) {
            mid = 0.5 * (lo + hi);
            psi = ground_state_real(model_spec(kind_, sites_, mid));
            s = half_chain_entropy(psi).value;
            if (std::abs(s - target) <= tol_) {
                break;
            }
            if (s > target) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return {std::move(psi), s, mid};
    }

    void set_tolerance(double tol) { tol_ = tol; }

  private:
    double entropy_at(double field) const {
        return half_chain_entropy(ground_state_real(model_spec(kind_, sites_, field))).value;
    }

    ModelKind kind_;
    int sites_;
    double reachable_ = 0.0;
    double tol_ = 1e-4;
};

// Per-bin quotas: count split as evenly as the remainder allows.
std::vector<long> bin_quotas(long count, int n_bins) {
    std::vector<long> quotas(n_bins, count / n_bins);
    for (long r = 0; r < count % n_bins; ++r) {
        quotas[static_cast<std::size_t>(r)] += 1;
    }
    return quotas;
}

// Uniformly distributed entropy targets + states; shared by the ground recipe
// and the dynamics/dissipative unions (which relabel under their own scheme).
std::vector<GroundSample> sample_uniform_entropy_grounds(ModelKind kind, int sites,
                                                         long count, int n_bins,
                                                         double e_max,
                                                         std::uint64_t seed) {
    const GroundChain chain(kind, sites);
    const double width = e_max / n_bins;
    // bin -> effective reachable sub-interval
    std::vector<std::pair<double, double>> windows;
    for (int b = 1; b <= n_bins; ++b) {
        const double lo = (b - 1) * width;
        const double hi = std::min(b * width, chain.reachable() - 1e-6);
        if (hi - lo < 1e-6) {
            throw ValidationError(
                "ground recipe: bin " + std::to_string(b) + " of [0, " +
                std::to_string(e_max) + "] is unreachable for " + model_name(kind) +
                " at L=" + std::to_string(sites) + " (max entropy " +
                std::to_string(chain.reachable()) + "); e_max mismatch");
        }
        const double margin = 0.05 * (hi - lo);
        windows.emplace_back(lo + margin, hi - margin);
    }
    const std::vector<long> quotas = bin_quotas(count, n_bins);
    std::vector<int> item_bin(static_cast<std::size_t>(count));
    {
        long pos = 0;
        for (int b = 0; b < n_bins; ++b) {
            for (long q = 0; q < quotas[static_cast<std::size_t>(b)]; ++q) {
                item_bin[static_cast<std::size_t>(pos++)] = b;
            }
        }
    }

    std::vector<GroundSample> samples(static_cast<std::size_t>(count));
    ParallelGuard guard;
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < count; ++i) {
        guard.run([&, i] {
            GroundChain worker = chain; // cheap copy; reuses the reachable bound
            const auto [lo, hi] =
                windows[static_cast<std::size_t>(item_bin[static_cast<std::size_t>(i)])];
            worker.set_tolerance(std::max(1e-5, 0.02 * (hi - lo)));
            std::mt19937_64 gen(derive_seed(seed, static_cast<std::uint64_t>(i)));
            std::uniform_real_distribution<double> uni(lo, hi);
            samples[static_cast<std::size_t>(i)] = worker.sample(uni(gen));
        });
    }
    guard.rethrow();
    return samples;
}

// ---------------------------------------------------------------------------
// excited-state selection
// ---------------------------------------------------------------------------

struct ExcitedPick {
    PureState state;
    double value = 0.0;
};

// Spectrum at one field value, grouped into n_bins intervals between its own
// min and max measure; one state kept per interval.
std::vector<ExcitedPick> select_excited(const ModelSpec& spec, MeasureKind measure,
                                        int n_bins, std::uint64_t seed,
                                        std::vector<std::string>* log) {
    const Eigen::MatrixXd h = build_hamiltonian(spec).real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("excited-state eigensolver failed");
    }
    const Eigen::Index dim = h.rows();
    std::vector<double> values(static_cast<std::size_t>(dim));
    for (Eigen::Index k = 0; k < dim; ++k) {
        PureState psi;
        psi.sites = spec.sites;
        psi.amps = solver.eigenvectors().col(k).cast<Complex>();
        values[static_cast<std::size_t>(k)] = measure_value(psi, measure);
    }
    const double vmin = *std::min_element(values.begin(), values.end());
    const double vmax = *std::max_element(values.begin(), values.end());
    const double span = std::max(vmax - vmin, 1e-12);

    std::vector<std::vector<Eigen::Index>> buckets(static_cast<std::size_t>(n_bins));
    for (Eigen::Index k = 0; k < dim; ++k) {
        int b = static_cast<int>((values[static_cast<std::size_t>(k)] - vmin) / span * n_bins);
        b = std::clamp(b, 0, n_bins - 1);
        buckets[static_cast<std::size_t>(b)].push_back(k);
    }

    std::mt19937_64 gen(seed);
    std::vector<ExcitedPick> picks;
    for (int b = 0; b < n_bins; ++b) {
        const auto& bucket = buckets[static_cast<std::size_t>(b)];
        if (bucket.empty()) {
            if (log != nullptr) {
                log->push_back("h=" + std::to_string(spec.field) + ": selection bin " +
                               std::to_string(b + 1) + " empty, skipped");
            }
            continue;
        }
        std::uniform_int_distribution<std::size_t> pick(0, bucket.size() - 1);
        const Eigen::Index k = bucket[pick(gen)];
        PureState psi;
        psi.sites = spec.sites;
        psi.amps = solver.eigenvectors().col(k).cast<Complex>();
        picks.push_back({std::move(psi), values[static_cast<std::size_t>(k)]});
    }
    return picks;
}

std::vector<double> excited_field_grid(long n_points) {
    // near-critical window from the excited-state recipe
    constexpr double lo = 1.0 + 1e-4;
    constexpr double hi = 1.07 - 1e-4;
    std::vector<double> grid(static_cast<std::size_t>(n_points));
    if (n_points == 1) {
        grid[0] = 0.5 * (lo + hi);
        return grid;
    }
    for (long i = 0; i < n_points; ++i) {
        grid[static_cast<std::size_t>(i)] =
            lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_points - 1);
    }
    return grid;
}

LabeledImage make_entry(StatImage image, double value, const BinningScheme& scheme,
                        Provenance prov) {
    LabeledImage entry;
    entry.image = std::move(image);
    entry.exact_value = value;
    entry.bin = bin_label(value, scheme);
    entry.provenance = std::move(prov);
    return entry;
}

std::vector<LabeledImage> excited_entries(ModelKind kind, const BinningScheme& scheme,
                                          const std::vector<double>& field_grid,
                                          const RotationSet& rotations, std::uint64_t seed,
                                          std::vector<std::string>* log) {
    const int sites = rotations.sites;
    std::vector<std::vector<LabeledImage>> per_field(field_grid.size());
    std::vector<std::vector<std::string>> per_log(field_grid.size());
    ParallelGuard guard;
#pragma omp parallel for schedule(dynamic)
    for (long fi = 0; fi < static_cast<long>(field_grid.size()); ++fi) {
        guard.run([&, fi] {
            const double h = field_grid[static_cast<std::size_t>(fi)];
            const ModelSpec spec = model_spec(kind, sites, h);
            auto picks = select_excited(spec, scheme.measure, scheme.n_bins,
                                        derive_seed(seed, static_cast<std::uint64_t>(fi)),
                                        &per_log[static_cast<std::size_t>(fi)]);
            for (auto& pick : picks) {
                per_field[static_cast<std::size_t>(fi)].push_back(
                    make_entry(generate_image(pick.state, rotations), pick.value, scheme,
                               {kind, h, "excited", seed}));
            }
        });
    }
    guard.rethrow();
    std::vector<LabeledImage> out;
    for (std::size_t fi = 0; fi < field_grid.size(); ++fi) {
        for (auto& e : per_field[fi]) {
            out.push_back(std::move(e));
        }
        if (log != nullptr) {
            log->insert(log->end(), per_log[fi].begin(), per_log[fi].end());
        }
    }
    return out;
}

LibraryMeta base_meta(const std::string& recipe, ModelKind kind,
                      const BinningScheme& scheme, const RotationSet& rotations,
                      std::uint64_t seed) {
    LibraryMeta meta;
    meta.recipe = recipe;
    meta.model = model_name(kind);
    meta.sites = rotations.sites;
    meta.rotations = rotations.rotations;
    meta.scheme = scheme;
    meta.rotation_seed = rotations.seed;
    meta.build_seed = seed;
    return meta;
}

} // namespace

// ---------------------------------------------------------------------------
// builders
// ---------------------------------------------------------------------------

Library build_ground_library(ModelKind kind, const BinningScheme& scheme, int count,
                             const RotationSet& rotations, std::uint64_t seed) {
    validate(scheme);
    if (kind == ModelKind::NiTfiPlus) {
        throw ValidationError("ground recipe covers tfi+, tfi- and xx only");
    }
    if (scheme.measure != MeasureKind::Entropy) {
        throw ValidationError("ground recipe labels by entropy");
    }
    if (count < scheme.n_bins) {
        throw ValidationError("ground recipe needs at least one state per bin");
    }
    auto samples = sample_uniform_entropy_grounds(kind, rotations.sites, count,
                                                  scheme.n_bins, scheme.e_max, seed);
    Library lib;
    lib.meta = base_meta("ground", kind, scheme, rotations, seed);
    lib.meta.params = {{"h_min", kFieldMin}, {"h_max", kFieldMax}};
    lib.entries.resize(samples.size());
    ParallelGuard guard;
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(samples.size()); ++i) {
        guard.run([&, i] {
            auto& sample = samples[static_cast<std::size_t>(i)];
            const std::uint64_t orient_seed =
                derive_seed(seed, 0x0776e700000000ULL + static_cast<std::uint64_t>(i));
            const PureState rotated = randomize_orientation(sample.state, orient_seed);
            // the label is re-verified on the state actually imaged
            const double value = half_chain_entropy(rotated).value;
            lib.entries[static_cast<std::size_t>(i)] =
                make_entry(generate_image(rotated, rotations), value, scheme,
                           {kind, sample.field, "ground", orient_seed});
        });
    }
    guard.rethrow();
    lib.meta.class_counts["ground"] = static_cast<long>(lib.entries.size());
    return lib;
}

Library build_excited_library(ModelKind kind, const BinningScheme& scheme,
                              const std::vector<double>& field_grid,
                              const RotationSet& rotations, std::uint64_t seed) {
    validate(scheme);
    if (kind != ModelKind::TfiPlus && kind != ModelKind::NiTfiPlus) {
        throw ValidationError("excited recipe covers tfi+ and ni-tfi+ only");
    }
    if (field_grid.empty()) {
        throw ValidationError("excited recipe needs a field grid");
    }
    Library lib;
    lib.meta = base_meta("excited", kind, scheme, rotations, seed);
    lib.meta.params = {{"h_points", field_grid.size()},
                       {"h_first", field_grid.front()},
                       {"h_last", field_grid.back()}};
    lib.entries = excited_entries(kind, scheme, field_grid, rotations, seed, &lib.build_log);
    lib.meta.class_counts["excited"] = static_cast<long>(lib.entries.size());
    return lib;
}

Library build_unitary_dynamics_library(const BinningScheme& scheme,
                                       const DynamicsCounts& counts,
                                       const RotationSet& rotations, std::uint64_t seed) {
    validate(scheme);
    if (scheme.measure != MeasureKind::Entropy) {
        throw ValidationError("unitary dynamics library labels by entropy");
    }
    const int sites = rotations.sites;
    Library lib;
    lib.meta = base_meta("dynamics", ModelKind::TfiPlus, scheme, rotations, seed);

    // ground class: uniform entropy over [0, ln 2] as in the ground recipe,
    // relabeled under the experiment-wide scheme
    auto grounds = sample_uniform_entropy_grounds(ModelKind::TfiPlus, sites, counts.ground,
                                                  scheme.n_bins, std::log(2.0),
                                                  derive_seed(seed, 1));
    std::vector<LabeledImage> ground_entries(grounds.size());
    ParallelGuard ground_guard;
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(grounds.size()); ++i) {
        ground_guard.run([&, i] {
            const std::uint64_t os =
                derive_seed(seed, 0x67000000ULL + static_cast<std::uint64_t>(i));
            const PureState rotated =
                randomize_orientation(grounds[static_cast<std::size_t>(i)].state, os);
            const double value = half_chain_entropy(rotated).value;
            ground_entries[static_cast<std::size_t>(i)] =
                make_entry(generate_image(rotated, rotations), value, scheme,
                           {ModelKind::TfiPlus, grounds[static_cast<std::size_t>(i)].field,
                            "ground", os});
        });
    }
    ground_guard.rethrow();
    for (auto& e : ground_entries) {
        lib.entries.push_back(std::move(e));
    }

    // excited class: enough field points that n_bins picks per point reach the quota
    const long n_fields =
        (counts.excited + scheme.n_bins - 1) / scheme.n_bins + 2;
    auto excited = excited_entries(ModelKind::TfiPlus, scheme, excited_field_grid(n_fields),
                                   rotations, derive_seed(seed, 2), &lib.build_log);
    if (static_cast<long>(excited.size()) > counts.excited) {
        excited.resize(static_cast<std::size_t>(counts.excited));
    }
    for (auto& e : excited) {
        lib.entries.push_back(std::move(e));
    }

    // random product states: zero entanglement by construction
    std::vector<LabeledImage> product_entries(static_cast<std::size_t>(counts.product));
    ParallelGuard product_guard;
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < counts.product; ++i) {
        product_guard.run([&, i] {
            const std::uint64_t ps =
                derive_seed(seed, 0x9900000000ULL + static_cast<std::uint64_t>(i));
            const PureState psi = random_product_state(sites, ps);
            const double value = half_chain_entropy(psi).value;
            product_entries[static_cast<std::size_t>(i)] =
                make_entry(generate_image(psi, rotations), value, scheme,
                           {ModelKind::TfiPlus, 0.0, "product", ps});
        });
    }
    product_guard.rethrow();
    for (auto& e : product_entries) {
        lib.entries.push_back(std::move(e));
    }

    lib.meta.class_counts["ground"] = counts.ground;
    lib.meta.class_counts["excited"] = static_cast<long>(excited.size());
    lib.meta.class_counts["product"] = counts.product;
    lib.meta.params = {{"h_excited_points", n_fields}};
    return lib;
}

Library build_dissipative_library(const BinningScheme& scheme,
                                  const DissipativeCounts& counts,
                                  const RotationSet& rotations, std::uint64_t seed) {
    validate(scheme);
    if (scheme.measure != MeasureKind::LogNegativity) {
        throw ValidationError("dissipative library labels by log-negativity");
    }
    const int sites = rotations.sites;
    constexpr double kGamma = 0.1;       // library dissipation rate
    constexpr double kSnapshotDt = 0.5 / kGamma;
    constexpr int kSnapshots = 12;       // short to long times vs the E_N decay
    Library lib;
    lib.meta = base_meta("dissipative", ModelKind::TfiPlus, scheme, rotations, seed);

    // TFI+ ground states, relabeled by negativity
    auto grounds = sample_uniform_entropy_grounds(ModelKind::TfiPlus, sites, counts.ground,
                                                  scheme.n_bins, std::log(2.0),
                                                  derive_seed(seed, 1));
    std::vector<LabeledImage> ground_entries(grounds.size());
    ParallelGuard ground_guard;
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(grounds.size()); ++i) {
        ground_guard.run([&, i] {
            const std::uint64_t os =
                derive_seed(seed, 0x67000000ULL + static_cast<std::uint64_t>(i));
            const PureState rotated =
                randomize_orientation(grounds[static_cast<std::size_t>(i)].state, os);
            const double value = log_negativity(rotated).value;
            ground_entries[static_cast<std::size_t>(i)] =
                make_entry(generate_image(rotated, rotations), value, scheme,
                           {ModelKind::TfiPlus, grounds[static_cast<std::size_t>(i)].field,
                            "ground", os});
        });
    }
    ground_guard.rethrow();
    for (auto& e : ground_entries) {
        lib.entries.push_back(std::move(e));
    }

    // TFI+ excited states labeled/selected by negativity
    const long n_fields = (counts.excited + scheme.n_bins - 1) / scheme.n_bins + 2;
    auto excited = excited_entries(ModelKind::TfiPlus, scheme, excited_field_grid(n_fields),
                                   rotations, derive_seed(seed, 2), &lib.build_log);
    if (static_cast<long>(excited.size()) > counts.excited) {
        excited.resize(static_cast<std::size_t>(counts.excited));
    }
    for (auto& e : excited) {
        lib.entries.push_back(std::move(e));
    }

    // random separable mixtures: PPT, so negativity 0
    std::vector<LabeledImage> separable_entries(static_cast<std::size_t>(counts.separable));
    ParallelGuard separable_guard;
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < counts.separable; ++i) {
        separable_guard.run([&, i] {
            const std::uint64_t ss =
                derive_seed(seed, 0xa500000000ULL + static_cast<std::uint64_t>(i));
            std::mt19937_64 gen(ss);
            std::uniform_int_distribution<int> alpha(2, 20);
            const DensityMatrix rho =
                random_separable_mixed(sites, alpha(gen), derive_seed(ss, 1));
            const double value = log_negativity(rho).value;
            separable_entries[static_cast<std::size_t>(i)] =
                make_entry(generate_image(rho, rotations), value, scheme,
                           {ModelKind::TfiPlus, 0.0, "separable", ss});
        });
    }
    separable_guard.rethrow();
    for (auto& e : separable_entries) {
        lib.entries.push_back(std::move(e));
    }

    // dissipated eigenstates: per field value, n_bins selected excited states,
    // each snapshotted at n_bins negativity levels along its decay
    const long n_fields2 = (counts.dissipated + scheme.n_bins * scheme.n_bins - 1) /
                           (scheme.n_bins * scheme.n_bins);
    const auto grid2 = excited_field_grid(n_fields2);
    std::vector<std::vector<LabeledImage>> per_field(grid2.size());
    std::vector<std::vector<std::string>> per_log(grid2.size());
    ParallelGuard dissipated_guard;
#pragma omp parallel for schedule(dynamic)
    for (long fi = 0; fi < static_cast<long>(grid2.size()); ++fi) {
        dissipated_guard.run([&, fi] {
        const double h = grid2[static_cast<std::size_t>(fi)];
        const ModelSpec spec = model_spec(ModelKind::TfiPlus, sites, h);
        const std::uint64_t fs = derive_seed(derive_seed(seed, 3), static_cast<std::uint64_t>(fi));
        auto picks = select_excited(spec, scheme.measure, scheme.n_bins, fs,
                                    &per_log[static_cast<std::size_t>(fi)]);
        LindbladConfig cfg;
        cfg.gamma = kGamma;
        cfg.dt = 0.1;
        cfg.include_hamiltonian = false;
        std::vector<double> times(kSnapshots);
        for (int k = 0; k < kSnapshots; ++k) {
            times[static_cast<std::size_t>(k)] = k * kSnapshotDt;
        }
        std::mt19937_64 gen(derive_seed(fs, 0xd15));
        for (std::size_t p = 0; p < picks.size(); ++p) {
            const auto path = evolve_lindblad_path(DensityMatrix::from_pure(picks[p].state),
                                                   spec, cfg, times);
            std::vector<double> neg(path.size());
            for (std::size_t k = 0; k < path.size(); ++k) {
                neg[k] = log_negativity(path[k]).value;
            }
            const double nmin = *std::min_element(neg.begin(), neg.end());
            const double nmax = *std::max_element(neg.begin(), neg.end());
            const double span = std::max(nmax - nmin, 1e-12);
            std::vector<std::vector<std::size_t>> buckets(
                static_cast<std::size_t>(scheme.n_bins));
            for (std::size_t k = 0; k < neg.size(); ++k) {
                int b = static_cast<int>((neg[k] - nmin) / span * scheme.n_bins);
                b = std::clamp(b, 0, scheme.n_bins - 1);
                buckets[static_cast<std::size_t>(b)].push_back(k);
            }
            for (int b = 0; b < scheme.n_bins; ++b) {
                const auto& bucket = buckets[static_cast<std::size_t>(b)];
                if (bucket.empty()) {
                    per_log[static_cast<std::size_t>(fi)].push_back(
                        "h=" + std::to_string(h) + ": trajectory bin " + std::to_string(b + 1) +
                        " never reached, skipped");
                    continue;
                }
                std::uniform_int_distribution<std::size_t> pick(0, bucket.size() - 1);
                const std::size_t k = bucket[pick(gen)];
                per_field[static_cast<std::size_t>(fi)].push_back(
                    make_entry(generate_image(path[k], rotations), neg[k], scheme,
                               {ModelKind::TfiPlus, h, "dissipated", fs}));
            }
        }
        });
    }
    dissipated_guard.rethrow();
    long dissipated_count = 0;
    for (std::size_t fi = 0; fi < grid2.size(); ++fi) {
        for (auto& e : per_field[fi]) {
            if (dissipated_count >= counts.dissipated) {
                break;
            }
            lib.entries.push_back(std::move(e));
            ++dissipated_count;
        }
        lib.build_log.insert(lib.build_log.end(), per_log[fi].begin(), per_log[fi].end());
    }

    lib.meta.class_counts["ground"] = counts.ground;
    lib.meta.class_counts["excited"] = static_cast<long>(excited.size());
    lib.meta.class_counts["separable"] = counts.separable;
    lib.meta.class_counts["dissipated"] = dissipated_count;
    lib.meta.params = {{"gamma", kGamma},
                       {"snapshot_dt", kSnapshotDt},
                       {"snapshots", kSnapshots},
                       {"lindblad_dt", 0.1}};
    return lib;
}

Library rebin(const Library& lib, const BinningScheme& scheme) {
    validate(scheme);
    if (scheme.measure != lib.meta.scheme.measure) {
        throw ValidationError("rebin: measure kind mismatch");
    }
    Library out = lib;
    out.meta.scheme = scheme;
    for (auto& entry : out.entries) {
        entry.bin = bin_label(entry.exact_value, scheme);
    }
    return out;
}

void audit_labels(const Library& lib, double fraction, std::uint64_t seed) {
    if (lib.entries.empty()) {
        throw ValidationError("audit: empty library");
    }
    std::mt19937_64 gen(seed);
    std::vector<std::size_t> indices(lib.entries.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        indices[i] = i;
    }
    std::shuffle(indices.begin(), indices.end(), gen);
    const auto n = std::min<std::size_t>(
        indices.size(), static_cast<std::size_t>(std::ceil(
                            fraction * static_cast<double>(lib.entries.size()))));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& entry = lib.entries[indices[i]];
        if (entry.bin != bin_label(entry.exact_value, lib.meta.scheme)) {
            throw ValidationError("label audit failed: stored bin " +
                                  std::to_string(entry.bin) + " vs recomputed " +
                                  std::to_string(bin_label(entry.exact_value, lib.meta.scheme)));
        }
    }
}

// ---------------------------------------------------------------------------
// file formats
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint32_t kLibraryVersion = 1;
constexpr std::uint32_t kRotationVersion = 1;

nlohmann::json meta_to_json(const LibraryMeta& meta) {
    nlohmann::json j;
    j["format_version"] = meta.format_version;
    j["recipe"] = meta.recipe;
    j["model"] = meta.model;
    j["sites"] = meta.sites;
    j["rotations"] = meta.rotations;
    j["measure"] = measure_name(meta.scheme.measure);
    j["e_max"] = meta.scheme.e_max;
    j["n_bins"] = meta.scheme.n_bins;
    j["rotation_seed"] = meta.rotation_seed;
    j["build_seed"] = meta.build_seed;
    j["boundary"] = meta.boundary;
    j["shots"] = meta.shots;
    j["class_counts"] = meta.class_counts;
    j["params"] = meta.params;
    return j;
}

LibraryMeta meta_from_json(const nlohmann::json& j) {
    LibraryMeta meta;
    meta.format_version = j.at("format_version").get<int>();
    meta.recipe = j.at("recipe").get<std::string>();
    meta.model = j.at("model").get<std::string>();
    meta.sites = j.at("sites").get<int>();
    meta.rotations = j.at("rotations").get<int>();
    meta.scheme.measure = measure_from_name(j.at("measure").get<std::string>());
    meta.scheme.e_max = j.at("e_max").get<double>();
    meta.scheme.n_bins = j.at("n_bins").get<int>();
    meta.rotation_seed = j.at("rotation_seed").get<std::uint64_t>();
    meta.build_seed = j.at("build_seed").get<std::uint64_t>();
    meta.boundary = j.at("boundary").get<std::string>();
    meta.shots = j.at("shots").get<long>();
    meta.class_counts = j.at("class_counts").get<std::map<std::string, long>>();
    meta.params = j.at("params");
    return meta;
}

} // namespace

void write_library(const Library& lib, const std::filesystem::path& dir) {
    if (lib.entries.empty()) {
        throw ValidationError("refusing to write an empty library");
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
    {
        std::ofstream manifest(dir / "manifest.json");
        if (!manifest) {
            throw IoError("cannot write manifest in " + dir.string());
        }
        manifest << meta_to_json(lib.meta).dump(2) << '\n';
    }
    ChecksumWriter out(dir / "library.qerl");
    out.write("QERL", 4);
    out.put<std::uint32_t>(kLibraryVersion);
    out.put<std::uint32_t>(static_cast<std::uint32_t>(lib.entries.size()));
    const auto rows = static_cast<std::uint32_t>(lib.entries.front().image.rotations());
    const auto cols = static_cast<std::uint32_t>(lib.entries.front().image.dim());
    out.put<std::uint32_t>(rows);
    out.put<std::uint32_t>(cols);
    std::vector<float> row(cols);
    for (const auto& entry : lib.entries) {
        if (entry.image.rotations() != rows || entry.image.dim() != cols) {
            throw ValidationError("library entries have inconsistent image shapes");
        }
        for (std::uint32_t i = 0; i < rows; ++i) {
            for (std::uint32_t j = 0; j < cols; ++j) {
                row[j] = static_cast<float>(entry.image.probs(i, j));
            }
            out.write(row.data(), sizeof(float) * cols);
        }
    }
    for (const auto& entry : lib.entries) {
        out.put<double>(entry.exact_value);
    }
    for (const auto& entry : lib.entries) {
        out.put<std::uint16_t>(static_cast<std::uint16_t>(entry.bin));
    }
    out.finish();
}

Library read_library(const std::filesystem::path& dir) {
    Library lib;
    {
        std::ifstream manifest(dir / "manifest.json");
        if (!manifest) {
            throw IoError("missing manifest.json in " + dir.string());
        }
        nlohmann::json j;
        try {
            manifest >> j;
            lib.meta = meta_from_json(j);
        } catch (const nlohmann::json::exception& e) {
            throw IoError("malformed manifest: " + std::string(e.what()));
        }
    }
    ChecksumReader in(dir / "library.qerl");
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "QERL", 4) != 0) {
        throw IoError("not a library file (bad magic)");
    }
    const auto version = in.get<std::uint32_t>();
    if (version != kLibraryVersion) {
        throw IoError("library version skew: file has v" + std::to_string(version));
    }
    const auto count = in.get<std::uint32_t>();
    const auto rows = in.get<std::uint32_t>();
    const auto cols = in.get<std::uint32_t>();
    long manifest_total = 0;
    for (const auto& [cls, n] : lib.meta.class_counts) {
        manifest_total += n;
    }
    if (manifest_total != static_cast<long>(count)) {
        throw IoError("version skew: manifest counts total " + std::to_string(manifest_total) +
                      " but blob holds " + std::to_string(count));
    }
    if (rows != static_cast<std::uint32_t>(lib.meta.rotations) ||
        cols != (std::uint32_t{1} << lib.meta.sites)) {
        throw IoError("version skew: manifest shape disagrees with blob");
    }
    lib.entries.resize(count);
    std::vector<float> row(cols);
    for (auto& entry : lib.entries) {
        entry.image.exact = lib.meta.shots == 0;
        entry.image.shots = lib.meta.shots;
        entry.image.probs.resize(rows, cols);
        for (std::uint32_t i = 0; i < rows; ++i) {
            in.read(row.data(), sizeof(float) * cols);
            for (std::uint32_t j = 0; j < cols; ++j) {
                entry.image.probs(i, j) = static_cast<double>(row[j]);
            }
        }
    }
    for (auto& entry : lib.entries) {
        entry.exact_value = in.get<double>();
    }
    for (auto& entry : lib.entries) {
        entry.bin = in.get<std::uint16_t>();
    }
    in.verify();
    return lib;
}

void write_rotations(const RotationSet& set, const std::filesystem::path& file) {
    ChecksumWriter out(file);
    out.write("QERR", 4);
    out.put<std::uint32_t>(kRotationVersion);
    out.put<std::uint32_t>(static_cast<std::uint32_t>(set.rotations));
    out.put<std::uint32_t>(static_cast<std::uint32_t>(set.sites));
    out.put<std::uint64_t>(set.seed);
    for (int i = 0; i < set.rotations; ++i) {
        for (int l = 1; l <= set.sites; ++l) {
            const auto& u = set.local(i, l).u;
            for (int r = 0; r < 2; ++r) {
                for (int c = 0; c < 2; ++c) {
                    out.put<double>(u(r, c).real());
                    out.put<double>(u(r, c).imag());
                }
            }
        }
    }
    out.finish();
}

RotationSet read_rotations(const std::filesystem::path& file) {
    ChecksumReader in(file);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "QERR", 4) != 0) {
        throw IoError("not a rotation file (bad magic)");
    }
    const auto version = in.get<std::uint32_t>();
    if (version != kRotationVersion) {
        throw IoError("rotation file version skew: v" + std::to_string(version));
    }
    RotationSet set;
    set.rotations = static_cast<int>(in.get<std::uint32_t>());
    set.sites = static_cast<int>(in.get<std::uint32_t>());
    set.seed = in.get<std::uint64_t>();
    if (set.rotations < 1 || set.sites < 1 || set.sites > 24) {
        throw IoError("rotation file has implausible shape");
    }
    set.locals.resize(static_cast<std::size_t>(set.rotations) * set.sites);
    for (int i = 0; i < set.rotations; ++i) {
        for (int l = 1; l <= set.sites; ++l) {
            Eigen::Matrix2cd u;
            for (int r = 0; r < 2; ++r) {
                for (int c = 0; c < 2; ++c) {
                    const double re = in.get<double>();
                    const double im = in.get<double>();
                    u(r, c) = Complex(re, im);
                }
            }
            set.local(i, l).u = u;
        }
    }
    in.verify();
    for (int i = 0; i < set.rotations; ++i) {
        for (int l = 1; l <= set.sites; ++l) {
            const auto& u = set.local(i, l).u;
            if ((u.adjoint() * u - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() > 1e-12) {
                throw ValidationError("rotation file entry is not unitary");
            }
        }
    }
    return set;
}

} // namespace qer
