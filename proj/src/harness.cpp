#include "qer/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace qer {

double ErrorStats::p_delta(int delta) const {
    const auto it = histogram.find(delta);
    if (it == histogram.end() || count == 0) {
        return 0.0;
    }
    return static_cast<double>(it->second) / static_cast<double>(count);
}

double ErrorStats::p_abs_delta_le(int bound) const {
    long hits = 0;
    for (const auto& [delta, n] : histogram) {
        if (std::abs(delta) <= bound) {
            hits += n;
        }
    }
    return count == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(count);
}

double ErrorStats::mean_delta() const {
    double sum = 0.0;
    for (const auto& [delta, n] : histogram) {
        sum += static_cast<double>(delta) * static_cast<double>(n);
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

namespace {

ErrorStats stats_from_deltas(const std::vector<int>& deltas, int n_bins) {
    ErrorStats stats;
    stats.n_bins = n_bins;
    stats.count = static_cast<long>(deltas.size());
    double sum = 0.0, sum2 = 0.0;
    for (const int d : deltas) {
        ++stats.histogram[d];
        const double rescaled = static_cast<double>(d) / n_bins;
        sum += rescaled;
        sum2 += rescaled * rescaled;
    }
    if (stats.count > 0) {
        stats.mu = sum / static_cast<double>(stats.count);
        stats.sigma = std::sqrt(std::max(0.0, sum2 / static_cast<double>(stats.count) -
                                                  stats.mu * stats.mu));
    }
    return stats;
}

} // namespace

ErrorStats evaluate_with_predictor(const BinPredictor& predictor, const Library& test) {
    if (test.entries.empty()) {
        throw ValidationError("evaluate: empty test library");
    }
    std::vector<int> deltas(test.entries.size());
    ParallelGuard guard;
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(test.entries.size()); ++i) {
        guard.run([&, i] {
            const auto& entry = test.entries[static_cast<std::size_t>(i)];
            deltas[static_cast<std::size_t>(i)] = entry.bin - predictor(entry.image);
        });
    }
    guard.rethrow();
    return stats_from_deltas(deltas, test.meta.scheme.n_bins);
}

ErrorStats evaluate(const NetworkParams& params, const Library& test) {
    if (params.config.n_outputs != test.meta.scheme.n_bins) {
        throw ValidationError("evaluate: network outputs do not match the library bins");
    }
    if (params.scheme.n_bins != 0 &&
        (params.scheme.measure != test.meta.scheme.measure ||
         std::abs(params.scheme.e_max - test.meta.scheme.e_max) > 1e-12)) {
        throw ValidationError("evaluate: network was trained against a different scheme");
    }
    return evaluate_with_predictor(
        [&params](const StatImage& image) { return predict_bin(params, image); }, test);
}

std::vector<GridCell> cross_model_grid(std::span<const GridInput> inputs,
                                       const NetworkConfig& config_template,
                                       const TrainConfig& train_cfg) {
    if (inputs.empty()) {
        throw ValidationError("cross_model_grid: no classes given");
    }
    std::vector<NetworkParams> trained;
    trained.reserve(inputs.size());
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        if (inputs[k].train == nullptr || inputs[k].test == nullptr) {
            throw ValidationError("cross_model_grid: missing library for " +
                                  model_name(inputs[k].kind));
        }
        NetworkConfig config = config_template;
        config.n_outputs = inputs[k].train->meta.scheme.n_bins;
        TrainConfig cfg = train_cfg;
        cfg.seed = derive_seed(train_cfg.seed, k);
        const NetworkParams initial = init_params(config, derive_seed(cfg.seed, 0xc0));
        trained.push_back(train(initial, *inputs[k].train, cfg).params);
    }
    std::vector<GridCell> cells;
    for (std::size_t r = 0; r < inputs.size(); ++r) {
        for (std::size_t c = 0; c < inputs.size(); ++c) {
            GridCell cell;
            cell.train_kind = inputs[r].kind;
            cell.test_kind = inputs[c].kind;
            cell.stats = evaluate(trained[r], *inputs[c].test);
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

std::vector<NbinPoint> nbin_sweep(const Library& train_lib, const Library& test_lib,
                                  std::span<const int> nbin_values,
                                  const NetworkConfig& config_template,
                                  const TrainConfig& train_cfg) {
    std::vector<NbinPoint> points;
    for (std::size_t k = 0; k < nbin_values.size(); ++k) {
        const int n_bins = nbin_values[k];
        BinningScheme scheme = train_lib.meta.scheme;
        scheme.n_bins = n_bins;
        const Library train_rebinned = rebin(train_lib, scheme);
        const Library test_rebinned = rebin(test_lib, scheme);
        NetworkConfig config = config_template;
        config.n_outputs = n_bins;
        TrainConfig cfg = train_cfg;
        cfg.seed = derive_seed(train_cfg.seed, 0x5beeb + k);
        const NetworkParams initial = init_params(config, derive_seed(cfg.seed, 0xc0));
        const TrainResult result = train(initial, train_rebinned, cfg);
        NbinPoint point;
        point.n_bins = n_bins;
        point.stats = evaluate(result.params, test_rebinned);
        points.push_back(std::move(point));
    }
    return points;
}

std::vector<double> default_time_grid() {
    std::vector<double> times(60);
    const double lo = std::log(0.1), hi = std::log(1000.0);
    for (int i = 0; i < 60; ++i) {
        times[static_cast<std::size_t>(i)] = std::exp(lo + (hi - lo) * i / 59.0);
    }
    return times;
}

double DynamicsEval::mean_abs_delta(std::size_t shot_index) const {
    double sum = 0.0;
    long n = 0;
    for (const auto& per_time : delta[shot_index]) {
        for (const int d : per_time) {
            sum += std::abs(d);
            ++n;
        }
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

DynamicsEval evaluate_dynamics(const NetworkParams& params, const EvolutionConfig& evolution,
                               const RotationSet& rotations, const BinningScheme& scheme,
                               std::span<const long> shot_levels) {
    validate(scheme);
    if (evolution.ensemble < 1 || evolution.times.empty()) {
        throw ValidationError("dynamics evaluation needs members and checkpoint times");
    }
    if (!std::is_sorted(evolution.times.begin(), evolution.times.end())) {
        throw ValidationError("dynamics times must be ascending");
    }
    if (params.config.n_outputs != scheme.n_bins) {
        throw ValidationError("dynamics: network outputs do not match the scheme");
    }
    if (params.scheme.n_bins != 0 &&
        (params.scheme.measure != scheme.measure ||
         std::abs(params.scheme.e_max - scheme.e_max) > 1e-12)) {
        throw ValidationError("dynamics: network was trained against a different scheme");
    }

    DynamicsEval eval;
    eval.times = evolution.times;
    eval.shot_levels.assign(1, 0L);
    eval.shot_levels.insert(eval.shot_levels.end(), shot_levels.begin(), shot_levels.end());
    eval.ensemble = evolution.ensemble;
    eval.n_bins = scheme.n_bins;

    const std::size_t n_levels = eval.shot_levels.size();
    const std::size_t n_times = eval.times.size();
    const auto n_members = static_cast<std::size_t>(evolution.ensemble);

    // exact[member][time]; bins[level][member][time]
    std::vector<std::vector<double>> exact(n_members, std::vector<double>(n_times));
    std::vector<std::vector<std::vector<int>>> predicted(
        n_levels, std::vector<std::vector<int>>(n_members, std::vector<int>(n_times)));
    std::vector<std::vector<std::vector<int>>> true_bin_store(
        1, std::vector<std::vector<int>>(n_members, std::vector<int>(n_times)));

    const bool unitary = evolution.gamma == 0.0;
    Spectrum spectrum;
    if (unitary) {
        spectrum = diagonalize(evolution.model);
    }

    ParallelGuard guard;
#pragma omp parallel for schedule(dynamic)
    for (long m = 0; m < evolution.ensemble; ++m) {
        guard.run([&, m] {
        const std::uint64_t member_seed =
            derive_seed(evolution.seed, static_cast<std::uint64_t>(m));
        const PureState initial = random_product_state(evolution.model.sites, member_seed);

        std::vector<StatImage> images;
        images.reserve(n_times);
        if (unitary) {
            for (std::size_t t = 0; t < n_times; ++t) {
                const PureState psi = evolve_unitary(initial, spectrum, eval.times[t]);
                exact[static_cast<std::size_t>(m)][t] = measure_value(psi, scheme.measure);
                images.push_back(generate_image(psi, rotations));
            }
        } else {
            LindbladConfig cfg;
            cfg.gamma = evolution.gamma;
            cfg.dt = evolution.dt;
            cfg.include_hamiltonian = true;
            const auto path = evolve_lindblad_path(DensityMatrix::from_pure(initial),
                                                   evolution.model, cfg, eval.times);
            for (std::size_t t = 0; t < n_times; ++t) {
                exact[static_cast<std::size_t>(m)][t] = measure_value(path[t], scheme.measure);
                images.push_back(generate_image(path[t], rotations));
            }
        }

        for (std::size_t t = 0; t < n_times; ++t) {
            true_bin_store[0][static_cast<std::size_t>(m)][t] =
                bin_label(std::min(exact[static_cast<std::size_t>(m)][t], scheme.e_max), scheme);
            for (std::size_t lv = 0; lv < n_levels; ++lv) {
                const long shots = eval.shot_levels[lv];
                if (shots == 0) {
                    predicted[lv][static_cast<std::size_t>(m)][t] =
                        predict_bin(params, images[t]);
                } else {
                    const StatImage noisy = apply_shot_noise(
                        images[t], shots,
                        derive_seed(member_seed, 0x1000 * lv + t));
                    predicted[lv][static_cast<std::size_t>(m)][t] =
                        predict_bin(params, noisy);
                }
            }
        }
        });
    }
    guard.rethrow();

    eval.delta.assign(n_levels, std::vector<std::vector<int>>(
                                    n_times, std::vector<int>(n_members)));
    eval.mu_t.assign(n_levels, std::vector<double>(n_times, 0.0));
    eval.sigma_t.assign(n_levels, std::vector<double>(n_times, 0.0));
    eval.predicted_mid.assign(n_levels, std::vector<double>(n_times, 0.0));
    eval.exact_mean.assign(n_times, 0.0);
    const double width = scheme.bin_width();
    for (std::size_t t = 0; t < n_times; ++t) {
        double esum = 0.0;
        for (std::size_t m = 0; m < n_members; ++m) {
            esum += exact[m][t];
        }
        eval.exact_mean[t] = esum / static_cast<double>(n_members);
        for (std::size_t lv = 0; lv < n_levels; ++lv) {
            double sum = 0.0, sum2 = 0.0, mid = 0.0;
            for (std::size_t m = 0; m < n_members; ++m) {
                const int d = true_bin_store[0][m][t] - predicted[lv][m][t];
                eval.delta[lv][t][m] = d;
                const double rescaled = static_cast<double>(d) / scheme.n_bins;
                sum += rescaled;
                sum2 += rescaled * rescaled;
                mid += (predicted[lv][m][t] - 0.5) * width;
            }
            const double mean = sum / static_cast<double>(n_members);
            eval.mu_t[lv][t] = mean;
            eval.sigma_t[lv][t] = std::sqrt(
                std::max(0.0, sum2 / static_cast<double>(n_members) - mean * mean));
            eval.predicted_mid[lv][t] = mid / static_cast<double>(n_members);
        }
    }
    return eval;
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

namespace {

std::ofstream open_out(const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) {
        throw IoError("cannot write " + file.string());
    }
    return out;
}

} // namespace

void write_errors_csv(const ErrorStats& stats, const std::filesystem::path& file) {
    auto out = open_out(file);
    out << "delta,count\n";
    for (const auto& [delta, count] : stats.histogram) {
        out << delta << ',' << count << '\n';
    }
}

void write_stats_csv(std::span<const NbinPoint> points, const std::filesystem::path& file) {
    auto out = open_out(file);
    out << "nbin,mu,sigma\n";
    char line[96];
    for (const auto& point : points) {
        std::snprintf(line, sizeof(line), "%d,%.9g,%.9g\n", point.n_bins, point.stats.mu,
                      point.stats.sigma);
        out << line;
    }
}

void write_grid_csv(std::span<const GridCell> cells, const std::filesystem::path& file) {
    auto out = open_out(file);
    out << "train_kind,test_kind,mu,sigma\n";
    char line[128];
    for (const auto& cell : cells) {
        std::snprintf(line, sizeof(line), "%s,%s,%.9g,%.9g\n",
                      model_name(cell.train_kind).c_str(), model_name(cell.test_kind).c_str(),
                      cell.stats.mu, cell.stats.sigma);
        out << line;
    }
}

void write_dynamics_csv(const DynamicsEval& eval, const std::filesystem::path& file) {
    auto out = open_out(file);
    out << "t,exact,predicted_mid,mu_t,sigma_t,shots_M,ensemble_n\n";
    char line[192];
    for (std::size_t lv = 0; lv < eval.shot_levels.size(); ++lv) {
        for (std::size_t t = 0; t < eval.times.size(); ++t) {
            std::snprintf(line, sizeof(line), "%.9g,%.9g,%.9g,%.9g,%.9g,%ld,%d\n",
                          eval.times[t], eval.exact_mean[t], eval.predicted_mid[lv][t],
                          eval.mu_t[lv][t], eval.sigma_t[lv][t], eval.shot_levels[lv],
                          eval.ensemble);
            out << line;
        }
    }
}

void write_ppm(const StatImage& image, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + file.string());
    }
    const auto rows = static_cast<int>(image.rotations());
    const auto cols = static_cast<int>(image.dim());
    out << "P6\n" << cols << ' ' << rows << "\n255\n";
    const double peak = std::max(image.probs.maxCoeff(), 1e-300);
    for (int y = 0; y < rows; ++y) {
        for (int x = 0; x < cols; ++x) {
            const auto level = static_cast<unsigned char>(
                std::lround(255.0 * image.probs(y, x) / peak));
            const unsigned char rgb[3] = {level, level, level};
            out.write(reinterpret_cast<const char*>(rgb), 3);
        }
    }
    if (!out) {
        throw IoError("write failed: " + file.string());
    }
}

std::pair<int, int> read_ppm_extents(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + file.string());
    }
    std::string magic;
    int cols = 0, rows = 0;
    in >> magic >> cols >> rows;
    if (magic != "P6" || cols < 1 || rows < 1) {
        throw IoError("not a P6 pixmap: " + file.string());
    }
    return {rows, cols};
}

} // namespace qer
