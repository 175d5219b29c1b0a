#include "qer/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "qer/checksum_io.hpp"

namespace qer {

void validate(const NetworkConfig& c) {
    if (c.in_rows < 1 || c.in_cols < 1 || c.conv1_maps < 1 || c.conv2_maps < 1 ||
        c.hidden_units < 1 || c.n_outputs < 2 || c.k1_h < 1 || c.k1_w < 1 || c.s1_w < 1 ||
        c.k2_h < 1 || c.k2_w < 1 || c.s2_w < 1) {
        throw ValidationError("network config fields must be positive (>=2 outputs)");
    }
    if (c.k1_h > c.in_rows || c.k1_w > c.in_cols) {
        throw ValidationError("first kernel exceeds the input extent");
    }
    if (c.out1_h() < 1 || c.out1_w() < 1 || c.out2_h() < 1 || c.out2_w() < 1) {
        throw ValidationError("convolution stages shrink the image away");
    }
}

bool operator==(const NetworkConfig& a, const NetworkConfig& b) {
    return a.in_rows == b.in_rows && a.in_cols == b.in_cols && a.conv1_maps == b.conv1_maps &&
           a.conv2_maps == b.conv2_maps && a.k1_h == b.k1_h && a.k1_w == b.k1_w &&
           a.s1_w == b.s1_w && a.k2_h == b.k2_h && a.k2_w == b.k2_w && a.s2_w == b.s2_w &&
           a.hidden_units == b.hidden_units && a.n_outputs == b.n_outputs;
}

NetworkConfig default_network_config(int rotations, int dim, int n_bins) {
    NetworkConfig c;
    c.in_rows = rotations;
    c.in_cols = dim;
    c.k1_h = 1;
    c.k1_w = dim;
    c.s1_w = 1;
    c.k2_h = rotations;
    c.k2_w = 1;
    c.s2_w = 1;
    c.n_outputs = n_bins;
    validate(c);
    return c;
}

TensorLayout tensor_layout(const NetworkConfig& c) {
    TensorLayout t{};
    std::size_t pos = 0;
    t.conv1_w = pos;
    pos += static_cast<std::size_t>(c.conv1_maps) * c.k1_h * c.k1_w;
    t.conv1_b = pos;
    pos += static_cast<std::size_t>(c.conv1_maps);
    t.conv2_w = pos;
    pos += static_cast<std::size_t>(c.conv2_maps) * c.conv1_maps * c.k2_h * c.k2_w;
    t.conv2_b = pos;
    pos += static_cast<std::size_t>(c.conv2_maps);
    t.dense_w = pos;
    pos += static_cast<std::size_t>(c.hidden_units) * c.flat();
    t.dense_b = pos;
    pos += static_cast<std::size_t>(c.hidden_units);
    t.out_w = pos;
    pos += static_cast<std::size_t>(c.n_outputs) * c.hidden_units;
    t.out_b = pos;
    pos += static_cast<std::size_t>(c.n_outputs);
    t.total = pos;
    return t;
}

NetworkParams init_params(const NetworkConfig& config, std::uint64_t seed) {
    validate(config);
    const TensorLayout layout = tensor_layout(config);
    NetworkParams params;
    params.config = config;
    params.values.assign(layout.total, 0.0);
    std::mt19937_64 gen(seed);
    const auto fill_uniform = [&](std::size_t begin, std::size_t end, double fan_in) {
        const double bound = std::sqrt(6.0 / fan_in);
        std::uniform_real_distribution<double> uni(-bound, bound);
        for (std::size_t i = begin; i < end; ++i) {
            params.values[i] = uni(gen);
        }
    };
    fill_uniform(layout.conv1_w, layout.conv1_b, config.k1_h * config.k1_w);
    fill_uniform(layout.conv2_w, layout.conv2_b,
                 static_cast<double>(config.conv1_maps) * config.k2_h * config.k2_w);
    fill_uniform(layout.dense_w, layout.dense_b, config.flat());
    fill_uniform(layout.out_w, layout.out_b, config.hidden_units);
    // images are nonnegative, so a zero-bias rectifier unit whose kernel sums
    // negative would start (and stay) dead; a small positive bias keeps every
    // unit trainable
    const auto bias_nudge = [&params](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            params.values[i] = 0.01;
        }
    };
    bias_nudge(layout.conv1_b, layout.conv2_w);
    bias_nudge(layout.conv2_b, layout.dense_w);
    bias_nudge(layout.dense_b, layout.out_w);
    return params;
}

namespace {

struct Workspace {
    std::vector<double> input;  // scaled image, row-major
    std::vector<double> act1;   // post-relu conv1 maps
    std::vector<double> act2;   // post-relu conv2 maps
    std::vector<double> hidden; // post-relu dense
    std::vector<double> logits;
    std::vector<double> probs;
    std::vector<double> d_act1;
    std::vector<double> d_act2;
    std::vector<double> d_hidden;

    explicit Workspace(const NetworkConfig& c)
        : input(static_cast<std::size_t>(c.in_rows) * c.in_cols),
          act1(static_cast<std::size_t>(c.conv1_maps) * c.out1_h() * c.out1_w()),
          act2(static_cast<std::size_t>(c.flat())),
          hidden(static_cast<std::size_t>(c.hidden_units)),
          logits(static_cast<std::size_t>(c.n_outputs)),
          probs(static_cast<std::size_t>(c.n_outputs)),
          d_act1(act1.size()), d_act2(act2.size()), d_hidden(hidden.size()) {}
};

void load_input(const NetworkConfig& c, const StatImage& image, std::vector<double>& input) {
    if (image.rotations() != c.in_rows || image.dim() != c.in_cols) {
        throw ValidationError("image shape does not match the network input");
    }
    // raw probabilities are O(1/D); scaling by D makes the entries O(1)
    const double scale = static_cast<double>(c.in_cols);
    for (int y = 0; y < c.in_rows; ++y) {
        for (int x = 0; x < c.in_cols; ++x) {
            input[static_cast<std::size_t>(y) * c.in_cols + x] = scale * image.probs(y, x);
        }
    }
}

void forward_pass(const NetworkParams& params, Workspace& ws) {
    const NetworkConfig& c = params.config;
    const TensorLayout lt = tensor_layout(c);
    const double* v = params.values.data();
    const int o1h = c.out1_h(), o1w = c.out1_w();
    const int o2h = c.out2_h(), o2w = c.out2_w();

    for (int m = 0; m < c.conv1_maps; ++m) {
        const double* w = v + lt.conv1_w + static_cast<std::size_t>(m) * c.k1_h * c.k1_w;
        const double bias = v[lt.conv1_b + m];
        for (int y = 0; y < o1h; ++y) {
            for (int x = 0; x < o1w; ++x) {
                double acc = bias;
                for (int r = 0; r < c.k1_h; ++r) {
                    const double* in_row = ws.input.data() +
                                           static_cast<std::size_t>(y + r) * c.in_cols +
                                           static_cast<std::size_t>(x) * c.s1_w;
                    const double* w_row = w + static_cast<std::size_t>(r) * c.k1_w;
                    for (int col = 0; col < c.k1_w; ++col) {
                        acc += w_row[col] * in_row[col];
                    }
                }
                ws.act1[(static_cast<std::size_t>(m) * o1h + y) * o1w + x] =
                    acc > 0.0 ? acc : 0.0;
            }
        }
    }

    for (int n = 0; n < c.conv2_maps; ++n) {
        const double bias = v[lt.conv2_b + n];
        for (int y = 0; y < o2h; ++y) {
            for (int x = 0; x < o2w; ++x) {
                double acc = bias;
                for (int m = 0; m < c.conv1_maps; ++m) {
                    const double* w = v + lt.conv2_w +
                                      ((static_cast<std::size_t>(n) * c.conv1_maps + m) *
                                       c.k2_h) * c.k2_w;
                    for (int r = 0; r < c.k2_h; ++r) {
                        const double* a_row = ws.act1.data() +
                                              (static_cast<std::size_t>(m) * o1h + y + r) * o1w +
                                              static_cast<std::size_t>(x) * c.s2_w;
                        const double* w_row = w + static_cast<std::size_t>(r) * c.k2_w;
                        for (int col = 0; col < c.k2_w; ++col) {
                            acc += w_row[col] * a_row[col];
                        }
                    }
                }
                ws.act2[(static_cast<std::size_t>(n) * o2h + y) * o2w + x] =
                    acc > 0.0 ? acc : 0.0;
            }
        }
    }

    const std::size_t flat = ws.act2.size();
    for (int h = 0; h < c.hidden_units; ++h) {
        const double* w = v + lt.dense_w + static_cast<std::size_t>(h) * flat;
        double acc = v[lt.dense_b + h];
        for (std::size_t f = 0; f < flat; ++f) {
            acc += w[f] * ws.act2[f];
        }
        ws.hidden[static_cast<std::size_t>(h)] = acc > 0.0 ? acc : 0.0;
    }

    for (int o = 0; o < c.n_outputs; ++o) {
        const double* w = v + lt.out_w + static_cast<std::size_t>(o) * c.hidden_units;
        double acc = v[lt.out_b + o];
        for (int h = 0; h < c.hidden_units; ++h) {
            acc += w[h] * ws.hidden[static_cast<std::size_t>(h)];
        }
        ws.logits[static_cast<std::size_t>(o)] = acc;
    }

    const double peak = *std::max_element(ws.logits.begin(), ws.logits.end());
    double norm = 0.0;
    for (int o = 0; o < c.n_outputs; ++o) {
        ws.probs[static_cast<std::size_t>(o)] =
            std::exp(ws.logits[static_cast<std::size_t>(o)] - peak);
        norm += ws.probs[static_cast<std::size_t>(o)];
    }
    for (int o = 0; o < c.n_outputs; ++o) {
        ws.probs[static_cast<std::size_t>(o)] /= norm;
    }
}

// Accumulates (does not zero) raw per-sample gradients into `grad`; returns
// the sample's cross-entropy. Overwrites ws.logits with d_logits.
double backward_pass(const NetworkParams& params, Workspace& ws, int label_index,
                     std::vector<double>& grad) {
    const NetworkConfig& c = params.config;
    const TensorLayout lt = tensor_layout(c);
    const double* v = params.values.data();
    double* g = grad.data();
    const int o1h = c.out1_h(), o1w = c.out1_w();
    const int o2h = c.out2_h(), o2w = c.out2_w();
    const std::size_t flat = ws.act2.size();

    const double p_true = std::max(ws.probs[static_cast<std::size_t>(label_index)], 1e-300);
    const double loss = -std::log(p_true);

    for (int o = 0; o < c.n_outputs; ++o) {
        const double dlogit =
            ws.probs[static_cast<std::size_t>(o)] - (o == label_index ? 1.0 : 0.0);
        ws.logits[static_cast<std::size_t>(o)] = dlogit;
        g[lt.out_b + o] += dlogit;
        double* gw = g + lt.out_w + static_cast<std::size_t>(o) * c.hidden_units;
        for (int h = 0; h < c.hidden_units; ++h) {
            gw[h] += dlogit * ws.hidden[static_cast<std::size_t>(h)];
        }
    }
    for (int h = 0; h < c.hidden_units; ++h) {
        double acc = 0.0;
        for (int o = 0; o < c.n_outputs; ++o) {
            acc += v[lt.out_w + static_cast<std::size_t>(o) * c.hidden_units + h] *
                   ws.logits[static_cast<std::size_t>(o)];
        }
        ws.d_hidden[static_cast<std::size_t>(h)] =
            ws.hidden[static_cast<std::size_t>(h)] > 0.0 ? acc : 0.0;
    }

    std::fill(ws.d_act2.begin(), ws.d_act2.end(), 0.0);
    for (int h = 0; h < c.hidden_units; ++h) {
        const double dh = ws.d_hidden[static_cast<std::size_t>(h)];
        if (dh == 0.0) {
            continue;
        }
        g[lt.dense_b + h] += dh;
        double* gw = g + lt.dense_w + static_cast<std::size_t>(h) * flat;
        const double* w = v + lt.dense_w + static_cast<std::size_t>(h) * flat;
        for (std::size_t f = 0; f < flat; ++f) {
            gw[f] += dh * ws.act2[f];
            ws.d_act2[f] += dh * w[f];
        }
    }
    for (std::size_t f = 0; f < flat; ++f) {
        if (ws.act2[f] <= 0.0) {
            ws.d_act2[f] = 0.0;
        }
    }

    std::fill(ws.d_act1.begin(), ws.d_act1.end(), 0.0);
    for (int n = 0; n < c.conv2_maps; ++n) {
        for (int y = 0; y < o2h; ++y) {
            for (int x = 0; x < o2w; ++x) {
                const double da = ws.d_act2[(static_cast<std::size_t>(n) * o2h + y) * o2w + x];
                if (da == 0.0) {
                    continue;
                }
                g[lt.conv2_b + n] += da;
                for (int m = 0; m < c.conv1_maps; ++m) {
                    const std::size_t wbase =
                        lt.conv2_w +
                        ((static_cast<std::size_t>(n) * c.conv1_maps + m) * c.k2_h) * c.k2_w;
                    for (int r = 0; r < c.k2_h; ++r) {
                        const std::size_t abase =
                            (static_cast<std::size_t>(m) * o1h + y + r) * o1w +
                            static_cast<std::size_t>(x) * c.s2_w;
                        for (int col = 0; col < c.k2_w; ++col) {
                            g[wbase + static_cast<std::size_t>(r) * c.k2_w + col] +=
                                da * ws.act1[abase + col];
                            ws.d_act1[abase + col] +=
                                da * v[wbase + static_cast<std::size_t>(r) * c.k2_w + col];
                        }
                    }
                }
            }
        }
    }
    for (std::size_t i = 0; i < ws.act1.size(); ++i) {
        if (ws.act1[i] <= 0.0) {
            ws.d_act1[i] = 0.0;
        }
    }

    for (int m = 0; m < c.conv1_maps; ++m) {
        for (int y = 0; y < o1h; ++y) {
            for (int x = 0; x < o1w; ++x) {
                const double da = ws.d_act1[(static_cast<std::size_t>(m) * o1h + y) * o1w + x];
                if (da == 0.0) {
                    continue;
                }
                g[lt.conv1_b + m] += da;
                const std::size_t wbase =
                    lt.conv1_w + static_cast<std::size_t>(m) * c.k1_h * c.k1_w;
                for (int r = 0; r < c.k1_h; ++r) {
                    const double* in_row = ws.input.data() +
                                           static_cast<std::size_t>(y + r) * c.in_cols +
                                           static_cast<std::size_t>(x) * c.s1_w;
                    double* gw = g + wbase + static_cast<std::size_t>(r) * c.k1_w;
                    for (int col = 0; col < c.k1_w; ++col) {
                        gw[col] += da * in_row[col];
                    }
                }
            }
        }
    }
    return loss;
}

} // namespace

Eigen::VectorXd forward(const NetworkParams& params, const StatImage& image) {
    validate(params.config);
    Workspace ws(params.config);
    load_input(params.config, image, ws.input);
    forward_pass(params, ws);
    return Eigen::Map<const Eigen::VectorXd>(ws.probs.data(),
                                             static_cast<Eigen::Index>(ws.probs.size()));
}

int predict_bin(const NetworkParams& params, const StatImage& image) {
    const Eigen::VectorXd probs = forward(params, image);
    Eigen::Index best = 0;
    probs.maxCoeff(&best); // first maximum: ties go to the lower bin
    return static_cast<int>(best) + 1;
}

double loss_and_grad(const NetworkParams& params,
                     std::span<const StatImage* const> images,
                     std::span<const int> labels, std::vector<double>& grad) {
    if (images.empty() || images.size() != labels.size()) {
        throw ValidationError("loss_and_grad: empty batch or label mismatch");
    }
    const TensorLayout lt = tensor_layout(params.config);
    grad.assign(lt.total, 0.0);
    Workspace ws(params.config);
    double total = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (labels[i] < 1 || labels[i] > params.config.n_outputs) {
            throw ValidationError("label " + std::to_string(labels[i]) + " out of range");
        }
        load_input(params.config, *images[i], ws.input);
        forward_pass(params, ws);
        total += backward_pass(params, ws, labels[i] - 1, grad);
    }
    const double inv = 1.0 / static_cast<double>(images.size());
    for (double& gv : grad) {
        gv *= inv;
    }
    return total * inv;
}

void validate(const TrainConfig& cfg) {
    if (cfg.learning_rate <= 0.0 || cfg.batch_size < 1 || cfg.epochs < 1 ||
        cfg.beta1 <= 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 <= 0.0 || cfg.beta2 >= 1.0) {
        throw ValidationError("train config fields must be positive (betas in (0,1))");
    }
    if (cfg.validation_fraction <= 0.0 || cfg.validation_fraction > 0.5) {
        throw ValidationError("validation fraction must lie in (0, 0.5]");
    }
}

TrainResult train(const NetworkParams& initial, const Library& library,
                  const TrainConfig& cfg) {
    validate(initial.config);
    validate(cfg);
    if (library.entries.empty()) {
        throw ValidationError("cannot train on an empty library");
    }
    if (library.meta.scheme.n_bins != initial.config.n_outputs) {
        throw ValidationError("library has " + std::to_string(library.meta.scheme.n_bins) +
                              " bins but the network has " +
                              std::to_string(initial.config.n_outputs) + " outputs");
    }
    const NetworkConfig& c = initial.config;
    const TensorLayout lt = tensor_layout(c);
    const auto n = static_cast<long>(library.entries.size());
    if (n < 4) {
        throw ValidationError("library too small to split into train and validation");
    }

    std::vector<std::vector<double>> inputs(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    ParallelGuard guard;
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
        guard.run([&, i] {
            inputs[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(c.in_rows) *
                                                       c.in_cols);
            load_input(c, library.entries[static_cast<std::size_t>(i)].image,
                       inputs[static_cast<std::size_t>(i)]);
            const int bin = library.entries[static_cast<std::size_t>(i)].bin;
            if (bin < 1 || bin > c.n_outputs) {
                throw ValidationError("library label " + std::to_string(bin) +
                                      " outside the configured outputs");
            }
            labels[static_cast<std::size_t>(i)] = bin;
        });
    }
    guard.rethrow();

    std::mt19937_64 gen(cfg.seed);
    std::vector<long> order(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        order[static_cast<std::size_t>(i)] = i;
    }
    std::shuffle(order.begin(), order.end(), gen);
    const long n_val = std::clamp<long>(
        std::lround(cfg.validation_fraction * static_cast<double>(n)), 1, n - 1);
    std::vector<long> val_idx(order.begin(), order.begin() + n_val);
    std::vector<long> train_idx(order.begin() + n_val, order.end());

    NetworkParams params = initial;
    params.scheme = library.meta.scheme;
    std::vector<double> adam_m(lt.total, 0.0), adam_v(lt.total, 0.0);
    long adam_t = 0;

    // fixed-size chunks keep the gradient reduction order independent of the
    // thread count
    constexpr int kChunk = 8;
    std::vector<Workspace> chunk_ws;
    std::vector<std::vector<double>> chunk_grad(kChunk);
    std::vector<double> chunk_loss(kChunk, 0.0);
    for (int s = 0; s < kChunk; ++s) {
        chunk_ws.emplace_back(c);
        chunk_grad[static_cast<std::size_t>(s)].assign(lt.total, 0.0);
    }
    std::vector<double> grad(lt.total, 0.0);

    TrainResult result;
    result.params = params;
    double best_acc = -1.0;

    const auto evaluate_val = [&](const NetworkParams& p) {
        std::vector<int> hits(val_idx.size(), 0);
#pragma omp parallel
        {
            Workspace ws(c);
#pragma omp for schedule(static)
            for (long i = 0; i < static_cast<long>(val_idx.size()); ++i) {
                const long idx = val_idx[static_cast<std::size_t>(i)];
                ws.input = inputs[static_cast<std::size_t>(idx)];
                forward_pass(p, ws);
                const auto best = static_cast<int>(
                    std::max_element(ws.probs.begin(), ws.probs.end()) - ws.probs.begin());
                hits[static_cast<std::size_t>(i)] =
                    (best + 1 == labels[static_cast<std::size_t>(idx)]);
            }
        }
        long correct = 0;
        for (const int h : hits) {
            correct += h;
        }
        return static_cast<double>(correct) / static_cast<double>(val_idx.size());
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), gen);
        double loss_sum = 0.0;
        long sample_count = 0;
        for (std::size_t start = 0; start < train_idx.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(train_idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const long batch_n = static_cast<long>(stop - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t cstart = start; cstart < stop; cstart += kChunk) {
                const int cn = static_cast<int>(std::min<std::size_t>(kChunk, stop - cstart));
#pragma omp parallel for schedule(static)
                for (int s = 0; s < cn; ++s) {
                    auto& slot_grad = chunk_grad[static_cast<std::size_t>(s)];
                    std::fill(slot_grad.begin(), slot_grad.end(), 0.0);
                    Workspace& ws = chunk_ws[static_cast<std::size_t>(s)];
                    const long idx = train_idx[cstart + static_cast<std::size_t>(s)];
                    ws.input = inputs[static_cast<std::size_t>(idx)];
                    forward_pass(params, ws);
                    chunk_loss[static_cast<std::size_t>(s)] = backward_pass(
                        params, ws, labels[static_cast<std::size_t>(idx)] - 1, slot_grad);
                }
                for (int s = 0; s < cn; ++s) {
                    batch_loss += chunk_loss[static_cast<std::size_t>(s)];
                    const auto& slot_grad = chunk_grad[static_cast<std::size_t>(s)];
                    for (std::size_t i = 0; i < lt.total; ++i) {
                        grad[i] += slot_grad[i];
                    }
                }
            }
            const double scale = 1.0 / static_cast<double>(batch_n);
            batch_loss *= scale;
            if (!std::isfinite(batch_loss)) {
                throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                                     " (non-finite loss)");
            }
            loss_sum += batch_loss * static_cast<double>(batch_n);
            sample_count += batch_n;

            ++adam_t;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam_t));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam_t));
            constexpr double kEps = 1e-8;
            for (std::size_t i = 0; i < lt.total; ++i) {
                const double gi = grad[i] * scale;
                adam_m[i] = cfg.beta1 * adam_m[i] + (1.0 - cfg.beta1) * gi;
                adam_v[i] = cfg.beta2 * adam_v[i] + (1.0 - cfg.beta2) * gi * gi;
                params.values[i] -= cfg.learning_rate * (adam_m[i] / bc1) /
                                    (std::sqrt(adam_v[i] / bc2) + kEps);
            }
        }

        TrainLogEntry entry;
        entry.epoch = epoch;
        entry.train_loss = loss_sum / static_cast<double>(sample_count);
        entry.val_accuracy = evaluate_val(params);
        result.log.push_back(entry);
        if (entry.val_accuracy > best_acc) {
            best_acc = entry.val_accuracy;
            result.params = params;
            result.best_epoch = epoch;
        }
    }
    return result;
}

namespace {
constexpr std::uint32_t kParamsVersion = 1;
} // namespace

void save_params(const NetworkParams& params, const std::filesystem::path& file) {
    validate(params.config);
    const TensorLayout lt = tensor_layout(params.config);
    if (params.values.size() != lt.total) {
        throw ValidationError("parameter buffer does not match the config layout");
    }
    ChecksumWriter out(file);
    out.write("QERN", 4);
    out.put<std::uint32_t>(kParamsVersion);
    const NetworkConfig& c = params.config;
    for (const int field : {c.in_rows, c.in_cols, c.conv1_maps, c.conv2_maps, c.k1_h, c.k1_w,
                            c.s1_w, c.k2_h, c.k2_w, c.s2_w, c.hidden_units, c.n_outputs}) {
        out.put<std::int32_t>(field);
    }
    out.put<std::uint32_t>(params.scheme.measure == MeasureKind::Entropy ? 0 : 1);
    out.put<double>(params.scheme.e_max);
    out.put<std::int32_t>(params.scheme.n_bins);
    out.put<std::uint64_t>(params.values.size());
    out.write(params.values.data(), params.values.size() * sizeof(double));
    out.finish();
}

NetworkParams load_params(const std::filesystem::path& file) {
    ChecksumReader in(file);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "QERN", 4) != 0) {
        throw IoError("not a parameter file (bad magic)");
    }
    const auto version = in.get<std::uint32_t>();
    if (version != kParamsVersion) {
        throw IoError("parameter file version skew: v" + std::to_string(version));
    }
    NetworkParams params;
    NetworkConfig& c = params.config;
    for (int* field : {&c.in_rows, &c.in_cols, &c.conv1_maps, &c.conv2_maps, &c.k1_h, &c.k1_w,
                       &c.s1_w, &c.k2_h, &c.k2_w, &c.s2_w, &c.hidden_units, &c.n_outputs}) {
        *field = in.get<std::int32_t>();
    }
    params.scheme.measure =
        in.get<std::uint32_t>() == 0 ? MeasureKind::Entropy : MeasureKind::LogNegativity;
    params.scheme.e_max = in.get<double>();
    params.scheme.n_bins = in.get<std::int32_t>();
    const auto count = in.get<std::uint64_t>();
    validate(params.config);
    const TensorLayout lt = tensor_layout(params.config);
    if (count != lt.total) {
        throw IoError("parameter file does not match its own config block");
    }
    params.values.resize(count);
    in.read(params.values.data(), count * sizeof(double));
    in.verify();
    return params;
}

void write_train_log(const std::vector<TrainLogEntry>& log, int best_epoch,
                     const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) {
        throw IoError("cannot write " + file.string());
    }
    out << "epoch,train_loss,val_accuracy,is_best\n";
    char line[128];
    for (const auto& entry : log) {
        std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%d\n", entry.epoch, entry.train_loss,
                      entry.val_accuracy, entry.epoch == best_epoch ? 1 : 0);
        out << line;
    }
}

} // namespace qer
