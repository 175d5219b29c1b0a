#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qer/library.hpp"

namespace qer {

/// Two strided convolution stages (64 then 32 feature maps), a dense hidden
/// layer, and a linear head over the bin labels.
struct NetworkConfig {
    int in_rows = 5;     // W
    int in_cols = 0;     // D
    int conv1_maps = 64;
    int conv2_maps = 32;
    int k1_h = 1, k1_w = 33, s1_w = 16;
    int k2_h = 5, k2_w = 3, s2_w = 2;
    int hidden_units = 64;
    int n_outputs = 0; // N_bin

    int out1_h() const { return in_rows - k1_h + 1; }
    int out1_w() const { return (in_cols - k1_w) / s1_w + 1; }
    int out2_h() const { return out1_h() - k2_h + 1; }
    int out2_w() const { return (out1_w() - k2_w) / s2_w + 1; }
    int flat() const { return conv2_maps * out2_h() * out2_w(); }
};
void validate(const NetworkConfig& config);
bool operator==(const NetworkConfig& a, const NetworkConfig& b);

/// Production shape for a W x D statistical image: the first layer learns 64
/// full-row functionals per measurement setting, the second fuses all W
/// settings per column position.
NetworkConfig default_network_config(int rotations, int dim, int n_bins);

/// Byte offsets of each tensor inside the flat parameter buffer, in the
/// declared (serialization) order.
struct TensorLayout {
    std::size_t conv1_w, conv1_b, conv2_w, conv2_b;
    std::size_t dense_w, dense_b, out_w, out_b;
    std::size_t total;
};
TensorLayout tensor_layout(const NetworkConfig& config);

/// All weights and biases in one flat buffer (see tensor_layout), plus an
/// echo of the binning scheme the network was trained against.
struct NetworkParams {
    NetworkConfig config;
    BinningScheme scheme{MeasureKind::Entropy, 0.0, 0};
    std::vector<double> values;

    std::span<double> tensor(std::size_t offset, std::size_t next) {
        return {values.data() + offset, next - offset};
    }
};

/// Fan-in-scaled uniform weights (+-sqrt(6/fan_in)), zero biases.
NetworkParams init_params(const NetworkConfig& config, std::uint64_t seed);

/// Class probabilities for one image (softmax output, sums to 1).
Eigen::VectorXd forward(const NetworkParams& params, const StatImage& image);

/// 1-based predicted bin; ties resolve to the lower bin.
int predict_bin(const NetworkParams& params, const StatImage& image);

/// Mean cross-entropy over the batch and its gradient (same layout as
/// `params.values`). Labels are 1-based bins.
double loss_and_grad(const NetworkParams& params,
                     std::span<const StatImage* const> images,
                     std::span<const int> labels, std::vector<double>& grad);

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 64;
    int epochs = 40;
    double validation_fraction = 0.1;
    std::uint64_t seed = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
};
void validate(const TrainConfig& cfg);

struct TrainLogEntry {
    int epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    NetworkParams params; // best-validation snapshot
    std::vector<TrainLogEntry> log;
    int best_epoch = 0;
};

/// Adam over shuffled mini-batches; deterministic given the seed (gradient
/// accumulation runs in fixed-size chunks with an ordered reduction).
/// Throws NumericalError if the loss stops being finite.
TrainResult train(const NetworkParams& initial, const Library& library,
                  const TrainConfig& cfg);

/// "QERN" parameter file: version, config + scheme block, float64 tensors in
/// declared order, crc32.
void save_params(const NetworkParams& params, const std::filesystem::path& file);
NetworkParams load_params(const std::filesystem::path& file);

/// Training log as CSV (epoch, train_loss, val_accuracy).
void write_train_log(const std::vector<TrainLogEntry>& log, int best_epoch,
                     const std::filesystem::path& file);

} // namespace qer
