#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace qoesel {

// Fixed network shape: 7 input features, three hidden layers, scalar output.
inline constexpr int kInputDim = 7;
inline constexpr std::array<int, 3> kHiddenDims{8, 16, 8};
inline constexpr int kHiddenNodeCount = 8 + 16 + 8;
inline constexpr int kNumLayers = 4;
inline constexpr int kParamCount = 353;  // 56+8 + 128+16 + 128+8 + 8+1

using ContextVector = Eigen::Matrix<double, kInputDim, 1>;

/// Dense weights/biases of the QoE predicting network. Weights are stored
/// out-by-in so a layer maps an `in`-vector to an `out`-vector via W*x + b.
struct QpnParams {
  std::array<Eigen::MatrixXd, kNumLayers> weights;
  std::array<Eigen::VectorXd, kNumLayers> biases;

  static const std::array<std::pair<int, int>, kNumLayers>& layer_dims();

  static QpnParams zeros();
  // Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per layer.
  static QpnParams random_init(std::uint64_t seed);

  // Flatten order: per layer, weights row-major then bias.
  Eigen::VectorXd flatten() const;
  static QpnParams unflatten(const Eigen::VectorXd& flat);

  bool well_formed() const;
};

struct TrainConfig {
  double learning_rate = 0.01;
  int steps = 100;
};

using Sample = std::pair<ContextVector, double>;

// ReLU hidden layers, linear output.
double forward(const QpnParams& params, const ContextVector& x);

// Exact backprop gradient of the network output w.r.t. all parameters,
// flattened in the same order as QpnParams::flatten().
Eigen::VectorXd gradient(const QpnParams& params, const ContextVector& x);

// Sum of squared prediction errors over the dataset.
double dataset_loss(const QpnParams& params, const std::vector<Sample>& dataset);

enum class TrainStatus { Ok, EmptyDataset };

struct TrainResult {
  QpnParams params;
  TrainStatus status = TrainStatus::Ok;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

// Full-batch gradient descent on the summed squared-error loss, warm-started
// from `params`. Throws std::runtime_error if the loss becomes non-finite.
TrainResult train_qpn(const QpnParams& params, const std::vector<Sample>& dataset,
                      const TrainConfig& cfg);

}  // namespace qoesel
