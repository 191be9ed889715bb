#include "qoesel/qpn.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace qoesel {

const std::array<std::pair<int, int>, kNumLayers>& QpnParams::layer_dims() {
  static const std::array<std::pair<int, int>, kNumLayers> dims{{
      {kInputDim, kHiddenDims[0]},
      {kHiddenDims[0], kHiddenDims[1]},
      {kHiddenDims[1], kHiddenDims[2]},
      {kHiddenDims[2], 1},
  }};
  return dims;
}

QpnParams QpnParams::zeros() {
  QpnParams p;
  for (int l = 0; l < kNumLayers; ++l) {
    auto [in, out] = layer_dims()[l];
    p.weights[l] = Eigen::MatrixXd::Zero(out, in);
    p.biases[l] = Eigen::VectorXd::Zero(out);
  }
  return p;
}

QpnParams QpnParams::random_init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  QpnParams p = zeros();
  for (int l = 0; l < kNumLayers; ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer_dims()[l].first));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < p.weights[l].rows(); ++i)
      for (Eigen::Index j = 0; j < p.weights[l].cols(); ++j) p.weights[l](i, j) = dist(rng);
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) p.biases[l](i) = dist(rng);
  }
  return p;
}

bool QpnParams::well_formed() const {
  for (int l = 0; l < kNumLayers; ++l) {
    auto [in, out] = layer_dims()[l];
    if (weights[l].rows() != out || weights[l].cols() != in) return false;
    if (biases[l].size() != out) return false;
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  }
  return true;
}

Eigen::VectorXd QpnParams::flatten() const {
  Eigen::VectorXd flat(kParamCount);
  Eigen::Index pos = 0;
  for (int l = 0; l < kNumLayers; ++l) {
    for (Eigen::Index i = 0; i < weights[l].rows(); ++i)
      for (Eigen::Index j = 0; j < weights[l].cols(); ++j) flat(pos++) = weights[l](i, j);
    flat.segment(pos, biases[l].size()) = biases[l];
    pos += biases[l].size();
  }
  return flat;
}

QpnParams QpnParams::unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() != kParamCount) throw std::invalid_argument("unflatten: wrong parameter count");
  QpnParams p = zeros();
  Eigen::Index pos = 0;
  for (int l = 0; l < kNumLayers; ++l) {
    for (Eigen::Index i = 0; i < p.weights[l].rows(); ++i)
      for (Eigen::Index j = 0; j < p.weights[l].cols(); ++j) p.weights[l](i, j) = flat(pos++);
    p.biases[l] = flat.segment(pos, p.biases[l].size());
    pos += p.biases[l].size();
  }
  return p;
}

namespace {

inline Eigen::VectorXd relu(const Eigen::VectorXd& z) { return z.cwiseMax(0.0); }

void check_inputs(const QpnParams& params, const ContextVector& x) {
  if (!params.well_formed()) throw std::invalid_argument("qpn: malformed parameters");
  if (!x.allFinite()) throw std::invalid_argument("qpn: non-finite context");
}

}  // namespace

double forward(const QpnParams& params, const ContextVector& x) {
  check_inputs(params, x);
  Eigen::VectorXd a = x;
  for (int l = 0; l < kNumLayers - 1; ++l) a = relu(params.weights[l] * a + params.biases[l]);
  return (params.weights[kNumLayers - 1] * a + params.biases[kNumLayers - 1])(0);
}

Eigen::VectorXd gradient(const QpnParams& params, const ContextVector& x) {
  check_inputs(params, x);

  // Forward pass keeping pre-activations.
  std::array<Eigen::VectorXd, kNumLayers> z;
  std::array<Eigen::VectorXd, kNumLayers> a;  // a[l] = input to layer l
  a[0] = x;
  for (int l = 0; l < kNumLayers; ++l) {
    z[l] = params.weights[l] * a[l] + params.biases[l];
    if (l + 1 < kNumLayers) a[l + 1] = relu(z[l]);
  }

  // Backward pass; delta[l] = d(output)/d(z[l]).
  QpnParams grads = QpnParams::zeros();
  Eigen::VectorXd delta = Eigen::VectorXd::Ones(1);
  for (int l = kNumLayers - 1; l >= 0; --l) {
    grads.weights[l] = delta * a[l].transpose();
    grads.biases[l] = delta;
    if (l > 0) {
      Eigen::VectorXd mask = (z[l - 1].array() > 0.0).cast<double>();
      delta = (params.weights[l].transpose() * delta).cwiseProduct(mask);
    }
  }
  return grads.flatten();
}

namespace {

// Batched state for full-batch training: one row per sample.
struct Batch {
  Eigen::MatrixXd x;  // n x 7
  Eigen::VectorXd y;  // n
};

Batch make_batch(const std::vector<Sample>& dataset) {
  Batch b;
  const auto n = static_cast<Eigen::Index>(dataset.size());
  b.x.resize(n, kInputDim);
  b.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b.x.row(i) = dataset[i].first.transpose();
    b.y(i) = dataset[i].second;
  }
  return b;
}

// Forward over the whole batch; fills per-layer activations and returns
// predictions. act[l] holds the input to layer l (n x in_l).
Eigen::VectorXd batch_forward(const QpnParams& p, const Batch& b,
                              std::array<Eigen::MatrixXd, kNumLayers>& act) {
  act[0] = b.x;
  for (int l = 0; l < kNumLayers - 1; ++l) {
    act[l + 1] =
        ((act[l] * p.weights[l].transpose()).rowwise() + p.biases[l].transpose()).cwiseMax(0.0);
  }
  return act[kNumLayers - 1] * p.weights[kNumLayers - 1].transpose().col(0) +
         Eigen::VectorXd::Constant(b.x.rows(), p.biases[kNumLayers - 1](0));
}

}  // namespace

double dataset_loss(const QpnParams& params, const std::vector<Sample>& dataset) {
  if (dataset.empty()) return 0.0;
  Batch b = make_batch(dataset);
  std::array<Eigen::MatrixXd, kNumLayers> act;
  return (batch_forward(params, b, act) - b.y).squaredNorm();
}

TrainResult train_qpn(const QpnParams& params, const std::vector<Sample>& dataset,
                      const TrainConfig& cfg) {
  if (!params.well_formed()) throw std::invalid_argument("train_qpn: malformed parameters");
  if (cfg.learning_rate < 0.0 || !std::isfinite(cfg.learning_rate))
    throw std::invalid_argument("train_qpn: invalid learning rate");
  if (cfg.steps < 1) throw std::invalid_argument("train_qpn: steps must be >= 1");
  if (dataset.empty()) return {params, TrainStatus::EmptyDataset, 0.0, 0.0};
  for (const auto& [x, r] : dataset)
    if (!x.allFinite() || !std::isfinite(r))
      throw std::invalid_argument("train_qpn: non-finite sample");

  Batch b = make_batch(dataset);
  QpnParams theta = params;
  std::array<Eigen::MatrixXd, kNumLayers> act;
  double loss0 = 0.0, loss = 0.0;

  for (int step = 0; step < cfg.steps; ++step) {
    Eigen::VectorXd pred = batch_forward(theta, b, act);
    Eigen::VectorXd err = pred - b.y;
    loss = err.squaredNorm();
    if (step == 0) loss0 = loss;
    if (!std::isfinite(loss))
      throw std::runtime_error("train_qpn: loss diverged (learning rate too large)");

    // delta = dL/d(pre-activation of layer l), one row per sample.
    Eigen::MatrixXd delta = 2.0 * err;  // n x 1, output layer is linear
    for (int l = kNumLayers - 1; l >= 0; --l) {
      Eigen::MatrixXd dw = delta.transpose() * act[l];
      Eigen::VectorXd db = delta.colwise().sum();
      if (l > 0) {
        Eigen::MatrixXd mask = (act[l].array() > 0.0).cast<double>();
        delta = (delta * theta.weights[l]).cwiseProduct(mask);
      }
      theta.weights[l] -= cfg.learning_rate * dw;
      theta.biases[l] -= cfg.learning_rate * db;
    }
  }

  loss = dataset_loss(theta, dataset);
  if (!std::isfinite(loss))
    throw std::runtime_error("train_qpn: loss diverged (learning rate too large)");
  return {std::move(theta), TrainStatus::Ok, loss0, loss};
}

}  // namespace qoesel
