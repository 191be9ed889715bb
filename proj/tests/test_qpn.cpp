#include "qoesel/qpn.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace qoesel;

namespace {

ContextVector random_context(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ContextVector x;
  for (int i = 0; i < kInputDim; ++i) x(i) = unit(rng);
  return x;
}

// Independent forward oracle: plain nested loops, no Eigen products.
double forward_oracle(const QpnParams& p, const ContextVector& x) {
  std::vector<double> a(x.data(), x.data() + kInputDim);
  for (int l = 0; l < kNumLayers; ++l) {
    std::vector<double> next(p.biases[l].size());
    for (std::size_t i = 0; i < next.size(); ++i) {
      double z = p.biases[l](static_cast<Eigen::Index>(i));
      for (std::size_t j = 0; j < a.size(); ++j)
        z += p.weights[l](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * a[j];
      next[i] = (l == kNumLayers - 1) ? z : std::max(z, 0.0);
    }
    a = std::move(next);
  }
  return a[0];
}

}  // namespace

TEST_CASE("parameter layout") {
  const QpnParams p = QpnParams::random_init(7);
  const Eigen::VectorXd flat = p.flatten();
  CHECK(flat.size() == kParamCount);
  CHECK(kParamCount == 353);

  // Round trip is bitwise exact.
  const QpnParams q = QpnParams::unflatten(flat);
  const Eigen::VectorXd flat2 = q.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) CHECK(flat(i) == flat2(i));

  CHECK_THROWS_AS(QpnParams::unflatten(Eigen::VectorXd::Zero(10)), std::invalid_argument);
}

TEST_CASE("forward identity cases") {
  std::mt19937_64 rng(11);
  const ContextVector x = random_context(rng);

  QpnParams zeros = QpnParams::zeros();
  CHECK(forward(zeros, x) == 0.0);

  zeros.biases[kNumLayers - 1](0) = 0.7;
  CHECK(forward(zeros, x) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("forward matches independent oracle") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const QpnParams p = QpnParams::random_init(100 + trial);
    const ContextVector x = random_context(rng);
    CHECK(forward(p, x) == doctest::Approx(forward_oracle(p, x)).epsilon(1e-12));
  }
}

TEST_CASE("forward rejects non-finite input") {
  const QpnParams p = QpnParams::random_init(1);
  ContextVector x = ContextVector::Zero();
  x(3) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(forward(p, x), std::invalid_argument);
}

TEST_CASE("forward is deterministic") {
  std::mt19937_64 rng(5);
  const QpnParams p = QpnParams::random_init(42);
  const ContextVector x = random_context(rng);
  const ContextVector y = x;
  CHECK(forward(p, x) == forward(p, y));
  CHECK((gradient(p, x) - gradient(p, y)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradient with dead rectifiers hits only the output bias") {
  std::mt19937_64 rng(3);
  QpnParams p = QpnParams::zeros();
  p.biases[kNumLayers - 1](0) = 0.4;
  const Eigen::VectorXd g = gradient(p, random_context(rng));
  CHECK(g(kParamCount - 1) == 1.0);  // output bias is the last flattened coordinate
  CHECK(g.head(kParamCount - 1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradient matches central finite differences") {
  std::mt19937_64 rng(77);
  const double step = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const QpnParams p = QpnParams::random_init(1000 + trial);
    const ContextVector x = random_context(rng);
    const Eigen::VectorXd g = gradient(p, x);
    Eigen::VectorXd flat = p.flatten();
    for (Eigen::Index i = 0; i < kParamCount; ++i) {
      const double saved = flat(i);
      flat(i) = saved + step;
      const double up = forward(QpnParams::unflatten(flat), x);
      flat(i) = saved - step;
      const double down = forward(QpnParams::unflatten(flat), x);
      flat(i) = saved;
      const double fd = (up - down) / (2.0 * step);
      const double rel = std::abs(g(i) - fd) / std::max(std::abs(fd), 1e-6);
      worst = std::max(worst, rel);
    }
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("train_qpn edge cases") {
  const QpnParams p = QpnParams::random_init(9);
  std::mt19937_64 rng(13);
  std::vector<Sample> one{{random_context(rng), 0.8}};

  SUBCASE("zero learning rate is the identity") {
    const auto r = train_qpn(p, one, {0.0, 1});
    CHECK((r.params.flatten() - p.flatten()).cwiseAbs().maxCoeff() == 0.0);
    const auto r100 = train_qpn(p, one, {0.0, 100});
    CHECK((r100.params.flatten() - p.flatten()).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("steps must be positive") {
    CHECK_THROWS_AS(train_qpn(p, one, {0.01, 0}), std::invalid_argument);
  }

  SUBCASE("empty dataset is a warning no-op") {
    const auto r = train_qpn(p, {}, {0.01, 10});
    CHECK(r.status == TrainStatus::EmptyDataset);
    CHECK((r.params.flatten() - p.flatten()).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("divergent learning rate raises") {
    std::vector<Sample> data;
    for (int i = 0; i < 20; ++i) data.emplace_back(random_context(rng), 5.0);
    CHECK_THROWS_AS(train_qpn(p, data, {100.0, 200}), std::runtime_error);
  }
}

TEST_CASE("train_qpn reduces the loss") {
  std::mt19937_64 rng(31);

  SUBCASE("single sample") {
    const QpnParams p = QpnParams::random_init(50);
    std::vector<Sample> data{{random_context(rng), 1.3}};
    const auto r = train_qpn(p, data, {0.01, 100});
    CHECK(r.final_loss <= r.initial_loss);
    CHECK(r.final_loss == doctest::Approx(dataset_loss(r.params, data)).epsilon(1e-12));
  }

  SUBCASE("50-sample seeded run") {
    const QpnParams p = QpnParams::random_init(51);
    std::uniform_real_distribution<double> rew(-1.0, 2.0);
    std::vector<Sample> data;
    for (int i = 0; i < 50; ++i) data.emplace_back(random_context(rng), rew(rng));
    const auto r = train_qpn(p, data, {0.01 / 50.0, 100});
    CHECK(r.final_loss < r.initial_loss);
  }
}
