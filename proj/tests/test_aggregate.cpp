#include "qoesel/aggregate.hpp"
#include "qoesel/simenv.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace qoesel;

namespace {

// Network that passes the first input coordinate straight through: each layer
// wires unit 0 to unit 0, everything else zero. Valid for x(0) >= 0.
QpnParams passthrough() {
  QpnParams p = QpnParams::zeros();
  for (int l = 0; l < kNumLayers; ++l) p.weights[l](0, 0) = 1.0;
  return p;
}

ContextVector context_with_lead(double v) {
  ContextVector x = ContextVector::Zero();
  x(0) = v;
  return x;
}

ContextVector random_context(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ContextVector x;
  for (int i = 0; i < kInputDim; ++i) x(i) = unit(rng);
  return x;
}

AggregatedRecord random_record(std::mt19937_64& rng, int k) {
  std::uniform_real_distribution<double> rew(-1.0, 2.0);
  std::uniform_int_distribution<int> arm(0, 2);
  AggregatedRecord rec;
  for (int i = 0; i < k; ++i) {
    rec.contexts.push_back(random_context(rng));
    rec.arm_indices.push_back(arm(rng));
  }
  rec.aggregated_reward = rew(rng);
  return rec;
}

}  // namespace

TEST_CASE("group residual and individualize on a worked example") {
  // Predictions 0.2, 0.4, 0.6 with aggregated reward 0.5: residual is
  // 0.5 - 0.4 = 0.1 and the estimates shift to 0.3, 0.5, 0.7.
  const QpnParams theta = passthrough();
  AggregatedRecord rec;
  rec.contexts = {context_with_lead(0.2), context_with_lead(0.4), context_with_lead(0.6)};
  rec.arm_indices = {0, 1, 2};
  rec.aggregated_reward = 0.5;

  CHECK(group_residual(rec, theta) == doctest::Approx(0.1).epsilon(1e-12));
  const auto est = individualize(rec, theta);
  REQUIRE(est.size() == 3);
  CHECK(est[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(est[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(est[2] == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("individualized estimates preserve the aggregate mean") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> ksize(1, 4);
  const QpnParams theta = QpnParams::random_init(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const AggregatedRecord rec = random_record(rng, ksize(rng));
    const auto est = individualize(rec, theta);
    double mean = 0.0;
    for (double e : est) mean += e;
    mean /= static_cast<double>(est.size());
    CHECK(std::abs(mean - rec.aggregated_reward) <= 1e-12);
  }
}

TEST_CASE("single change point returns the aggregated reward itself") {
  std::mt19937_64 rng(7);
  const QpnParams theta = QpnParams::random_init(9);
  const AggregatedRecord rec = random_record(rng, 1);
  const auto est = individualize(rec, theta);
  REQUIRE(est.size() == 1);
  CHECK(est[0] == doctest::Approx(rec.aggregated_reward).epsilon(1e-15));
}

TEST_CASE("aggregate_mean") {
  CHECK(aggregate_mean({0.5}) == 0.5);
  CHECK(aggregate_mean({0.2, 0.4, 0.6}) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK_THROWS_AS(aggregate_mean({}), std::invalid_argument);
}

TEST_CASE("sequence weights") {
  const auto w1 = sequence_weights(1);
  REQUIRE(w1.size() == 1);
  CHECK(w1[0] == 1.0);

  const auto w3 = sequence_weights(3);
  REQUIRE(w3.size() == 3);
  CHECK(w3[0] == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
  CHECK(w3[1] == doctest::Approx(2.0 / 7.0).epsilon(1e-15));
  CHECK(w3[2] == doctest::Approx(4.0 / 7.0).epsilon(1e-15));

  for (int k = 1; k <= 10; ++k) {
    const auto w = sequence_weights(k);
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(w[i] > 0.0);
      if (i > 0) CHECK(w[i] > w[i - 1]);
      sum += w[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(sequence_weights(0), std::invalid_argument);
}

TEST_CASE("aggregate_sequence") {
  CHECK(aggregate_sequence({0.9}) == 0.9);
  // (1*0.2 + 2*0.4 + 4*0.6) / 7
  CHECK(aggregate_sequence({0.2, 0.4, 0.6}) == doctest::Approx(3.4 / 7.0).epsilon(1e-14));
  // Constant rewards aggregate to the constant under any weighting.
  CHECK(aggregate_sequence({0.3, 0.3, 0.3, 0.3}) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(aggregate_mean({0.3, 0.3, 0.3, 0.3}) == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("refine with no aggregated records equals one training pass") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> rew(-1.0, 1.0);
  std::vector<Sample> plain;
  for (int i = 0; i < 10; ++i) plain.emplace_back(random_context(rng), rew(rng));
  const QpnParams theta = QpnParams::random_init(33);

  RefinementConfig cfg;
  cfg.train_cfg = {0.001, 20};
  const RefineResult res = refine({}, plain, theta, cfg);
  CHECK(res.converged);
  CHECK(res.individualized.empty());

  const auto direct = train_qpn(theta, plain, cfg.train_cfg);
  CHECK((res.params.flatten() - direct.params.flatten()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single-context records behave like plain samples") {
  std::mt19937_64 rng(22);
  std::vector<AggregatedRecord> aggs;
  std::vector<Sample> as_plain;
  for (int i = 0; i < 6; ++i) {
    const AggregatedRecord rec = random_record(rng, 1);
    aggs.push_back(rec);
    as_plain.emplace_back(rec.contexts[0], rec.aggregated_reward);
  }
  const QpnParams theta = QpnParams::random_init(44);

  RefinementConfig cfg;
  cfg.max_iterations = 1;
  cfg.train_cfg = {0.002, 30};
  const RefineResult res = refine(aggs, {}, theta, cfg);
  const auto direct = train_qpn(theta, as_plain, cfg.train_cfg);
  // Targets round-trip through prediction + residual, so allow one ulp-scale slack.
  CHECK((res.params.flatten() - direct.params.flatten()).cwiseAbs().maxCoeff() <= 1e-14);

  // K=1 individualized estimates are exactly the recorded rewards.
  REQUIRE(res.individualized.size() == 6);
  for (int i = 0; i < 6; ++i)
    CHECK(res.individualized[i].second ==
          doctest::Approx(aggs[i].aggregated_reward).epsilon(1e-12));
}

TEST_CASE("refine converges on seeded simulator instances") {
  // 20 mean-aggregated records per instance, contexts and QoEs drawn from the
  // simulated environment so the targets are actually learnable.
  int converged = 0;
  const int instances = 20;
  for (int inst = 0; inst < instances; ++inst) {
    Rng rng(5000 + inst);
    const UserProfile user = sample_user(rng);
    std::uniform_int_distribution<int> ksize(2, 4);
    std::uniform_int_distribution<int> arm(0, 2);
    std::vector<AggregatedRecord> aggs;
    int total = 0;
    for (int i = 0; i < 20; ++i) {
      AggregatedRecord rec;
      const int k = ksize(rng);
      std::vector<double> rewards;
      for (int j = 0; j < k; ++j) {
        const EnvContext ctx = sample_context(rng);
        const int m = arm(rng);
        rec.contexts.push_back(encode_context(ctx, catalog()[m]));
        rec.arm_indices.push_back(m);
        rewards.push_back(qoe(user, ctx, catalog()[m], rng));
      }
      rec.aggregated_reward = aggregate_mean(rewards);
      aggs.push_back(rec);
      total += k;
    }
    RefinementConfig cfg;
    cfg.residual_tolerance = 1e-3;
    cfg.max_iterations = 50;
    cfg.train_cfg = {0.0004 / static_cast<double>(total), 100};
    const RefineResult res = refine(aggs, {}, QpnParams::random_init(900 + inst), cfg);
    CHECK(res.iterations <= 50);
    if (res.converged) ++converged;
  }
  CHECK(converged >= 19);  // at least 95 percent
}

TEST_CASE("refine output count matches the total change points") {
  std::mt19937_64 rng(70);
  std::vector<AggregatedRecord> aggs{random_record(rng, 3), random_record(rng, 2)};
  RefinementConfig cfg;
  cfg.max_iterations = 3;
  cfg.train_cfg = {0.001, 10};
  const RefineResult res = refine(aggs, {}, QpnParams::random_init(71), cfg);
  CHECK(res.individualized.size() == 5);
  CHECK(res.iterations >= 1);
}
