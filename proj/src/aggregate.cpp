#include "qoesel/aggregate.hpp"

#include <cmath>
#include <stdexcept>

namespace qoesel {

namespace {

void check_record(const AggregatedRecord& record) {
  if (record.contexts.empty() || record.contexts.size() != record.arm_indices.size())
    throw std::invalid_argument("aggregate: malformed record");
}

}  // namespace

double group_residual(const AggregatedRecord& record, const QpnParams& theta) {
  check_record(record);
  double mean_pred = 0.0;
  for (const auto& x : record.contexts) mean_pred += forward(theta, x);
  mean_pred /= static_cast<double>(record.contexts.size());
  return record.aggregated_reward - mean_pred;
}

std::vector<double> individualize(const AggregatedRecord& record, const QpnParams& theta) {
  check_record(record);
  std::vector<double> predictions;
  predictions.reserve(record.contexts.size());
  double mean_pred = 0.0;
  for (const auto& x : record.contexts) {
    predictions.push_back(forward(theta, x));
    mean_pred += predictions.back();
  }
  mean_pred /= static_cast<double>(predictions.size());
  const double residual = record.aggregated_reward - mean_pred;
  for (auto& r : predictions) r += residual;
  return predictions;
}

double aggregate_mean(const std::vector<double>& rewards) {
  if (rewards.empty()) throw std::invalid_argument("aggregate_mean: empty rewards");
  double sum = 0.0;
  for (double r : rewards) sum += r;
  return sum / static_cast<double>(rewards.size());
}

std::vector<double> sequence_weights(int k) {
  if (k < 1) throw std::invalid_argument("sequence_weights: K must be >= 1");
  // w_k = 2^k / sum_{i=1..K} 2^i = 2^(k-1) / (2^K - 1)
  std::vector<double> w(k);
  const double denom = std::ldexp(1.0, k) - 1.0;
  for (int i = 0; i < k; ++i) w[i] = std::ldexp(1.0, i) / denom;
  return w;
}

double aggregate_sequence(const std::vector<double>& rewards) {
  const auto w = sequence_weights(static_cast<int>(rewards.size()));
  double sum = 0.0;
  for (std::size_t i = 0; i < rewards.size(); ++i) sum += w[i] * rewards[i];
  return sum;
}

RefineResult refine(const std::vector<AggregatedRecord>& agg_dataset,
                    const std::vector<Sample>& plain_dataset, const QpnParams& theta,
                    const RefinementConfig& cfg) {
  if (agg_dataset.empty() && plain_dataset.empty())
    throw std::invalid_argument("refine: nothing to train on");
  if (!(cfg.residual_tolerance > 0.0) || cfg.max_iterations < 1)
    throw std::invalid_argument("refine: invalid config");

  RefineResult result;
  result.params = theta;

  if (agg_dataset.empty()) {
    result.params = train_qpn(theta, plain_dataset, cfg.train_cfg).params;
    result.converged = true;
    result.iterations = 1;
    return result;
  }

  std::vector<double> prev_residuals(agg_dataset.size(),
                                     std::numeric_limits<double>::quiet_NaN());
  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    result.iterations = iter;

    std::vector<Sample> dataset = plain_dataset;
    std::vector<double> residuals(agg_dataset.size());
    result.individualized.clear();
    for (std::size_t i = 0; i < agg_dataset.size(); ++i) {
      const auto& record = agg_dataset[i];
      residuals[i] = group_residual(record, result.params);
      if (!std::isfinite(residuals[i])) throw std::runtime_error("refine: non-finite residual");
      const auto estimates = individualize(record, result.params);
      for (std::size_t k = 0; k < estimates.size(); ++k) {
        result.individualized.emplace_back(record.contexts[k], estimates[k]);
        dataset.emplace_back(record.contexts[k], estimates[k]);
      }
    }

    double max_change = std::numeric_limits<double>::infinity();
    if (iter > 1) {
      max_change = 0.0;
      for (std::size_t i = 0; i < residuals.size(); ++i)
        max_change = std::max(max_change, std::abs(residuals[i] - prev_residuals[i]));
    }
    if (max_change < cfg.residual_tolerance) {
      result.converged = true;
      return result;
    }
    prev_residuals = residuals;

    result.params = train_qpn(result.params, dataset, cfg.train_cfg).params;
  }
  return result;  // hit max_iterations, converged stays false
}

}  // namespace qoesel
