#pragma once

#include "qoesel/qpn.hpp"

#include <cstdint>
#include <vector>

namespace qoesel {

/// One session's worth of aggregated feedback: the contexts of the arms
/// chosen at each of the K change points and a single aggregated reward.
struct AggregatedRecord {
  std::vector<ContextVector> contexts;
  std::vector<int> arm_indices;
  double aggregated_reward = 0.0;
  std::int64_t session = 0;
};

struct RefinementConfig {
  double residual_tolerance = 1e-3;
  int max_iterations = 50;
  TrainConfig train_cfg;
};

// r_AG minus the mean prediction over the record's contexts.
double group_residual(const AggregatedRecord& record, const QpnParams& theta);

// Per-context estimates prediction + residual; their mean equals r_AG exactly.
std::vector<double> individualize(const AggregatedRecord& record, const QpnParams& theta);

double aggregate_mean(const std::vector<double>& rewards);

// Geometric sequence weights w_k = 2^k / sum_{i=1..K} 2^i: later picks count more.
double aggregate_sequence(const std::vector<double>& rewards);
std::vector<double> sequence_weights(int k);

struct RefineResult {
  QpnParams params;
  std::vector<Sample> individualized;
  bool converged = false;
  int iterations = 0;
};

// Alternate individualizing every aggregated record under the current theta
// and retraining on (individualized + plain) samples. Stops when the max-abs
// change of the group residuals between iterations drops below the tolerance.
// Individualized estimates replace the previous iteration's, never accumulate.
RefineResult refine(const std::vector<AggregatedRecord>& agg_dataset,
                    const std::vector<Sample>& plain_dataset, const QpnParams& theta,
                    const RefinementConfig& cfg);

}  // namespace qoesel
