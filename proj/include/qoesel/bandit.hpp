#pragma once

#include "qoesel/qpn.hpp"

#include <cstdint>
#include <vector>

namespace qoesel {

/// NeuralUCB state: predictor parameters, the confidence matrix Z with its
/// maintained inverse, and the accumulated context-QoE dataset.
struct BanditState {
  QpnParams theta;
  Eigen::MatrixXd z_matrix;   // p x p, starts at identity
  Eigen::MatrixXd z_inverse;  // rank-one maintained inverse of z_matrix
  double gamma = 1.0;         // exploration scale
  double width_h = kHiddenNodeCount;
  std::vector<Sample> dataset;
};

struct ArmSet {
  std::vector<ContextVector> contexts;  // one per candidate DNN
};

BanditState init_state(std::uint64_t seed, double gamma = 1.0,
                       double width_h = kHiddenNodeCount);
BanditState init_with_transfer(const QpnParams& pretrained, double gamma = 1.0,
                               double width_h = kHiddenNodeCount);

// Per-arm upper confidence scores: forward(theta, x) + gamma*sqrt(g'Z^-1 g/h).
std::vector<double> ucb_scores(const BanditState& state, const ArmSet& arms);

// Smallest index attaining the maximum UCB score.
int select_arm(const BanditState& state, const ArmSet& arms);

enum class UpdateStatus { RankOne, DirectFallback };

// Record a solicited reward: append to the dataset, retrain theta on the full
// dataset, and apply the rank-one update Z += g g'/h with g taken at the
// pre-retrain theta. Returns DirectFallback if the rank-one denominator was
// degenerate and the inverse was recomputed directly.
UpdateStatus observe_reward(BanditState& state, const ContextVector& chosen_context,
                            double reward, const TrainConfig& cfg);

}  // namespace qoesel
