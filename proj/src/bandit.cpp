#include "qoesel/bandit.hpp"

#include <cmath>
#include <stdexcept>

namespace qoesel {

namespace {

BanditState fresh_state(QpnParams theta, double gamma, double width_h) {
  if (gamma < 0.0) throw std::invalid_argument("bandit: gamma must be >= 0");
  if (!(width_h > 0.0)) throw std::invalid_argument("bandit: width_h must be > 0");
  BanditState s;
  s.theta = std::move(theta);
  s.z_matrix = Eigen::MatrixXd::Identity(kParamCount, kParamCount);
  s.z_inverse = Eigen::MatrixXd::Identity(kParamCount, kParamCount);
  s.gamma = gamma;
  s.width_h = width_h;
  return s;
}

}  // namespace

BanditState init_state(std::uint64_t seed, double gamma, double width_h) {
  return fresh_state(QpnParams::random_init(seed), gamma, width_h);
}

BanditState init_with_transfer(const QpnParams& pretrained, double gamma, double width_h) {
  if (!pretrained.well_formed()) throw std::invalid_argument("bandit: malformed pretrained params");
  return fresh_state(pretrained, gamma, width_h);
}

std::vector<double> ucb_scores(const BanditState& state, const ArmSet& arms) {
  if (arms.contexts.empty()) throw std::invalid_argument("ucb_scores: no arms");
  std::vector<double> scores;
  scores.reserve(arms.contexts.size());
  for (const auto& x : arms.contexts) {
    const double predicted = forward(state.theta, x);
    const Eigen::VectorXd g = gradient(state.theta, x);
    const double quad = g.dot(state.z_inverse * g) / state.width_h;
    if (quad < -1e-9) throw std::runtime_error("ucb_scores: confidence state is not PSD");
    scores.push_back(predicted + state.gamma * std::sqrt(std::max(quad, 0.0)));
  }
  return scores;
}

int select_arm(const BanditState& state, const ArmSet& arms) {
  const auto scores = ucb_scores(state, arms);
  int best = 0;
  for (int m = 1; m < static_cast<int>(scores.size()); ++m)
    if (scores[m] > scores[best]) best = m;
  return best;
}

UpdateStatus observe_reward(BanditState& state, const ContextVector& chosen_context, double reward,
                            const TrainConfig& cfg) {
  if (!std::isfinite(reward)) throw std::invalid_argument("observe_reward: non-finite reward");

  // Gradient at the pre-retrain theta, as in the selection step.
  const Eigen::VectorXd g = gradient(state.theta, chosen_context);

  state.dataset.emplace_back(chosen_context, reward);
  // On tiny datasets a full-rate step from a warm-started theta can overshoot;
  // back off geometrically instead of aborting the run.
  TrainConfig attempt = cfg;
  for (int tries = 0;; ++tries) {
    try {
      state.theta = train_qpn(state.theta, state.dataset, attempt).params;
      break;
    } catch (const std::runtime_error&) {
      if (tries == 8) throw;
      attempt.learning_rate *= 0.5;
    }
  }

  state.z_matrix.selfadjointView<Eigen::Lower>().rankUpdate(g, 1.0 / state.width_h);
  state.z_matrix.triangularView<Eigen::StrictlyUpper>() =
      state.z_matrix.transpose().triangularView<Eigen::StrictlyUpper>();

  // Sherman-Morrison: (Z + gg'/h)^-1 = Z^-1 - (Z^-1 g)(Z^-1 g)'/(h + g'Z^-1 g).
  const Eigen::VectorXd v = state.z_inverse * g;
  const double denom = state.width_h + g.dot(v);
  if (denom <= 1e-12) {
    state.z_inverse = state.z_matrix.ldlt().solve(
        Eigen::MatrixXd::Identity(kParamCount, kParamCount));
    return UpdateStatus::DirectFallback;
  }
  state.z_inverse.noalias() -= (v * v.transpose()) / denom;
  return UpdateStatus::RankOne;
}

}  // namespace qoesel
