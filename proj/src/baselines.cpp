#include "qoesel/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace qoesel {

LinUcbState linucb_init(int num_arms, int dim, double alpha) {
  if (num_arms < 1) throw std::invalid_argument("linucb: need at least one arm");
  if (alpha < 0.0) throw std::invalid_argument("linucb: alpha must be >= 0");
  LinUcbState s;
  s.alpha = alpha;
  s.a_matrix.assign(num_arms, Eigen::MatrixXd::Identity(dim, dim));
  s.b_vector.assign(num_arms, Eigen::VectorXd::Zero(dim));
  return s;
}

int linucb_select(const LinUcbState& state, const ArmSet& arms) {
  if (arms.contexts.size() != state.a_matrix.size())
    throw std::invalid_argument("linucb: arm count mismatch");
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int m = 0; m < static_cast<int>(arms.contexts.size()); ++m) {
    const Eigen::VectorXd x = arms.contexts[m];
    const auto solver = state.a_matrix[m].ldlt();
    const Eigen::VectorXd theta = solver.solve(state.b_vector[m]);
    const double width = x.dot(solver.solve(x));
    if (width < 0.0) throw std::runtime_error("linucb: singular design matrix");
    const double score = theta.dot(x) + state.alpha * std::sqrt(width);
    if (score > best_score) {
      best = m;
      best_score = score;
    }
  }
  return best;
}

void linucb_update(LinUcbState& state, int arm, const ContextVector& context, double reward) {
  if (arm < 0 || arm >= static_cast<int>(state.a_matrix.size()))
    throw std::invalid_argument("linucb: arm out of range");
  if (!std::isfinite(reward)) throw std::invalid_argument("linucb: non-finite reward");
  const Eigen::VectorXd x = context;
  state.a_matrix[arm].noalias() += x * x.transpose();
  state.b_vector[arm].noalias() += reward * x;
}

int random_select(Rng& rng, int num_arms) {
  if (num_arms < 1) throw std::invalid_argument("random_select: need at least one arm");
  std::uniform_int_distribution<int> dist(0, num_arms - 1);
  return dist(rng);
}

int fixed_select(int fixed_arm) {
  if (fixed_arm < 0) throw std::invalid_argument("fixed_select: arm must be >= 0");
  return fixed_arm;
}

}  // namespace qoesel
