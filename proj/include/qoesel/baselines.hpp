#pragma once

#include "qoesel/bandit.hpp"
#include "qoesel/simenv.hpp"

#include <vector>

namespace qoesel {

/// Disjoint-arms linear UCB baseline: one d x d design matrix and reward
/// vector per arm, scored by theta'x + alpha*sqrt(x'A^-1 x).
struct LinUcbState {
  std::vector<Eigen::MatrixXd> a_matrix;  // per arm, starts at identity
  std::vector<Eigen::VectorXd> b_vector;  // per arm, starts at zero
  double alpha = 1.0;
};

LinUcbState linucb_init(int num_arms, int dim = kInputDim, double alpha = 1.0);
int linucb_select(const LinUcbState& state, const ArmSet& arms);
void linucb_update(LinUcbState& state, int arm, const ContextVector& context, double reward);

int random_select(Rng& rng, int num_arms);
int fixed_select(int fixed_arm);

}  // namespace qoesel
