#pragma once

#include <cstdint>
#include <vector>

namespace qoesel {

struct SessionLog {
  std::int64_t session = 0;  // 1-based
  int chosen_arm = 0;
  int oracle_arm = 0;
  double reward = 0.0;                  // realized QoE (drives average QoE)
  double expected_reward = 0.0;         // noise-free value of the chosen arm
  double oracle_expected_reward = 0.0;  // noise-free value of the oracle arm
  bool solicited = false;
};

// Prefix sums of (oracle expected - chosen expected); noise-free by design.
std::vector<double> cumulative_regret(const std::vector<SessionLog>& logs);

// cumulative_regret plus lambda times the cumulative solicitation count.
std::vector<double> m_regret(const std::vector<SessionLog>& logs, double lambda);

double average_qoe(const std::vector<SessionLog>& logs);

// Least-squares slope of log(series_t) vs log(t) on sessions [t_min, t_max].
double loglog_slope(const std::vector<double>& series, std::int64_t t_min, std::int64_t t_max);

}  // namespace qoesel
