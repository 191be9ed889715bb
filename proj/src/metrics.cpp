#include "qoesel/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace qoesel {

std::vector<double> cumulative_regret(const std::vector<SessionLog>& logs) {
  std::vector<double> series;
  series.reserve(logs.size());
  double sum = 0.0;
  for (const auto& log : logs) {
    sum += log.oracle_expected_reward - log.expected_reward;
    series.push_back(sum);
  }
  return series;
}

std::vector<double> m_regret(const std::vector<SessionLog>& logs, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("m_regret: lambda must be >= 0");
  auto series = cumulative_regret(logs);
  std::int64_t solicitations = 0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    if (logs[i].solicited) ++solicitations;
    series[i] += lambda * static_cast<double>(solicitations);
  }
  return series;
}

double average_qoe(const std::vector<SessionLog>& logs) {
  if (logs.empty()) throw std::invalid_argument("average_qoe: empty logs");
  double sum = 0.0;
  for (const auto& log : logs) sum += log.reward;
  return sum / static_cast<double>(logs.size());
}

double loglog_slope(const std::vector<double>& series, std::int64_t t_min, std::int64_t t_max) {
  if (t_min < 1 || t_max <= t_min || t_max > static_cast<std::int64_t>(series.size()))
    throw std::invalid_argument("loglog_slope: bad window");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(t_max - t_min + 1);
  for (std::int64_t t = t_min; t <= t_max; ++t) {
    const double v = series[t - 1];
    if (!(v > 0.0)) throw std::invalid_argument("loglog_slope: series must be positive in window");
    const double x = std::log(static_cast<double>(t));
    const double y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace qoesel
