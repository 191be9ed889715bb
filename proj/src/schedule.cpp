#include "qoesel/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace qoesel {

Schedule Schedule::always() { return {Kind::Always, 0, 0.0}; }

Schedule Schedule::fixed_horizon(std::int64_t horizon) {
  if (horizon < 1) throw std::invalid_argument("schedule: horizon must be >= 1");
  return {Kind::FixedHorizon, horizon, 0.0};
}

Schedule Schedule::unknown_horizon(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("schedule: alpha must be in (0,1]");
  return {Kind::UnknownHorizon, 0, alpha};
}

std::int64_t fixed_horizon_budget(std::int64_t horizon) {
  // ceil(T^(2/3)) without floating-point boundary errors.
  auto cube = [](std::int64_t v) { return v * v * v; };
  const std::int64_t t2 = horizon * horizon;
  std::int64_t l = static_cast<std::int64_t>(std::ceil(std::pow(static_cast<double>(horizon), 2.0 / 3.0)));
  while (l > 1 && cube(l - 1) >= t2) --l;
  while (cube(l) < t2) ++l;
  return l;
}

namespace {

// The l-th solicitation (l = 1..L) happens in session floor((l-1)*T/L) + 1.
// Session t is a solicitation session iff an integer k = l-1 exists with
// k*T in [(t-1)*L, t*L).
bool fixed_horizon_hit(std::int64_t horizon, std::int64_t t) {
  const std::int64_t budget = fixed_horizon_budget(horizon);
  const std::int64_t lo = (t - 1) * budget;
  const std::int64_t k = (lo + horizon - 1) / horizon;  // ceil(lo / T)
  return k * horizon < t * budget;
}

long double unknown_horizon_threshold(double alpha, std::int64_t t) {
  return std::pow(static_cast<long double>(t), static_cast<long double>(1.0 - alpha));
}

}  // namespace

bool should_solicit(const Schedule& schedule, const ScheduleState& state) {
  const std::int64_t t = state.session_index;
  if (t < 1) throw std::invalid_argument("schedule: session index must be >= 1");
  switch (schedule.kind) {
    case Schedule::Kind::Always:
      return true;
    case Schedule::Kind::FixedHorizon:
      if (t > schedule.horizon) throw std::runtime_error("schedule: horizon overrun");
      return fixed_horizon_hit(schedule.horizon, t);
    case Schedule::Kind::UnknownHorizon:
      return static_cast<long double>(state.solicitation_count) <
             unknown_horizon_threshold(schedule.alpha, t);
  }
  throw std::logic_error("schedule: unreachable");
}

bool step_schedule(const Schedule& schedule, ScheduleState& state) {
  ++state.session_index;
  const bool solicit = should_solicit(schedule, state);
  if (solicit) ++state.solicitation_count;
  return solicit;
}

std::int64_t solicitation_count(const Schedule& schedule, std::int64_t horizon) {
  if (horizon < 1) throw std::invalid_argument("schedule: horizon must be >= 1");
  switch (schedule.kind) {
    case Schedule::Kind::Always:
      return horizon;
    case Schedule::Kind::FixedHorizon: {
      if (horizon > schedule.horizon) throw std::runtime_error("schedule: horizon overrun");
      const std::int64_t budget = fixed_horizon_budget(schedule.horizon);
      // Number of l with floor((l-1)*T/L) + 1 <= horizon.
      return (horizon * budget + schedule.horizon - 1) / schedule.horizon;
    }
    case Schedule::Kind::UnknownHorizon:
      return static_cast<std::int64_t>(
          std::ceil(unknown_horizon_threshold(schedule.alpha, horizon)));
  }
  throw std::logic_error("schedule: unreachable");
}

double solicitation_cost(std::int64_t count, double lambda) {
  if (count < 0) throw std::invalid_argument("schedule: count must be >= 0");
  if (lambda < 0.0) throw std::invalid_argument("schedule: lambda must be >= 0");
  return lambda * static_cast<double>(count);
}

}  // namespace qoesel
