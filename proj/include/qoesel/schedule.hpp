#pragma once

#include <cstdint>

namespace qoesel {

/// When to ask the user for a QoE rating. FixedHorizon spreads exactly
/// ceil(T^(2/3)) solicitations evenly over a known horizon T; UnknownHorizon
/// solicits whenever the running count c drops below t^(1-alpha).
struct Schedule {
  enum class Kind { Always, FixedHorizon, UnknownHorizon };

  Kind kind = Kind::Always;
  std::int64_t horizon = 0;  // FixedHorizon only
  double alpha = 0.0;        // UnknownHorizon only

  static Schedule always();
  static Schedule fixed_horizon(std::int64_t horizon);
  static Schedule unknown_horizon(double alpha);
};

struct ScheduleState {
  std::int64_t session_index = 0;      // t of the session being decided
  std::int64_t solicitation_count = 0; // c, count of past true decisions
};

// Decision for session state.session_index; pure, does not advance state.
bool should_solicit(const Schedule& schedule, const ScheduleState& state);

// Advance to the next session, decide, and update the counter.
bool step_schedule(const Schedule& schedule, ScheduleState& state);

// Closed-form number of solicitations over sessions 1..horizon.
std::int64_t solicitation_count(const Schedule& schedule, std::int64_t horizon);

double solicitation_cost(std::int64_t count, double lambda);

// Smallest L with L^3 >= T^2, i.e. ceil(T^(2/3)) in exact integer arithmetic.
std::int64_t fixed_horizon_budget(std::int64_t horizon);

}  // namespace qoesel
