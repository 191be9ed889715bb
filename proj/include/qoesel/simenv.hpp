#pragma once

#include "qoesel/qpn.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace qoesel {

using Rng = std::mt19937_64;

struct DnnCandidate {
  int id = 0;
  std::string name;
  double nominal_accuracy = 0.0;  // fraction in (0,1)
  double nominal_delay_ms = 0.0;
  double size_mb = 0.0;  // informational
};

// The three candidate models used throughout the experiments.
const std::vector<DnnCandidate>& catalog();

inline constexpr int kNumLocations = 10;
inline constexpr int kNumTimeSlots = 24;
inline constexpr double kMaxNominalDelayMs = 148.0;

struct EnvConfig {
  double brightness_min = 0.1;
  double brightness_max = 1.0;
  double battery_low_prob = 0.3;
  // When true the location weight is redrawn around its per-user mean at every
  // QoE realization; by default the per-profile draw w(loc) is a fixed user
  // trait, like the time and battery weights.
  bool resample_loc_weight = false;
};

struct EnvContext {
  double brightness = 1.0;       // [0.1, 1.0]
  int location = 1;              // {1..10}
  int time_of_day = 0;           // {0..23}
  bool battery_low = false;
  double cpu_temperature = 0.0;  // [0, 1]
};

/// Simulated user's preference tables.
struct UserProfile {
  std::array<double, kNumLocations> loc_weight_mean{};  // mu(loc) ~ U[0,2]
  std::array<double, kNumLocations> loc_weight_std{};   // delta(loc) ~ U[0,2]
  std::array<double, kNumLocations> loc_weights{};      // w(loc) ~ N(mu, delta^2)
  std::array<double, kNumTimeSlots> time_weights{};     // w(time) ~ N(1, 0.5^2)
  double battery_low_weight = 3.0;                      // ~ N(3, 1)
  double battery_high_weight = 1.0;                     // fixed
};

UserProfile sample_user(Rng& rng);
EnvContext sample_context(Rng& rng, const EnvConfig& cfg = {});

// Realized accuracy: brt^(2*(1 - nominal_accuracy)); in (0,1], equal to 1 at
// full brightness, and less brightness-sensitive for more accurate models.
double accuracy(const EnvContext& ctx, const DnnCandidate& dnn);

// Realized inference delay: cpu_temperature * nominal delay.
double delay_ms(const EnvContext& ctx, const DnnCandidate& dnn);

// Realized QoE: w_a * accuracy - w_d * (delay / 148ms), with w_a freshly
// drawn from N(mu(loc), delta(loc)^2) when resampling is enabled and
// w_d = w(time) * w(battery).
double qoe(const UserProfile& profile, const EnvContext& ctx, const DnnCandidate& dnn, Rng& rng,
           const EnvConfig& cfg = {});

// Noise-free mean of qoe() for the same mode: mu(loc) under per-session
// resampling, the profile's fixed w(loc) otherwise.
double expected_qoe(const UserProfile& profile, const EnvContext& ctx, const DnnCandidate& dnn,
                    const EnvConfig& cfg = {});

// Argmax of expected_qoe over the catalog; ties break to the lowest index.
std::pair<int, double> oracle_best(const UserProfile& profile, const EnvContext& ctx,
                                   const std::vector<DnnCandidate>& models = catalog(),
                                   const EnvConfig& cfg = {});

// 7-feature bandit context: brightness, normalized location, normalized time,
// battery flag (1 = high), cpu temperature, nominal accuracy, normalized
// nominal delay. All entries lie in [0,1].
ContextVector encode_context(const EnvContext& ctx, const DnnCandidate& dnn);

}  // namespace qoesel
