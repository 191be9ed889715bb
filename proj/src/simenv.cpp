#include "qoesel/simenv.hpp"

#include <cmath>
#include <stdexcept>

namespace qoesel {

const std::vector<DnnCandidate>& catalog() {
  static const std::vector<DnnCandidate> models{
      {0, "mobilenet-v2", 0.708, 12.0, 3.4},
      {1, "inception-v2", 0.735, 59.0, 11.0},
      {2, "inception-v3", 0.775, 148.0, 23.0},
  };
  return models;
}

UserProfile sample_user(Rng& rng) {
  std::uniform_real_distribution<double> u02(0.0, 2.0);
  UserProfile p;
  for (int loc = 0; loc < kNumLocations; ++loc) {
    p.loc_weight_mean[loc] = u02(rng);
    p.loc_weight_std[loc] = u02(rng);
    std::normal_distribution<double> n(p.loc_weight_mean[loc], p.loc_weight_std[loc]);
    p.loc_weights[loc] = n(rng);
  }
  std::normal_distribution<double> time_dist(1.0, 0.5);
  for (int t = 0; t < kNumTimeSlots; ++t) p.time_weights[t] = time_dist(rng);
  std::normal_distribution<double> battery_dist(3.0, 1.0);
  p.battery_low_weight = battery_dist(rng);
  p.battery_high_weight = 1.0;
  return p;
}

EnvContext sample_context(Rng& rng, const EnvConfig& cfg) {
  std::uniform_real_distribution<double> brt(cfg.brightness_min, cfg.brightness_max);
  std::uniform_int_distribution<int> loc(1, kNumLocations);
  std::uniform_int_distribution<int> time(0, kNumTimeSlots - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  EnvContext ctx;
  ctx.brightness = brt(rng);
  ctx.location = loc(rng);
  ctx.time_of_day = time(rng);
  ctx.battery_low = unit(rng) < cfg.battery_low_prob;
  ctx.cpu_temperature = unit(rng);
  return ctx;
}

namespace {

void check_context(const EnvContext& ctx) {
  if (!(ctx.brightness > 0.0 && ctx.brightness <= 1.0) || ctx.location < 1 ||
      ctx.location > kNumLocations || ctx.time_of_day < 0 || ctx.time_of_day >= kNumTimeSlots ||
      !(ctx.cpu_temperature >= 0.0 && ctx.cpu_temperature <= 1.0))
    throw std::invalid_argument("simenv: context out of range");
}

double delay_weight(const UserProfile& profile, const EnvContext& ctx) {
  const double battery_w = ctx.battery_low ? profile.battery_low_weight : profile.battery_high_weight;
  return profile.time_weights[ctx.time_of_day] * battery_w;
}

double qoe_from_weights(double w_a, double w_d, const EnvContext& ctx, const DnnCandidate& dnn) {
  return w_a * accuracy(ctx, dnn) - w_d * (delay_ms(ctx, dnn) / kMaxNominalDelayMs);
}

}  // namespace

double accuracy(const EnvContext& ctx, const DnnCandidate& dnn) {
  check_context(ctx);
  return std::pow(ctx.brightness, 2.0 * (1.0 - dnn.nominal_accuracy));
}

double delay_ms(const EnvContext& ctx, const DnnCandidate& dnn) {
  check_context(ctx);
  return ctx.cpu_temperature * dnn.nominal_delay_ms;
}

double qoe(const UserProfile& profile, const EnvContext& ctx, const DnnCandidate& dnn, Rng& rng,
           const EnvConfig& cfg) {
  double w_a = profile.loc_weights[ctx.location - 1];
  if (cfg.resample_loc_weight) {
    std::normal_distribution<double> n(profile.loc_weight_mean[ctx.location - 1],
                                       profile.loc_weight_std[ctx.location - 1]);
    w_a = n(rng);
  }
  return qoe_from_weights(w_a, delay_weight(profile, ctx), ctx, dnn);
}

double expected_qoe(const UserProfile& profile, const EnvContext& ctx, const DnnCandidate& dnn,
                    const EnvConfig& cfg) {
  const double w_a = cfg.resample_loc_weight ? profile.loc_weight_mean[ctx.location - 1]
                                             : profile.loc_weights[ctx.location - 1];
  return qoe_from_weights(w_a, delay_weight(profile, ctx), ctx, dnn);
}

std::pair<int, double> oracle_best(const UserProfile& profile, const EnvContext& ctx,
                                   const std::vector<DnnCandidate>& models, const EnvConfig& cfg) {
  if (models.empty()) throw std::invalid_argument("oracle_best: empty catalog");
  int best = 0;
  double best_value = expected_qoe(profile, ctx, models[0], cfg);
  for (int m = 1; m < static_cast<int>(models.size()); ++m) {
    const double v = expected_qoe(profile, ctx, models[m], cfg);
    if (v > best_value) {
      best = m;
      best_value = v;
    }
  }
  return {best, best_value};
}

ContextVector encode_context(const EnvContext& ctx, const DnnCandidate& dnn) {
  check_context(ctx);
  ContextVector x;
  x << ctx.brightness, static_cast<double>(ctx.location - 1) / (kNumLocations - 1),
      static_cast<double>(ctx.time_of_day) / (kNumTimeSlots - 1), ctx.battery_low ? 0.0 : 1.0,
      ctx.cpu_temperature, dnn.nominal_accuracy, dnn.nominal_delay_ms / kMaxNominalDelayMs;
  return x;
}

}  // namespace qoesel
