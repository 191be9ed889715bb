#pragma once

#include "qoesel/aggregate.hpp"
#include "qoesel/bandit.hpp"
#include "qoesel/baselines.hpp"
#include "qoesel/metrics.hpp"
#include "qoesel/schedule.hpp"
#include "qoesel/simenv.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace qoesel {

enum class Policy { NeuralUcb, NeuralUcbTransfer, NeuralUcbAgg, LinUcb, Random, Fixed, Oracle };
enum class AggregationMode { None, Mean, Sequence };

std::string policy_name(Policy policy, int fixed_arm = 0);

struct ExperimentConfig {
  Policy policy = Policy::NeuralUcb;
  int fixed_arm = 0;

  Schedule schedule = Schedule::always();
  std::int64_t sessions = 200;
  int users = 50;
  int repetitions = 1;
  std::uint64_t seed = 1;

  double lambda = 0.13;
  double gamma = 0.02;
  double width_h = kHiddenNodeCount;
  TrainConfig train{1.0, 100};
  // Scale the per-call learning rate by 1/|dataset| so the descent step
  // tracks the mean loss as the dataset grows.
  bool normalize_learning_rate = true;
  double linucb_alpha = 1.0;

  AggregationMode aggregation = AggregationMode::None;
  double mixed_fraction = 1.0;  // fraction of sessions with aggregated feedback
  int max_context_changes = 4;  // K_t ~ uniform {1..max}
  bool naive_last_arm = false;  // attribute r_AG to the last selected DNN
  RefinementConfig refine{1e-3, 10, {}};

  EnvConfig env;

  // Transfer policy: pretrained parameters, or pretrain internally when unset.
  QpnParams pretrained;
  bool has_pretrained = false;

  std::string out_dir;  // empty: no CSV files
  int threads = 1;
};

struct RunResult {
  std::uint64_t seed = 0;  // per-repetition seed (config seed + repetition)
  int user = 0;
  std::vector<SessionLog> logs;
};

struct SummaryRow {
  std::string policy;
  int runs = 0;
  double avg_qoe_mean = 0.0, avg_qoe_std = 0.0;
  double final_regret_mean = 0.0, final_regret_std = 0.0;
  double final_m_regret_mean = 0.0, final_m_regret_std = 0.0;
  double solicitations_mean = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RunResult> runs;  // repetitions x users, user-major within a rep
  SummaryRow summary() const;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

// Pool `samples_per_user` random-arm QoE samples from each of `n_users`
// freshly sampled users and fit a QPN on them.
QpnParams pretrain_transfer_qpn(std::uint64_t env_seed, int samples_per_user = 10,
                                int n_users = 50, const TrainConfig& cfg = {0.05, 2000});

// Pointwise mean of equally long series.
std::vector<double> mean_curve(const std::vector<std::vector<double>>& series);

void write_session_csv(const std::string& path, const ExperimentResult& result);
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);

// Portable parameter dump: "QPN1" magic, little-endian u32 layer count and
// per-layer dims, then per layer row-major weight doubles followed by biases.
void save_qpn_params(const std::string& path, const QpnParams& params);
QpnParams load_qpn_params(const std::string& path);

// Flat key=value config file; '#' starts a comment. Unknown keys are errors.
void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value);
void load_config_file(ExperimentConfig& config, const std::string& path);
Schedule parse_schedule(const std::string& text);

}  // namespace qoesel
