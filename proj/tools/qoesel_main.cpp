// Experiment runner CLI: `run` executes a configured multi-user experiment
// and writes per-session and summary CSV files; `pretrain` builds a pooled
// warm-start parameter dump for the transfer policy.

#include "qoesel/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"QoE-driven online DNN selection experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a seeded multi-user experiment");
  std::string config_path, policy, schedule, aggregation, out_dir, params_in;
  std::int64_t sessions = -1;
  int users = -1, repetitions = -1, threads = -1;
  double lambda = -1.0, gamma = -1.0, mixed_fraction = -1.0;
  std::uint64_t seed = 0;
  bool seed_set = false, naive = false;
  run->add_option("--config", config_path, "Key=value config file");
  run->add_option("--policy", policy,
                  "neural_ucb|neural_ucb_transfer|neural_ucb_agg|linucb|random|fixed<m>|oracle");
  run->add_option("--sessions", sessions, "Sessions per user");
  run->add_option("--users", users, "Simulated users");
  run->add_option("--reps", repetitions, "Seed repetitions");
  run->add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t v) { seed = v; seed_set = true; }, "Base seed");
  run->add_option("--schedule", schedule, "always|fss:<T>|fssut:<alpha>");
  run->add_option("--lambda", lambda, "Unit solicitation cost");
  run->add_option("--gamma", gamma, "Exploration scale");
  run->add_option("--aggregation", aggregation, "none|mean|sequence");
  run->add_option("--mixed-fraction", mixed_fraction, "Fraction of aggregated-feedback sessions");
  run->add_flag("--naive-last-arm", naive, "Attribute aggregated QoE to the last selected DNN");
  run->add_option("--transfer-params", params_in, "Parameter dump for the transfer policy");
  run->add_option("--threads", threads, "Worker threads");
  run->add_option("--out", out_dir, "Output directory for CSV files");

  auto* pretrain = app.add_subcommand("pretrain", "Pretrain a QPN on pooled multi-user samples");
  std::string params_out;
  std::uint64_t pre_seed = 1;
  int samples_per_user = 10, pre_users = 50;
  pretrain->add_option("--out", params_out, "Parameter dump path")->required();
  pretrain->add_option("--seed", pre_seed, "Environment seed");
  pretrain->add_option("--samples-per-user", samples_per_user, "Samples pooled per user");
  pretrain->add_option("--users", pre_users, "Number of pooled users");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      qoesel::ExperimentConfig config;
      if (!config_path.empty()) qoesel::load_config_file(config, config_path);
      // CLI flags win over file values.
      if (!policy.empty()) qoesel::apply_config_entry(config, "policy", policy);
      if (sessions >= 0) config.sessions = sessions;
      if (users >= 0) config.users = users;
      if (repetitions >= 0) config.repetitions = repetitions;
      if (seed_set) config.seed = seed;
      if (!schedule.empty()) config.schedule = qoesel::parse_schedule(schedule);
      if (lambda >= 0.0) config.lambda = lambda;
      if (gamma >= 0.0) config.gamma = gamma;
      if (!aggregation.empty()) qoesel::apply_config_entry(config, "aggregation", aggregation);
      if (mixed_fraction >= 0.0) config.mixed_fraction = mixed_fraction;
      if (naive) config.naive_last_arm = true;
      if (threads > 0) config.threads = threads;
      if (!out_dir.empty()) config.out_dir = out_dir;
      if (!params_in.empty()) {
        config.pretrained = qoesel::load_qpn_params(params_in);
        config.has_pretrained = true;
      }
      if (!config.out_dir.empty()) std::filesystem::create_directories(config.out_dir);

      const auto result = qoesel::run_experiment(config);
      const auto summary = result.summary();
      std::printf("policy=%s runs=%d avg_qoe=%.4f+-%.4f final_regret=%.3f final_m_regret=%.3f "
                  "solicitations=%.1f\n",
                  summary.policy.c_str(), summary.runs, summary.avg_qoe_mean, summary.avg_qoe_std,
                  summary.final_regret_mean, summary.final_m_regret_mean,
                  summary.solicitations_mean);
      if (!config.out_dir.empty())
        std::printf("wrote %s/sessions.csv and %s/summary.csv\n", config.out_dir.c_str(),
                    config.out_dir.c_str());
    } else if (pretrain->parsed()) {
      const auto params =
          qoesel::pretrain_transfer_qpn(pre_seed, samples_per_user, pre_users);
      qoesel::save_qpn_params(params_out, params);
      std::printf("wrote %s (%d parameters)\n", params_out.c_str(), qoesel::kParamCount);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
