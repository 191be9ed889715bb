#include "qoesel/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace qoesel {

namespace {

// splitmix64; used to derive independent per-run stream seeds.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t stream_seed(std::uint64_t rep_seed, int user, std::uint64_t salt) {
  return mix(mix(rep_seed ^ salt) + static_cast<std::uint64_t>(user));
}

constexpr std::uint64_t kProfileSalt = 0x70726f66;
constexpr std::uint64_t kEnvSalt = 0x656e763a;
constexpr std::uint64_t kPolicySalt = 0x706f6c3a;
constexpr std::uint64_t kPretrainSalt = 0x70726531;

TrainConfig effective_train_cfg(const ExperimentConfig& config, std::size_t dataset_size) {
  TrainConfig cfg = config.train;
  if (config.normalize_learning_rate && dataset_size > 0)
    cfg.learning_rate /= static_cast<double>(dataset_size);
  return cfg;
}

struct PolicyState {
  BanditState bandit;
  LinUcbState linucb;
  std::vector<AggregatedRecord> agg_memory;
};

PolicyState init_policy(const ExperimentConfig& config, std::uint64_t policy_seed,
                        const QpnParams* pretrained) {
  PolicyState s;
  switch (config.policy) {
    case Policy::NeuralUcb:
    case Policy::NeuralUcbAgg:
      s.bandit = init_state(policy_seed, config.gamma, config.width_h);
      break;
    case Policy::NeuralUcbTransfer:
      s.bandit = init_with_transfer(*pretrained, config.gamma, config.width_h);
      break;
    case Policy::LinUcb:
      s.linucb = linucb_init(static_cast<int>(catalog().size()), kInputDim, config.linucb_alpha);
      break;
    default:
      break;
  }
  return s;
}

int select_with_policy(const ExperimentConfig& config, PolicyState& state, const ArmSet& arms,
                       int oracle_arm, Rng& policy_rng) {
  switch (config.policy) {
    case Policy::NeuralUcb:
    case Policy::NeuralUcbTransfer:
    case Policy::NeuralUcbAgg:
      return select_arm(state.bandit, arms);
    case Policy::LinUcb:
      return linucb_select(state.linucb, arms);
    case Policy::Random:
      return random_select(policy_rng, static_cast<int>(arms.contexts.size()));
    case Policy::Fixed:
      return fixed_select(config.fixed_arm);
    case Policy::Oracle:
      return oracle_arm;
  }
  throw std::logic_error("harness: unreachable");
}

bool policy_learns(Policy policy) {
  return policy == Policy::NeuralUcb || policy == Policy::NeuralUcbTransfer ||
         policy == Policy::NeuralUcbAgg || policy == Policy::LinUcb;
}

void observe_with_policy(const ExperimentConfig& config, PolicyState& state,
                         const ContextVector& context, double reward, int arm) {
  switch (config.policy) {
    case Policy::NeuralUcb:
    case Policy::NeuralUcbTransfer:
    case Policy::NeuralUcbAgg:
      observe_reward(state.bandit, context, reward,
                     effective_train_cfg(config, state.bandit.dataset.size() + 1));
      break;
    case Policy::LinUcb:
      linucb_update(state.linucb, arm, context, reward);
      break;
    default:
      break;
  }
}

// Refinement pass over all aggregated records plus the plain dataset, then
// confidence updates for each context chosen in the new record.
void observe_aggregated(const ExperimentConfig& config, PolicyState& state,
                        AggregatedRecord record) {
  BanditState& bandit = state.bandit;
  std::vector<Eigen::VectorXd> grads;
  grads.reserve(record.contexts.size());
  for (const auto& ctx : record.contexts) grads.push_back(gradient(bandit.theta, ctx));

  state.agg_memory.push_back(std::move(record));

  std::size_t total = bandit.dataset.size();
  for (const auto& r : state.agg_memory) total += r.contexts.size();
  RefinementConfig rcfg = config.refine;
  rcfg.train_cfg = effective_train_cfg(config, total);
  // Same overshoot backoff as observe_reward.
  for (int tries = 0;; ++tries) {
    try {
      bandit.theta = refine(state.agg_memory, bandit.dataset, bandit.theta, rcfg).params;
      break;
    } catch (const std::runtime_error&) {
      if (tries == 8) throw;
      rcfg.train_cfg.learning_rate *= 0.5;
    }
  }

  for (const auto& g : grads) {
    bandit.z_matrix.noalias() += (g * g.transpose()) / bandit.width_h;
    const Eigen::VectorXd v = bandit.z_inverse * g;
    const double denom = bandit.width_h + g.dot(v);
    bandit.z_inverse.noalias() -= (v * v.transpose()) / denom;
  }
}

RunResult run_single(const ExperimentConfig& config, std::uint64_t rep_seed, int user,
                     const QpnParams* pretrained) {
  Rng profile_rng(stream_seed(rep_seed, user, kProfileSalt));
  Rng env_rng(stream_seed(rep_seed, user, kEnvSalt));
  Rng policy_rng(stream_seed(rep_seed, user, kPolicySalt));

  const UserProfile profile = sample_user(profile_rng);
  const auto& models = catalog();
  const int num_arms = static_cast<int>(models.size());

  PolicyState state =
      init_policy(config, stream_seed(rep_seed, user, kPolicySalt + 1), pretrained);
  ScheduleState schedule_state;

  RunResult result;
  result.seed = rep_seed;
  result.user = user;
  result.logs.reserve(config.sessions);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> k_dist(1, config.max_context_changes);

  for (std::int64_t t = 1; t <= config.sessions; ++t) {
    const bool solicited =
        config.policy == Policy::Oracle ? false : step_schedule(config.schedule, schedule_state);

    const bool aggregated = config.aggregation != AggregationMode::None &&
                            unit(env_rng) < config.mixed_fraction;
    const int changes = aggregated ? k_dist(env_rng) : 1;

    AggregatedRecord record;
    record.session = t;
    std::vector<double> rewards;
    double expected_sum = 0.0, oracle_sum = 0.0;
    int last_arm = 0, last_oracle = 0;

    for (int k = 0; k < changes; ++k) {
      const EnvContext env_ctx = sample_context(env_rng, config.env);
      ArmSet arms;
      arms.contexts.reserve(num_arms);
      for (const auto& model : models) arms.contexts.push_back(encode_context(env_ctx, model));

      const auto [oracle_arm, oracle_value] = oracle_best(profile, env_ctx, models, config.env);
      const int chosen = select_with_policy(config, state, arms, oracle_arm, policy_rng);

      rewards.push_back(qoe(profile, env_ctx, models[chosen], env_rng, config.env));
      expected_sum += expected_qoe(profile, env_ctx, models[chosen], config.env);
      oracle_sum += oracle_value;
      record.contexts.push_back(arms.contexts[chosen]);
      record.arm_indices.push_back(chosen);
      last_arm = chosen;
      last_oracle = oracle_arm;
    }

    double session_reward;
    if (aggregated) {
      session_reward = config.aggregation == AggregationMode::Mean ? aggregate_mean(rewards)
                                                                   : aggregate_sequence(rewards);
    } else {
      session_reward = rewards.front();
    }

    if (solicited && policy_learns(config.policy)) {
      if (!aggregated) {
        observe_with_policy(config, state, record.contexts.front(), session_reward,
                            record.arm_indices.front());
      } else if (config.naive_last_arm || config.policy != Policy::NeuralUcbAgg) {
        observe_with_policy(config, state, record.contexts.back(), session_reward, last_arm);
      } else {
        record.aggregated_reward = session_reward;
        observe_aggregated(config, state, std::move(record));
      }
    }

    SessionLog log;
    log.session = t;
    log.chosen_arm = last_arm;
    log.oracle_arm = last_oracle;
    log.reward = session_reward;
    log.expected_reward = expected_sum / changes;
    log.oracle_expected_reward = oracle_sum / changes;
    log.solicited = solicited;
    result.logs.push_back(log);
  }
  return result;
}

void validate(const ExperimentConfig& config) {
  if (config.sessions < 1) throw std::invalid_argument("config: sessions must be >= 1");
  if (config.users < 1) throw std::invalid_argument("config: users must be >= 1");
  if (config.repetitions < 1) throw std::invalid_argument("config: repetitions must be >= 1");
  if (config.mixed_fraction < 0.0 || config.mixed_fraction > 1.0)
    throw std::invalid_argument("config: mixed_fraction must be in [0,1]");
  if (config.max_context_changes < 1)
    throw std::invalid_argument("config: max_context_changes must be >= 1");
  if (config.fixed_arm < 0 || config.fixed_arm >= static_cast<int>(catalog().size()))
    throw std::invalid_argument("config: fixed_arm out of range");
  if (config.schedule.kind == Schedule::Kind::FixedHorizon &&
      config.schedule.horizon < config.sessions)
    throw std::invalid_argument("config: fixed-horizon schedule shorter than the session count");
}

}  // namespace

std::string policy_name(Policy policy, int fixed_arm) {
  switch (policy) {
    case Policy::NeuralUcb: return "neural_ucb";
    case Policy::NeuralUcbTransfer: return "neural_ucb_transfer";
    case Policy::NeuralUcbAgg: return "neural_ucb_agg";
    case Policy::LinUcb: return "linucb";
    case Policy::Random: return "random";
    case Policy::Fixed: return "fixed" + std::to_string(fixed_arm);
    case Policy::Oracle: return "oracle";
  }
  throw std::logic_error("policy_name: unreachable");
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config);

  QpnParams pretrained;
  const QpnParams* pretrained_ptr = nullptr;
  if (config.policy == Policy::NeuralUcbTransfer) {
    pretrained = config.has_pretrained
                     ? config.pretrained
                     : pretrain_transfer_qpn(mix(config.seed ^ kPretrainSalt));
    pretrained_ptr = &pretrained;
  }

  ExperimentResult result;
  result.config = config;
  const int total = config.repetitions * config.users;
  result.runs.resize(total);

  auto run_index = [&](int idx) {
    const int rep = idx / config.users;
    const int user = idx % config.users;
    result.runs[idx] =
        run_single(config, config.seed + static_cast<std::uint64_t>(rep), user, pretrained_ptr);
  };

  const int threads = std::max(1, config.threads);
  if (threads == 1) {
    for (int i = 0; i < total; ++i) run_index(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < total; i = next.fetch_add(1)) run_index(i);
      });
    for (auto& th : pool) th.join();
  }

  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    write_session_csv(config.out_dir + "/sessions.csv", result);
    write_summary_csv(config.out_dir + "/summary.csv", {result.summary()});
  }
  return result;
}

SummaryRow ExperimentResult::summary() const {
  SummaryRow row;
  row.policy = policy_name(config.policy, config.fixed_arm);
  row.runs = static_cast<int>(runs.size());
  std::vector<double> qoes, regrets, m_regrets;
  double solicitations = 0.0;
  for (const auto& run : runs) {
    qoes.push_back(average_qoe(run.logs));
    regrets.push_back(cumulative_regret(run.logs).back());
    m_regrets.push_back(m_regret(run.logs, config.lambda).back());
    for (const auto& log : run.logs) solicitations += log.solicited ? 1.0 : 0.0;
  }
  auto mean_std = [](const std::vector<double>& v, double& mean, double& sd) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    sd = 0.0;
    for (double x : v) sd += (x - mean) * (x - mean);
    sd = v.size() > 1 ? std::sqrt(sd / static_cast<double>(v.size() - 1)) : 0.0;
  };
  mean_std(qoes, row.avg_qoe_mean, row.avg_qoe_std);
  mean_std(regrets, row.final_regret_mean, row.final_regret_std);
  mean_std(m_regrets, row.final_m_regret_mean, row.final_m_regret_std);
  row.solicitations_mean = solicitations / static_cast<double>(runs.size());
  return row;
}

QpnParams pretrain_transfer_qpn(std::uint64_t env_seed, int samples_per_user, int n_users,
                                const TrainConfig& cfg) {
  std::vector<Sample> pool;
  pool.reserve(static_cast<std::size_t>(samples_per_user) * n_users);
  const auto& models = catalog();
  for (int u = 0; u < n_users; ++u) {
    Rng rng(stream_seed(env_seed, u, kPretrainSalt));
    UserProfile profile = sample_user(rng);
    for (int s = 0; s < samples_per_user; ++s) {
      const EnvContext ctx = sample_context(rng);
      const int arm = random_select(rng, static_cast<int>(models.size()));
      const double reward = qoe(profile, ctx, models[arm], rng);
      pool.emplace_back(encode_context(ctx, models[arm]), reward);
    }
  }
  TrainConfig effective = cfg;
  effective.learning_rate /= static_cast<double>(pool.size());
  return train_qpn(QpnParams::random_init(mix(env_seed)), pool, effective).params;
}

std::vector<double> mean_curve(const std::vector<std::vector<double>>& series) {
  if (series.empty()) throw std::invalid_argument("mean_curve: no series");
  std::vector<double> mean(series.front().size(), 0.0);
  for (const auto& s : series) {
    if (s.size() != mean.size()) throw std::invalid_argument("mean_curve: length mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) mean[i] += s[i];
  }
  for (auto& v : mean) v /= static_cast<double>(series.size());
  return mean;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

void write_session_csv(const std::string& path, const ExperimentResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "session,policy,seed,user,chosen_arm,oracle_arm,reward,expected_reward,"
         "oracle_expected_reward,solicited,cum_regret,cum_m_regret\n";
  const std::string name = policy_name(result.config.policy, result.config.fixed_arm);
  for (const auto& run : result.runs) {
    const auto regret = cumulative_regret(run.logs);
    const auto mreg = m_regret(run.logs, result.config.lambda);
    for (std::size_t i = 0; i < run.logs.size(); ++i) {
      const auto& log = run.logs[i];
      out << log.session << ',' << name << ',' << run.seed << ',' << run.user << ','
          << log.chosen_arm << ',' << log.oracle_arm << ',' << fmt(log.reward) << ','
          << fmt(log.expected_reward) << ',' << fmt(log.oracle_expected_reward) << ','
          << (log.solicited ? 1 : 0) << ',' << fmt(regret[i]) << ',' << fmt(mreg[i]) << '\n';
    }
  }
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "policy,runs,avg_qoe_mean,avg_qoe_std,final_regret_mean,final_regret_std,"
         "final_m_regret_mean,final_m_regret_std,solicitations_mean\n";
  for (const auto& row : rows) {
    out << row.policy << ',' << row.runs << ',' << fmt(row.avg_qoe_mean) << ','
        << fmt(row.avg_qoe_std) << ',' << fmt(row.final_regret_mean) << ','
        << fmt(row.final_regret_std) << ',' << fmt(row.final_m_regret_mean) << ','
        << fmt(row.final_m_regret_std) << ',' << fmt(row.solicitations_mean) << '\n';
  }
}

void save_qpn_params(const std::string& path, const QpnParams& params) {
  if (!params.well_formed()) throw std::invalid_argument("save_qpn_params: malformed params");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.write("QPN1", 4);
  auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  put_u32(kNumLayers);
  for (const auto& [in, dim_out] : QpnParams::layer_dims()) {
    put_u32(static_cast<std::uint32_t>(in));
    put_u32(static_cast<std::uint32_t>(dim_out));
  }
  for (int l = 0; l < kNumLayers; ++l) {
    for (Eigen::Index i = 0; i < params.weights[l].rows(); ++i)
      for (Eigen::Index j = 0; j < params.weights[l].cols(); ++j) {
        const double v = params.weights[l](i, j);
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
    for (Eigen::Index i = 0; i < params.biases[l].size(); ++i) {
      const double v = params.biases[l](i);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

QpnParams load_qpn_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "QPN1", 4) != 0)
    throw std::runtime_error("load_qpn_params: bad magic");
  auto get_u32 = [&] {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  if (get_u32() != kNumLayers) throw std::runtime_error("load_qpn_params: wrong layer count");
  for (const auto& [in_dim, out_dim] : QpnParams::layer_dims()) {
    if (get_u32() != static_cast<std::uint32_t>(in_dim) ||
        get_u32() != static_cast<std::uint32_t>(out_dim))
      throw std::runtime_error("load_qpn_params: dimension mismatch");
  }
  QpnParams params = QpnParams::zeros();
  for (int l = 0; l < kNumLayers; ++l) {
    for (Eigen::Index i = 0; i < params.weights[l].rows(); ++i)
      for (Eigen::Index j = 0; j < params.weights[l].cols(); ++j)
        in.read(reinterpret_cast<char*>(&params.weights[l](i, j)), sizeof(double));
    for (Eigen::Index i = 0; i < params.biases[l].size(); ++i)
      in.read(reinterpret_cast<char*>(&params.biases[l](i)), sizeof(double));
  }
  if (!in) throw std::runtime_error("load_qpn_params: truncated file");
  return params;
}

Schedule parse_schedule(const std::string& text) {
  if (text == "always") return Schedule::always();
  if (text.rfind("fss:", 0) == 0) return Schedule::fixed_horizon(std::stoll(text.substr(4)));
  if (text.rfind("fssut:", 0) == 0) return Schedule::unknown_horizon(std::stod(text.substr(6)));
  throw std::invalid_argument("unknown schedule: " + text);
}

namespace {

Policy parse_policy(const std::string& text, int& fixed_arm) {
  if (text == "neural_ucb") return Policy::NeuralUcb;
  if (text == "neural_ucb_transfer") return Policy::NeuralUcbTransfer;
  if (text == "neural_ucb_agg") return Policy::NeuralUcbAgg;
  if (text == "linucb") return Policy::LinUcb;
  if (text == "random") return Policy::Random;
  if (text == "oracle") return Policy::Oracle;
  if (text.rfind("fixed", 0) == 0) {
    fixed_arm = text.size() > 5 ? std::stoi(text.substr(5)) : 0;
    return Policy::Fixed;
  }
  throw std::invalid_argument("unknown policy: " + text);
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw std::invalid_argument("not a boolean: " + v);
}

}  // namespace

void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value) {
  if (key == "policy") config.policy = parse_policy(value, config.fixed_arm);
  else if (key == "fixed_arm") config.fixed_arm = std::stoi(value);
  else if (key == "schedule") config.schedule = parse_schedule(value);
  else if (key == "sessions") config.sessions = std::stoll(value);
  else if (key == "users") config.users = std::stoi(value);
  else if (key == "repetitions") config.repetitions = std::stoi(value);
  else if (key == "seed") config.seed = std::stoull(value);
  else if (key == "lambda") config.lambda = std::stod(value);
  else if (key == "gamma") config.gamma = std::stod(value);
  else if (key == "width_h") config.width_h = std::stod(value);
  else if (key == "learning_rate") config.train.learning_rate = std::stod(value);
  else if (key == "train_steps") config.train.steps = std::stoi(value);
  else if (key == "normalize_learning_rate") config.normalize_learning_rate = parse_bool(value);
  else if (key == "linucb_alpha") config.linucb_alpha = std::stod(value);
  else if (key == "aggregation") {
    if (value == "none") config.aggregation = AggregationMode::None;
    else if (value == "mean") config.aggregation = AggregationMode::Mean;
    else if (value == "sequence") config.aggregation = AggregationMode::Sequence;
    else throw std::invalid_argument("unknown aggregation: " + value);
  }
  else if (key == "mixed_fraction") config.mixed_fraction = std::stod(value);
  else if (key == "max_context_changes") config.max_context_changes = std::stoi(value);
  else if (key == "naive_last_arm") config.naive_last_arm = parse_bool(value);
  else if (key == "refine_tolerance") config.refine.residual_tolerance = std::stod(value);
  else if (key == "refine_max_iterations") config.refine.max_iterations = std::stoi(value);
  else if (key == "battery_low_prob") config.env.battery_low_prob = std::stod(value);
  else if (key == "brightness_min") config.env.brightness_min = std::stod(value);
  else if (key == "brightness_max") config.env.brightness_max = std::stod(value);
  else if (key == "resample_loc_weight") config.env.resample_loc_weight = parse_bool(value);
  else if (key == "threads") config.threads = std::stoi(value);
  else if (key == "out") config.out_dir = value;
  else throw std::invalid_argument("unknown config key: " + key);
}

void load_config_file(ExperimentConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    apply_config_entry(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

}  // namespace qoesel
