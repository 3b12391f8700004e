#include "mbsf/harness.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "mbsf/checkpoint.hpp"

namespace mbsf {

using nlohmann::json;

void ExperimentConfig::validate() const {
  task.validate();
  agent.validate();
  if (seeds.empty()) throw ConfigError("experiment needs at least one seed");
  if (jobs == 0) throw ConfigError("jobs must be >= 1");
  if (resolved_episodes() == 0 || resolved_cap() == 0) throw ConfigError("episodes and cap must be > 0");
  switch (transfer) {
    case TransferMode::shared:
    case TransferMode::per_seed:
      if (!checkpoint_in) throw ConfigError("transfer mode needs checkpoint_in");
      break;
    case TransferMode::matched_run:
      if (!source_task) throw ConfigError("matched-run transfer needs a source task");
      source_task->validate();
      if (source_agent) source_agent->validate();
      break;
    case TransferMode::none:
      break;
  }
}

std::vector<std::uint64_t> default_seeds(std::size_t n) {
  std::vector<std::uint64_t> seeds(n);
  for (std::size_t i = 0; i < n; ++i) seeds[i] = i + 1;
  return seeds;
}

namespace {

// Flat key table shared by parse and dump.
template <typename Fn>
void for_each_scalar(AgentConfig& c, Fn&& fn) {
  fn("gamma", c.gamma);
  fn("theta_prior", c.theta_prior);
  fn("reward_process_var", c.reward_process_var);
  fn("reward_noise_var", c.reward_noise_var);
  fn("reward_prior_var", c.reward_prior_var);
  fn("transition_prior_diag", c.transition_prior_diag);
  fn("transition_process_var", c.transition_process_var);
  fn("transition_noise_var", c.transition_noise_var);
  fn("transition_prior_var", c.transition_prior_var);
  fn("transition_decay", c.transition_decay);
  fn("lr_mu", c.lr_mu);
  fn("lr_sigma", c.lr_sigma);
  fn("epsilon", c.epsilon);
  fn("sf_decay", c.sf_decay);
}

}  // namespace

AgentConfig parse_agent_config(std::string_view json_text, const AgentConfig& base) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  AgentConfig cfg = base;
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kConfigFormatVersion) {
      throw ConfigError("unsupported config format_version " + std::to_string(version));
    }
    for (const auto& [key, value] : j.items()) {
      bool matched = false;
      for_each_scalar(cfg, [&](const char* name, double& field) {
        if (key == name) {
          field = value.get<double>();
          matched = true;
        }
      });
      if (matched || key == "format_version") continue;
      if (key == "order") {
        cfg.order = value.get<std::size_t>();
      } else if (key == "m_kf") {
        if (value.get<int>() != 1) throw ConfigError("config supports m_kf = 1 only");
      } else if (key == "pi_aggregation") {
        cfg.pi_aggregation = parse_pi_aggregation(value.get<std::string>());
      } else if (key == "bonus") {
        cfg.bonus = parse_bonus_kind(value.get<std::string>());
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string dump_agent_config(const AgentConfig& cfg) {
  AgentConfig copy = cfg;
  json j;
  j["format_version"] = kConfigFormatVersion;
  for_each_scalar(copy, [&](const char* key, double& field) { j[key] = field; });
  j["order"] = cfg.order;
  j["m_kf"] = 1;
  j["pi_aggregation"] = to_string(cfg.pi_aggregation);
  j["bonus"] = to_string(cfg.bonus);
  return j.dump(2) + "\n";
}

double RunRecord::mean_length() const {
  if (episodes.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : episodes) sum += static_cast<double>(e.length);
  return sum / static_cast<double>(episodes.size());
}

std::string seed_checkpoint_name(std::uint64_t seed) { return "seed_" + std::to_string(seed) + ".ckpt"; }

namespace {

// Distinct, reproducible streams for the source and target phases of a seed.
Rng phase_rng(std::uint64_t seed, std::uint64_t phase) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(phase)};
  return Rng(seq);
}

void train(AgentState& agent, const TaskSpec& task, std::size_t episodes, std::size_t cap, Rng& rng,
           const EpisodeOptions& opts, std::vector<EpisodeRecord>* out, std::size_t* steps) {
  for (std::size_t e = 0; e < episodes; ++e) {
    EpisodeRecord rec = run_episode(agent, task, cap, rng, opts);
    if (steps) *steps += rec.length;
    if (out) out->push_back(std::move(rec));
  }
}

AgentState initial_agent(const ExperimentConfig& cfg, std::uint64_t seed) {
  switch (cfg.transfer) {
    case TransferMode::shared: {
      AgentState a = load_checkpoint(*cfg.checkpoint_in);
      check_transfer_compatible(a, cfg.task);
      return a;
    }
    case TransferMode::per_seed: {
      const auto path = std::filesystem::path(*cfg.checkpoint_in) / seed_checkpoint_name(seed);
      AgentState a = load_checkpoint(path.string());
      check_transfer_compatible(a, cfg.task);
      return a;
    }
    case TransferMode::matched_run: {
      const TaskSpec& src = *cfg.source_task;
      const AgentConfig& src_cfg = cfg.source_agent ? *cfg.source_agent : cfg.agent;
      AgentState a = make_agent(src_cfg, src, cfg.source_policy.value_or(cfg.policy));
      Rng rng = phase_rng(seed, 1);
      train(a, src, src.episodes, src.episode_cap, rng, {}, nullptr, nullptr);
      check_transfer_compatible(a, cfg.task);
      return a;
    }
    case TransferMode::none:
      break;
  }
  return make_agent(cfg.agent, cfg.task, cfg.policy);
}

}  // namespace

RunRecord run_seed(const ExperimentConfig& cfg, std::uint64_t seed, bool keep_agent) {
  RunRecord rec;
  rec.seed = seed;
  AgentState agent = initial_agent(cfg, seed);
  if (cfg.transfer != TransferMode::none) {
    // A transferred model keeps its parameters but acts with the target
    // experiment's policy.
    agent.policy_kind = cfg.policy;
    agent.epsilon = cfg.agent.epsilon;
    agent.bonus = cfg.agent.bonus;
    if ((cfg.policy == PolicyKind::ua_td_sf) != agent.sf_belief.has_value()) {
      throw ConfigError("transferred checkpoint does not match the requested policy");
    }
  }
  const Diagnostics before = agent.diagnostics;
  Rng rng = phase_rng(seed, 0);
  EpisodeOptions opts;
  opts.record_bound = cfg.record_bound;
  rec.episodes.reserve(cfg.resolved_episodes());
  const auto t0 = std::chrono::steady_clock::now();
  train(agent, cfg.task, cfg.resolved_episodes(), cfg.resolved_cap(), rng, opts, &rec.episodes,
        &rec.total_steps);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rec.diagnostics = agent.diagnostics;
  rec.diagnostics.resolvent_shrinkage -= before.resolvent_shrinkage;
  rec.diagnostics.likelihood_underflow -= before.likelihood_underflow;
  rec.diagnostics.sgd_skipped -= before.sgd_skipped;
  if (keep_agent) rec.final_agent = std::move(agent);
  return rec;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, bool keep_agents) {
  cfg.validate();
  const std::size_t n = cfg.seeds.size();
  std::vector<RunRecord> records(n);
  const std::size_t workers = std::min(cfg.jobs, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) records[i] = run_seed(cfg, cfg.seeds[i], keep_agents);
    return records;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          records[i] = run_seed(cfg, cfg.seeds[i], keep_agents);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return records;
}

Summary aggregate(const std::vector<RunRecord>& records) {
  if (records.empty()) throw ConfigError("aggregate needs at least one run");
  const std::size_t episodes = records.front().episodes.size();
  for (const auto& r : records) {
    if (r.episodes.size() != episodes) throw ConfigError("runs disagree on episode count");
  }
  if (episodes == 0) throw ConfigError("runs contain no episodes");
  Summary s;
  s.runs = records.size();
  s.mean_length.resize(episodes);
  s.std_length.resize(episodes);
  const double n = static_cast<double>(records.size());
  for (std::size_t e = 0; e < episodes; ++e) {
    double sum = 0.0;
    for (const auto& r : records) sum += static_cast<double>(r.episodes[e].length);
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& r : records) {
      const double d = static_cast<double>(r.episodes[e].length) - mean;
      sq += d * d;
    }
    s.mean_length[e] = mean;
    s.std_length[e] = std::sqrt(sq / n);
  }
  double total = 0.0;
  for (double m : s.mean_length) total += m;
  s.grand_mean = total / static_cast<double>(episodes);
  double sq = 0.0;
  for (const auto& r : records) {
    const double d = r.mean_length() - s.grand_mean;
    sq += d * d;
  }
  s.grand_std = std::sqrt(sq / n);
  return s;
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, decimals);
  if (res.ec != std::errc()) throw NumericalError("cannot format value");
  return std::string(buf, res.ptr);
}

std::string format_csv(const Summary& summary) {
  std::string out = "episode,mean_length,std_length\n";
  for (std::size_t e = 0; e < summary.mean_length.size(); ++e) {
    out += std::to_string(e + 1) + ',' + format_fixed(summary.mean_length[e]) + ',' +
           format_fixed(summary.std_length[e]) + '\n';
  }
  out += "all," + format_fixed(summary.grand_mean) + ',' + format_fixed(summary.grand_std) + '\n';
  return out;
}

std::string format_plotdata(const std::vector<RunRecord>& records) {
  std::string out = "seed,episode,length,return\n";
  for (const auto& r : records) {
    for (std::size_t e = 0; e < r.episodes.size(); ++e) {
      out += std::to_string(r.seed) + ',' + std::to_string(e + 1) + ',' +
             std::to_string(r.episodes[e].length) + ',' + format_fixed(r.episodes[e].total_return) + '\n';
    }
  }
  return out;
}

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

}  // namespace

void emit_csv(const Summary& summary, const std::string& path) { write_file(path, format_csv(summary)); }

void emit_plotdata(const std::vector<RunRecord>& records, const std::string& path) {
  write_file(path, format_plotdata(records));
}

}  // namespace mbsf
