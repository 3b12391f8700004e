#pragma once

// Seeded multi-run experiments, the transfer protocol, aggregation into the
// episode-length tables, and CSV output.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mbsf/agent.hpp"

namespace mbsf {

inline constexpr int kConfigFormatVersion = 1;

/// Where transfer runs get their initial agent.
enum class TransferMode {
  none,         ///< fresh agent per seed
  shared,       ///< every seed loads the checkpoint at checkpoint_in
  per_seed,     ///< seed n loads checkpoint_in/seed_<n>.ckpt
  matched_run,  ///< seed n first trains on source_task with the same seed
};

struct ExperimentConfig {
  TaskSpec task;
  AgentConfig agent;
  PolicyKind policy = PolicyKind::uncertainty_aware;
  std::size_t episodes = 0;     ///< 0 means task.episodes
  std::size_t episode_cap = 0;  ///< 0 means task.episode_cap
  std::vector<std::uint64_t> seeds;
  std::size_t jobs = 1;
  bool record_bound = false;

  TransferMode transfer = TransferMode::none;
  std::optional<std::string> checkpoint_in;
  std::optional<TaskSpec> source_task;
  /// Agent settings for the source phase of matched_run; defaults to `agent`.
  std::optional<AgentConfig> source_agent;
  /// Policy for the source phase; defaults to `policy`.
  std::optional<PolicyKind> source_policy;

  std::size_t resolved_episodes() const { return episodes ? episodes : task.episodes; }
  std::size_t resolved_cap() const { return episode_cap ? episode_cap : task.episode_cap; }
  void validate() const;
};

/// Seeds 1..n.
std::vector<std::uint64_t> default_seeds(std::size_t n = 20);

/// Table-B.1-style agent settings serialized as flat JSON with format_version.
/// Unknown keys are rejected; missing keys keep the values in `base`.
AgentConfig parse_agent_config(std::string_view json_text, const AgentConfig& base);
std::string dump_agent_config(const AgentConfig& cfg);

struct RunRecord {
  std::uint64_t seed = 0;
  std::vector<EpisodeRecord> episodes;
  std::size_t total_steps = 0;
  double wall_seconds = 0.0;
  Diagnostics diagnostics;
  std::optional<AgentState> final_agent;

  double seconds_per_step() const {
    return total_steps ? wall_seconds / static_cast<double>(total_steps) : 0.0;
  }
  double mean_length() const;
};

/// Independent source-free run of one seed from a given starting agent.
RunRecord run_seed(const ExperimentConfig& cfg, std::uint64_t seed, bool keep_agent = false);

/// One record per seed in seed order. With jobs > 1 seeds run on worker
/// threads; results do not depend on the job count.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, bool keep_agents = false);

struct Summary {
  std::vector<double> mean_length;  ///< per episode, across seeds
  std::vector<double> std_length;   ///< per episode, population std across seeds
  double grand_mean = 0.0;          ///< mean over episodes of mean_length
  double grand_std = 0.0;           ///< population std across seeds of each run's mean length
  std::size_t runs = 0;
};

Summary aggregate(const std::vector<RunRecord>& records);

/// `episode,mean_length,std_length`, one row per episode, then a row whose
/// episode field is `all` carrying the grand mean and std.
std::string format_csv(const Summary& summary);
void emit_csv(const Summary& summary, const std::string& path);
/// Long format `seed,episode,length,return`.
std::string format_plotdata(const std::vector<RunRecord>& records);
void emit_plotdata(const std::vector<RunRecord>& records, const std::string& path);

/// Fixed-point decimal text independent of the global locale.
std::string format_fixed(double value, int decimals = 6);

/// Checkpoint file name for a seed inside a checkpoint directory.
std::string seed_checkpoint_name(std::uint64_t seed);

}  // namespace mbsf
