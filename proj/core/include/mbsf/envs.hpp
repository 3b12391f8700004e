#pragma once

// Benchmark environments: continuous 2-D navigation with barriers and the
// combination lock. Both are plain values; randomness comes in through an
// explicit generator.

#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mbsf/features.hpp"
#include "mbsf/types.hpp"

namespace mbsf {

using Rng = std::mt19937_64;

struct StepResult {
  Vector next_state;
  double reward = 0.0;
  bool done = false;
};

/// Closed axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  bool operator==(const Rect&) const = default;
};

enum NavAction : std::size_t { kLeft = 0, kRight = 1, kUp = 2, kDown = 3 };

struct NavTask {
  double lo = 0.0;  ///< the arena is [lo, hi]^2
  double hi = 1.0;
  double step_size = 0.05;
  double slip_prob = 0.05;
  std::vector<Rect> barriers;
  double goal_x = 0.9;
  double goal_y = 0.9;
  double goal_radius = 0.1;

  static constexpr std::size_t num_actions() { return 4; }
  bool in_goal(double x, double y) const;
  bool blocked(double x, double y) const;
  void validate() const;
};

/// Uniform over the arena minus barriers and goal (rejection sampled).
Vector nav_reset(const NavTask& task, Rng& rng);
StepResult nav_step(const NavTask& task, const Vector& state, std::size_t action, Rng& rng);

struct DialSetting {
  std::size_t dial = 0;
  int value = 0;
  bool operator==(const DialSetting&) const = default;
};

/**
Combination lock: `dials` dials with digits 0..modulus-1. Action i rotates
controllable[i] by direction[controllable[i]]; every random dial is resampled
uniformly after each action. Reward +1 (and episode end) once every entry of
reward_combo holds.
*/
struct LockTask {
  std::size_t dials = 3;
  int modulus = 6;
  std::vector<std::size_t> controllable;
  std::vector<int> direction;  ///< per dial, +1 or -1
  std::vector<std::size_t> random_dials;
  std::vector<DialSetting> reward_combo;
  std::vector<DialSetting> start;  ///< dials not listed start uniform

  std::size_t num_actions() const { return controllable.size(); }
  std::size_t num_states() const;
  bool rewarding(const Vector& state) const;
  void validate() const;
};

Vector lock_reset(const LockTask& task, Rng& rng);
/// Rotate the dial behind action index `action`.
StepResult lock_step(const LockTask& task, const Vector& state, std::size_t action, Rng& rng);
/// Rotate a dial by number. Throws ValidationError for random or
/// uncontrollable dials.
StepResult lock_rotate(const LockTask& task, const Vector& state, std::size_t dial, Rng& rng);

/// RBF layout a task asks for.
struct FeatureSpec {
  std::size_t order = 4;
  Vector lo;
  Vector hi;
  CenterPlacement placement = CenterPlacement::endpoints;
  std::vector<std::size_t> input_dims;
};

inline constexpr int kTaskFormatVersion = 1;

/// Declarative task description: one environment plus its episode budget and
/// default featurization.
struct TaskSpec {
  int format_version = kTaskFormatVersion;
  std::string name;
  std::variant<NavTask, LockTask> env;
  std::size_t episodes = 0;
  std::size_t episode_cap = 0;
  FeatureSpec features;

  bool is_navigation() const { return std::holds_alternative<NavTask>(env); }
  std::size_t num_actions() const;
  std::size_t state_dim() const;
  void validate() const;

  Vector reset(Rng& rng) const;
  StepResult step(const Vector& state, std::size_t action, Rng& rng) const;
};

/// A, B, C (navigation) and lock1, lock2, lock3.
TaskSpec builtin_task(std::string_view name);
std::vector<std::string> builtin_task_names();

TaskSpec parse_task_spec(std::string_view json_text);
std::string dump_task_spec(const TaskSpec& spec);
TaskSpec load_task_spec(const std::string& path);
/// Built-in name or path to a task file.
TaskSpec resolve_task(const std::string& name_or_path);

/// Feature map laid out per spec.features with the given grid order.
FeatureMap make_feature_map(const FeatureSpec& spec, std::size_t order, double lr_mu,
                            double lr_sigma);

}  // namespace mbsf
