#include "mbsf/envs.hpp"

#include <algorithm>
#include <cmath>

namespace mbsf {

bool NavTask::in_goal(double x, double y) const {
  return std::hypot(x - goal_x, y - goal_y) <= goal_radius;
}

bool NavTask::blocked(double x, double y) const {
  return std::any_of(barriers.begin(), barriers.end(),
                     [&](const Rect& r) { return r.contains(x, y); });
}

void NavTask::validate() const {
  if (!(hi > lo)) throw ConfigError("navigation arena needs hi > lo");
  if (!(step_size > 0.0)) throw ConfigError("navigation step_size must be > 0");
  if (!(slip_prob >= 0.0 && slip_prob <= 1.0)) throw ConfigError("slip_prob must be in [0, 1]");
  if (!(goal_radius > 0.0)) throw ConfigError("goal radius must be > 0");
  auto inside = [&](double v) { return v >= lo && v <= hi; };
  if (!inside(goal_x) || !inside(goal_y)) throw ConfigError("goal center lies outside the arena");
  for (const auto& r : barriers) {
    if (!(r.x1 >= r.x0 && r.y1 >= r.y0)) throw ConfigError("barrier rectangle has negative extent");
    if (!inside(r.x0) || !inside(r.x1) || !inside(r.y0) || !inside(r.y1)) {
      throw ConfigError("barrier lies outside the arena");
    }
  }
}

Vector nav_reset(const NavTask& task, Rng& rng) {
  std::uniform_real_distribution<double> coord(task.lo, task.hi);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double x = coord(rng);
    const double y = coord(rng);
    if (!task.blocked(x, y) && !task.in_goal(x, y)) return Vector{{x, y}};
  }
  throw ConfigError("navigation task leaves no free start region");
}

namespace {

// Axis-aligned segment (x0,y0)-(x1,y1) against a closed rectangle.
bool segment_hits(const Rect& r, double x0, double y0, double x1, double y1) {
  const double xmin = std::min(x0, x1), xmax = std::max(x0, x1);
  const double ymin = std::min(y0, y1), ymax = std::max(y0, y1);
  return xmax >= r.x0 && xmin <= r.x1 && ymax >= r.y0 && ymin <= r.y1;
}

}  // namespace

StepResult nav_step(const NavTask& task, const Vector& state, std::size_t action, Rng& rng) {
  if (state.size() != 2 || !state.allFinite()) throw ValidationError("navigation state must be a finite 2-vector");
  const double x = state[0], y = state[1];
  if (x < task.lo || x > task.hi || y < task.lo || y > task.hi) {
    throw ValidationError("navigation state lies outside the arena");
  }
  if (task.blocked(x, y)) throw ValidationError("navigation state lies inside a barrier");
  if (action >= NavTask::num_actions()) throw ValidationError("navigation action out of range");

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const bool slip = u01(rng) < task.slip_prob;

  double nx = x, ny = y;
  if (!slip) {
    switch (action) {
      case kLeft: nx -= task.step_size; break;
      case kRight: nx += task.step_size; break;
      case kUp: ny += task.step_size; break;
      default: ny -= task.step_size; break;
    }
    nx = std::clamp(nx, task.lo, task.hi);
    ny = std::clamp(ny, task.lo, task.hi);
    for (const auto& r : task.barriers) {
      if (segment_hits(r, x, y, nx, ny)) {
        nx = x;
        ny = y;
        break;
      }
    }
  }
  const bool done = task.in_goal(nx, ny);
  return {Vector{{nx, ny}}, done ? 1.0 : 0.0, done};
}

std::size_t LockTask::num_states() const {
  std::size_t n = 1;
  for (std::size_t i = 0; i < dials; ++i) n *= static_cast<std::size_t>(modulus);
  return n;
}

bool LockTask::rewarding(const Vector& state) const {
  return std::all_of(reward_combo.begin(), reward_combo.end(), [&](const DialSetting& c) {
    return static_cast<int>(state[static_cast<Eigen::Index>(c.dial)]) == c.value;
  });
}

void LockTask::validate() const {
  if (dials == 0 || modulus < 2) throw ConfigError("lock needs >= 1 dial and modulus >= 2");
  if (direction.size() != dials) throw ConfigError("lock direction list must have one entry per dial");
  for (int d : direction) {
    if (d != 1 && d != -1) throw ConfigError("lock dial direction must be +1 or -1");
  }
  if (controllable.empty()) throw ConfigError("lock needs at least one controllable dial");
  auto listed = [](const std::vector<std::size_t>& v, std::size_t d) {
    return std::find(v.begin(), v.end(), d) != v.end();
  };
  for (auto d : controllable) {
    if (d >= dials) throw ConfigError("controllable dial out of range");
    if (listed(random_dials, d)) throw ConfigError("a dial cannot be both controllable and random");
  }
  for (auto d : random_dials) {
    if (d >= dials) throw ConfigError("random dial out of range");
  }
  if (reward_combo.empty()) throw ConfigError("lock reward combination is empty");
  for (const auto& c : reward_combo) {
    if (c.dial >= dials || c.value < 0 || c.value >= modulus) throw ConfigError("bad reward combination entry");
    if (listed(random_dials, c.dial)) throw ConfigError("reward combination references a random dial");
  }
  for (const auto& c : start) {
    if (c.dial >= dials || c.value < 0 || c.value >= modulus) throw ConfigError("bad start entry");
  }
}

Vector lock_reset(const LockTask& task, Rng& rng) {
  std::uniform_int_distribution<int> digit(0, task.modulus - 1);
  Vector s(static_cast<Eigen::Index>(task.dials));
  for (std::size_t d = 0; d < task.dials; ++d) s[static_cast<Eigen::Index>(d)] = digit(rng);
  for (const auto& c : task.start) s[static_cast<Eigen::Index>(c.dial)] = c.value;
  return s;
}

StepResult lock_rotate(const LockTask& task, const Vector& state, std::size_t dial, Rng& rng) {
  if (state.size() != static_cast<Eigen::Index>(task.dials)) throw ValidationError("lock state has wrong length");
  if (std::find(task.controllable.begin(), task.controllable.end(), dial) == task.controllable.end()) {
    throw ValidationError("dial " + std::to_string(dial) + " is not controllable");
  }
  Vector next = state;
  const auto d = static_cast<Eigen::Index>(dial);
  int digit = (static_cast<int>(state[d]) + task.direction[dial]) % task.modulus;
  if (digit < 0) digit += task.modulus;
  next[d] = digit;

  std::uniform_int_distribution<int> spin(0, task.modulus - 1);
  for (auto r : task.random_dials) next[static_cast<Eigen::Index>(r)] = spin(rng);

  const bool done = task.rewarding(next);
  return {std::move(next), done ? 1.0 : 0.0, done};
}

StepResult lock_step(const LockTask& task, const Vector& state, std::size_t action, Rng& rng) {
  if (action >= task.controllable.size()) throw ValidationError("lock action out of range");
  return lock_rotate(task, state, task.controllable[action], rng);
}

}  // namespace mbsf
