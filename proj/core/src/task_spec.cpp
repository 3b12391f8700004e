#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mbsf/envs.hpp"

namespace mbsf {

using nlohmann::json;

std::size_t TaskSpec::num_actions() const {
  return std::visit([](const auto& e) { return e.num_actions(); }, env);
}

std::size_t TaskSpec::state_dim() const {
  if (is_navigation()) return 2;
  return std::get<LockTask>(env).dials;
}

void TaskSpec::validate() const {
  if (format_version != kTaskFormatVersion) {
    throw ConfigError("unsupported task format_version " + std::to_string(format_version));
  }
  if (name.empty()) throw ConfigError("task needs a name");
  std::visit([](const auto& e) { e.validate(); }, env);
  if (episodes == 0 || episode_cap == 0) throw ConfigError("task episodes and episode_cap must be > 0");
  const auto& f = features;
  if (f.order < 2) throw ConfigError("feature order must be >= 2");
  if (f.input_dims.empty()) throw ConfigError("feature input_dims must not be empty");
  for (auto d : f.input_dims) {
    if (d >= state_dim()) throw ConfigError("feature input dim out of range");
  }
  const auto n = static_cast<Eigen::Index>(f.input_dims.size());
  if (f.lo.size() != n || f.hi.size() != n) throw ConfigError("feature lo/hi must match input_dims");
  if (!((f.hi - f.lo).array() > 0.0).all()) throw ConfigError("feature hi must exceed lo");
}

Vector TaskSpec::reset(Rng& rng) const {
  if (is_navigation()) return nav_reset(std::get<NavTask>(env), rng);
  return lock_reset(std::get<LockTask>(env), rng);
}

StepResult TaskSpec::step(const Vector& state, std::size_t action, Rng& rng) const {
  if (is_navigation()) return nav_step(std::get<NavTask>(env), state, action, rng);
  return lock_step(std::get<LockTask>(env), state, action, rng);
}

namespace {

FeatureSpec nav_features() {
  return {4, Vector::Zero(2), Vector::Ones(2), CenterPlacement::interior, {0, 1}};
}

FeatureSpec lock_features(std::vector<std::size_t> dims) {
  return {5, Vector::Zero(2), Vector::Constant(2, 4.8), CenterPlacement::endpoints, std::move(dims)};
}

// Wall in mid-field with the passage along the top edge.
NavTask nav_source() {
  NavTask t;
  t.barriers = {Rect{0.45, 0.0, 0.55, 0.7}};
  t.goal_x = 0.85;
  t.goal_y = 0.15;
  t.goal_radius = 0.1;
  return t;
}

LockTask lock_source() {
  LockTask t;
  t.controllable = {0, 1};
  t.direction = {1, 1, 1};
  t.random_dials = {2};
  t.reward_combo = {{0, 3}, {1, 3}};
  t.start = {{0, 2}, {1, 4}};
  return t;
}

}  // namespace

std::vector<std::string> builtin_task_names() { return {"A", "B", "C", "lock1", "lock2", "lock3"}; }

TaskSpec builtin_task(std::string_view name) {
  TaskSpec spec;
  spec.name = std::string(name);
  if (name == "A" || name == "B" || name == "C") {
    NavTask t = nav_source();
    if (name == "B") {
      t.goal_x = 0.15;
      t.goal_y = 0.15;
    } else if (name == "C") {
      t.barriers = {Rect{0.45, 0.3, 0.55, 1.0}};
    }
    spec.env = t;
    spec.episodes = 500;
    spec.episode_cap = 200;
    spec.features = nav_features();
    return spec;
  }
  if (name == "lock1" || name == "lock2" || name == "lock3") {
    LockTask t = lock_source();
    std::vector<std::size_t> dims{0, 1};
    if (name == "lock2") {
      t.direction[0] = -1;
      t.reward_combo = {{0, 2}, {1, 3}};
    } else if (name == "lock3") {
      t.controllable = {0, 2};
      t.random_dials = {1};
      t.direction = {-1, 1, 1};
      t.reward_combo = {{0, 2}, {2, 3}};
      t.start = {{0, 2}, {2, 4}};
      dims = {0, 2};
    }
    spec.env = t;
    spec.episodes = 140;
    spec.episode_cap = 60;
    spec.features = lock_features(std::move(dims));
    return spec;
  }
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

namespace {

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vec(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json settings_json(const std::vector<DialSetting>& settings) {
  json out = json::array();
  for (const auto& s : settings) out.push_back({{"dial", s.dial}, {"value", s.value}});
  return out;
}

std::vector<DialSetting> json_settings(const json& j) {
  std::vector<DialSetting> out;
  for (const auto& e : j) out.push_back({e.at("dial").get<std::size_t>(), e.at("value").get<int>()});
  return out;
}

std::string_view placement_name(CenterPlacement p) {
  return p == CenterPlacement::interior ? "interior" : "endpoints";
}

CenterPlacement parse_placement(const std::string& s) {
  if (s == "interior") return CenterPlacement::interior;
  if (s == "endpoints") return CenterPlacement::endpoints;
  throw ConfigError("unknown center placement '" + s + "'");
}

}  // namespace

std::string dump_task_spec(const TaskSpec& spec) {
  json j;
  j["format_version"] = spec.format_version;
  j["name"] = spec.name;
  j["episodes"] = spec.episodes;
  j["episode_cap"] = spec.episode_cap;
  if (spec.is_navigation()) {
    const auto& t = std::get<NavTask>(spec.env);
    json barriers = json::array();
    for (const auto& r : t.barriers) barriers.push_back({r.x0, r.y0, r.x1, r.y1});
    j["family"] = "navigation";
    j["navigation"] = {{"bounds", {t.lo, t.hi}},
                       {"step_size", t.step_size},
                       {"slip_prob", t.slip_prob},
                       {"barriers", barriers},
                       {"goal", {{"center", {t.goal_x, t.goal_y}}, {"radius", t.goal_radius}}}};
  } else {
    const auto& t = std::get<LockTask>(spec.env);
    j["family"] = "lock";
    j["lock"] = {{"dials", t.dials},
                 {"modulus", t.modulus},
                 {"controllable", t.controllable},
                 {"direction", t.direction},
                 {"random_dials", t.random_dials},
                 {"reward_combo", settings_json(t.reward_combo)},
                 {"start", settings_json(t.start)}};
  }
  j["features"] = {{"order", spec.features.order},
                   {"lo", vec_json(spec.features.lo)},
                   {"hi", vec_json(spec.features.hi)},
                   {"placement", placement_name(spec.features.placement)},
                   {"input_dims", spec.features.input_dims}};
  return j.dump(2) + "\n";
}

TaskSpec parse_task_spec(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("task file is not valid JSON: ") + e.what());
  }
  TaskSpec spec;
  try {
    spec.format_version = j.at("format_version").get<int>();
    if (spec.format_version != kTaskFormatVersion) {
      throw ConfigError("unsupported task format_version " + std::to_string(spec.format_version));
    }
    spec.name = j.at("name").get<std::string>();
    spec.episodes = j.at("episodes").get<std::size_t>();
    spec.episode_cap = j.at("episode_cap").get<std::size_t>();
    const auto family = j.at("family").get<std::string>();
    if (family == "navigation") {
      const auto& n = j.at("navigation");
      NavTask t;
      const auto bounds = n.at("bounds").get<std::vector<double>>();
      if (bounds.size() != 2) throw ConfigError("navigation bounds must be [lo, hi]");
      t.lo = bounds[0];
      t.hi = bounds[1];
      t.step_size = n.at("step_size").get<double>();
      t.slip_prob = n.at("slip_prob").get<double>();
      for (const auto& b : n.at("barriers")) {
        const auto r = b.get<std::vector<double>>();
        if (r.size() != 4) throw ConfigError("barrier must be [x0, y0, x1, y1]");
        t.barriers.push_back({r[0], r[1], r[2], r[3]});
      }
      const auto center = n.at("goal").at("center").get<std::vector<double>>();
      if (center.size() != 2) throw ConfigError("goal center must be [x, y]");
      t.goal_x = center[0];
      t.goal_y = center[1];
      t.goal_radius = n.at("goal").at("radius").get<double>();
      spec.env = t;
    } else if (family == "lock") {
      const auto& l = j.at("lock");
      LockTask t;
      t.dials = l.at("dials").get<std::size_t>();
      t.modulus = l.at("modulus").get<int>();
      t.controllable = l.at("controllable").get<std::vector<std::size_t>>();
      t.direction = l.at("direction").get<std::vector<int>>();
      t.random_dials = l.at("random_dials").get<std::vector<std::size_t>>();
      t.reward_combo = json_settings(l.at("reward_combo"));
      t.start = json_settings(l.at("start"));
      spec.env = t;
    } else {
      throw ConfigError("unknown task family '" + family + "'");
    }
    const auto& f = j.at("features");
    spec.features.order = f.at("order").get<std::size_t>();
    spec.features.lo = json_vec(f.at("lo"));
    spec.features.hi = json_vec(f.at("hi"));
    spec.features.placement = parse_placement(f.at("placement").get<std::string>());
    spec.features.input_dims = f.at("input_dims").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed task file: ") + e.what());
  }
  spec.validate();
  return spec;
}

TaskSpec load_task_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open task file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_task_spec(buf.str());
}

TaskSpec resolve_task(const std::string& name_or_path) {
  const auto names = builtin_task_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    return builtin_task(name_or_path);
  }
  if (std::filesystem::exists(name_or_path)) return load_task_spec(name_or_path);
  throw ConfigError("unknown task '" + name_or_path + "' (not a built-in name or a file)");
}

FeatureMap make_feature_map(const FeatureSpec& spec, std::size_t order, double lr_mu,
                            double lr_sigma) {
  FeatureMap fm = default_rbf_grid(spec.input_dims.size(), order, spec.lo, spec.hi, spec.placement,
                                   lr_mu, lr_sigma);
  fm.input_dims = spec.input_dims;
  return fm;
}

}  // namespace mbsf
