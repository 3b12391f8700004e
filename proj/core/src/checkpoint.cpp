#include "mbsf/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mbsf {

using nlohmann::json;

namespace {

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Matrix matrix_from(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto m = n == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.front().size());
  Matrix out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != m) throw ConfigError("ragged matrix in checkpoint");
    for (Eigen::Index k = 0; k < m; ++k) out(i, k) = row[static_cast<std::size_t>(k)];
  }
  return out;
}

json kron_json(const KroneckerMatrixBelief& b) {
  return {{"mean", to_json(b.mean)},
          {"row_cov", to_json(b.row_cov)},
          {"decay", b.decay},
          {"process_noise_var", b.process_noise_var},
          {"measurement_noise_var", b.measurement_noise_var}};
}

KroneckerMatrixBelief kron_from(const json& j) {
  KroneckerMatrixBelief b;
  b.mean = matrix_from(j.at("mean"));
  b.row_cov = matrix_from(j.at("row_cov"));
  b.decay = j.at("decay").get<double>();
  b.process_noise_var = j.at("process_noise_var").get<double>();
  b.measurement_noise_var = j.at("measurement_noise_var").get<double>();
  return b;
}

json feature_json(const FeatureMap& fm) {
  json bases = json::array();
  for (const auto& b : fm.bases) bases.push_back({{"mu", to_json(b.mu)}, {"sigma", to_json(b.sigma)}});
  return {{"lr_mu", fm.lr_mu}, {"lr_sigma", fm.lr_sigma}, {"input_dims", fm.input_dims}, {"bases", bases}};
}

FeatureMap feature_from(const json& j) {
  FeatureMap fm;
  fm.lr_mu = j.at("lr_mu").get<double>();
  fm.lr_sigma = j.at("lr_sigma").get<double>();
  fm.input_dims = j.at("input_dims").get<std::vector<std::size_t>>();
  for (const auto& b : j.at("bases")) fm.bases.push_back({vector_from(b.at("mu")), vector_from(b.at("sigma"))});
  return fm;
}

json reward_json(const RewardModel& rm) {
  json banks = json::array();
  for (const auto& bank : rm.banks) {
    json members = json::array();
    for (const auto& m : bank.members) {
      members.push_back({{"mean", to_json(m.belief.mean)},
                         {"covariance", to_json(m.belief.covariance)},
                         {"evolution", to_json(m.config.evolution)},
                         {"process_noise_cov", to_json(m.config.process_noise_cov)},
                         {"measurement_noise_var", m.config.measurement_noise_var}});
    }
    banks.push_back({{"weights", to_json(bank.weights)}, {"members", members}});
  }
  return {{"aggregation", to_string(rm.aggregation)},
          {"max_abs_residual", rm.max_abs_residual},
          {"theta_pi", to_json(rm.theta_pi)},
          {"banks", banks}};
}

RewardModel reward_from(const json& j) {
  RewardModel rm;
  rm.aggregation = parse_pi_aggregation(j.at("aggregation").get<std::string>());
  rm.max_abs_residual = j.at("max_abs_residual").get<double>();
  rm.theta_pi = vector_from(j.at("theta_pi"));
  for (const auto& b : j.at("banks")) {
    MmaeBank bank;
    bank.weights = vector_from(b.at("weights"));
    for (const auto& m : b.at("members")) {
      MmaeMember member;
      member.belief.mean = vector_from(m.at("mean"));
      member.belief.covariance = matrix_from(m.at("covariance"));
      member.config.evolution = matrix_from(m.at("evolution"));
      member.config.process_noise_cov = matrix_from(m.at("process_noise_cov"));
      member.config.measurement_noise_var = m.at("measurement_noise_var").get<double>();
      bank.members.push_back(std::move(member));
    }
    rm.banks.push_back(std::move(bank));
  }
  return rm;
}

json transition_json(const TransitionModel& tm) {
  json beliefs = json::array();
  for (const auto& b : tm.beliefs) beliefs.push_back(kron_json(b));
  return {{"aggregation", to_string(tm.aggregation)},
          {"max_model_error", tm.max_model_error},
          {"f_pi", to_json(tm.f_pi)},
          {"beliefs", beliefs}};
}

TransitionModel transition_from(const json& j) {
  TransitionModel tm;
  tm.aggregation = parse_pi_aggregation(j.at("aggregation").get<std::string>());
  tm.max_model_error = j.at("max_model_error").get<double>();
  tm.f_pi = matrix_from(j.at("f_pi"));
  for (const auto& b : j.at("beliefs")) tm.beliefs.push_back(kron_from(b));
  return tm;
}

}  // namespace

std::string dump_checkpoint(const AgentState& agent) {
  agent.validate();
  json q = json::array();
  for (const auto& w : agent.q_weights) q.push_back(to_json(w));
  json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["feature_dim"] = agent.feature_dim();
  j["num_actions"] = agent.num_actions();
  j["gamma"] = agent.gamma;
  j["policy_kind"] = to_string(agent.policy_kind);
  j["epsilon"] = agent.epsilon;
  j["bonus"] = to_string(agent.bonus);
  j["feature_map"] = feature_json(agent.feature_map);
  j["reward_model"] = reward_json(agent.reward_model);
  j["transition_model"] = transition_json(agent.transition_model);
  j["sf_belief"] = agent.sf_belief ? kron_json(*agent.sf_belief) : json(nullptr);
  j["v_weights"] = to_json(agent.v_weights);
  j["q_weights"] = q;
  j["diagnostics"] = {{"resolvent_shrinkage", agent.diagnostics.resolvent_shrinkage},
                      {"likelihood_underflow", agent.diagnostics.likelihood_underflow},
                      {"sgd_skipped", agent.diagnostics.sgd_skipped}};
  return j.dump(1) + "\n";
}

AgentState parse_checkpoint(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint is not valid JSON (truncated?): ") + e.what());
  }
  AgentState agent;
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw ConfigError("unsupported checkpoint format_version " + std::to_string(version) +
                        " (expected " + std::to_string(kCheckpointFormatVersion) + ")");
    }
    agent.gamma = j.at("gamma").get<double>();
    agent.policy_kind = parse_policy_kind(j.at("policy_kind").get<std::string>());
    agent.epsilon = j.at("epsilon").get<double>();
    agent.bonus = parse_bonus_kind(j.at("bonus").get<std::string>());
    agent.feature_map = feature_from(j.at("feature_map"));
    agent.reward_model = reward_from(j.at("reward_model"));
    agent.transition_model = transition_from(j.at("transition_model"));
    if (!j.at("sf_belief").is_null()) agent.sf_belief = kron_from(j.at("sf_belief"));
    agent.v_weights = vector_from(j.at("v_weights"));
    for (const auto& w : j.at("q_weights")) agent.q_weights.push_back(vector_from(w));
    const auto& d = j.at("diagnostics");
    agent.diagnostics.resolvent_shrinkage = d.at("resolvent_shrinkage").get<std::size_t>();
    agent.diagnostics.likelihood_underflow = d.at("likelihood_underflow").get<std::size_t>();
    agent.diagnostics.sgd_skipped = d.at("sgd_skipped").get<std::size_t>();

    if (j.at("feature_dim").get<std::size_t>() != agent.feature_dim() ||
        j.at("num_actions").get<std::size_t>() != agent.num_actions()) {
      throw ConfigError("checkpoint header disagrees with its contents");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
  agent.validate();
  const auto l = static_cast<Eigen::Index>(agent.feature_dim());
  if (agent.v_weights.size() != l || agent.q_weights.size() != agent.num_actions()) {
    throw ConfigError("checkpoint weight vectors have the wrong shape");
  }
  for (const auto& w : agent.q_weights) {
    if (w.size() != l) throw ConfigError("checkpoint q weights have the wrong length");
  }
  return agent;
}

void save_checkpoint(const AgentState& agent, const std::string& path) {
  const std::string text = dump_checkpoint(agent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write checkpoint '" + path + "'");
  out << text;
  if (!out) throw ConfigError("failed writing checkpoint '" + path + "'");
}

AgentState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

void check_transfer_compatible(const AgentState& agent, const TaskSpec& task,
                               std::size_t expected_features) {
  if (agent.num_actions() != task.num_actions()) {
    throw ConfigError("incompatible checkpoint: " + std::to_string(agent.num_actions()) +
                      " actions, task '" + task.name + "' has " + std::to_string(task.num_actions()));
  }
  if (expected_features != 0 && agent.feature_dim() != expected_features) {
    throw ConfigError("incompatible checkpoint: L = " + std::to_string(agent.feature_dim()) +
                      ", expected " + std::to_string(expected_features));
  }
  const auto& dims = agent.feature_map.input_dims;
  const std::size_t needed = dims.empty() ? agent.feature_map.input_dim() : dims.size();
  if (needed != agent.feature_map.input_dim()) {
    throw ConfigError("incompatible checkpoint: feature input dims disagree with basis size");
  }
  for (auto d : dims) {
    if (d >= task.state_dim()) {
      throw ConfigError("incompatible checkpoint: features read state coordinate " + std::to_string(d) +
                        " but task '" + task.name + "' has " + std::to_string(task.state_dim()));
    }
  }
  if (dims.empty() && agent.feature_map.input_dim() != task.state_dim()) {
    throw ConfigError("incompatible checkpoint: feature input size differs from the task state size");
  }
}

}  // namespace mbsf
