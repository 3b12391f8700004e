#include "mbsf/agent.hpp"

#include <cmath>
#include <string>

namespace mbsf {

PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "uncertainty_aware") return PolicyKind::uncertainty_aware;
  if (name == "epsilon_greedy") return PolicyKind::epsilon_greedy;
  if (name == "ua_td_sf") return PolicyKind::ua_td_sf;
  throw ConfigError("unknown policy kind '" + std::string(name) + "'");
}

BonusKind parse_bonus_kind(std::string_view name) {
  if (name == "trace") return BonusKind::trace;
  if (name == "state_variance") return BonusKind::state_variance;
  if (name == "q_std") return BonusKind::q_std;
  throw ConfigError("unknown bonus kind '" + std::string(name) + "'");
}

std::string_view to_string(BonusKind kind) {
  switch (kind) {
    case BonusKind::trace: return "trace";
    case BonusKind::state_variance: return "state_variance";
    case BonusKind::q_std: return "q_std";
  }
  return "trace";
}

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::epsilon_greedy: return "epsilon_greedy";
    case PolicyKind::ua_td_sf: return "ua_td_sf";
    default: return "uncertainty_aware";
  }
}

AgentConfig AgentConfig::navigation_defaults() { return AgentConfig{}; }

AgentConfig AgentConfig::lock_defaults() {
  AgentConfig c;
  c.gamma = 0.99;
  c.order = 5;
  c.reward_noise_var = 0.5;
  c.reward_prior_var = 1.0;
  c.transition_prior_diag = 0.5;
  c.transition_process_var = 0.5;
  c.transition_prior_var = 3.0;
  c.lr_mu = 0.01;
  c.lr_sigma = 0.005;
  c.epsilon = 0.02;
  return c;
}

AgentConfig AgentConfig::defaults_for(const TaskSpec& task) {
  return task.is_navigation() ? navigation_defaults() : lock_defaults();
}

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in [0, 1)");
  if (order < 2) throw ConfigError("RBF order must be >= 2");
  auto nonneg = [](double v, const char* what) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be >= 0");
  };
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be > 0");
  };
  nonneg(reward_process_var, "reward_process_var");
  positive(reward_noise_var, "reward_noise_var");
  nonneg(reward_prior_var, "reward_prior_var");
  nonneg(transition_process_var, "transition_process_var");
  positive(transition_noise_var, "transition_noise_var");
  nonneg(transition_prior_var, "transition_prior_var");
  positive(lr_mu, "lr_mu");
  positive(lr_sigma, "lr_sigma");
  if (!std::isfinite(theta_prior) || !std::isfinite(transition_prior_diag)) {
    throw ConfigError("prior means must be finite");
  }
  if (!(transition_decay > 0.0 && transition_decay <= 1.0)) throw ConfigError("transition_decay must be in (0, 1]");
  if (!(sf_decay > 0.0 && sf_decay <= 1.0)) throw ConfigError("sf_decay must be in (0, 1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must be in [0, 1]");
}

AgentState make_agent(const AgentConfig& cfg, const TaskSpec& task, PolicyKind kind) {
  cfg.validate();
  task.validate();
  AgentState agent;
  agent.feature_map = make_feature_map(task.features, cfg.order, cfg.lr_mu, cfg.lr_sigma);
  const std::size_t l = agent.feature_map.size();
  const std::size_t actions = task.num_actions();

  const auto bank = MmaeBank::single(
      GaussianBelief::isotropic(l, cfg.theta_prior, cfg.reward_prior_var),
      KfConfig::random_walk(l, cfg.reward_process_var, cfg.reward_noise_var));
  agent.reward_model = RewardModel::make(actions, bank, cfg.pi_aggregation);
  agent.transition_model = TransitionModel::make(
      actions,
      KroneckerMatrixBelief::isotropic(l, cfg.transition_prior_diag, cfg.transition_prior_var,
                                       cfg.transition_decay, cfg.transition_process_var,
                                       cfg.transition_noise_var),
      cfg.pi_aggregation);
  agent.gamma = cfg.gamma;
  agent.policy_kind = kind;
  agent.epsilon = cfg.epsilon;
  agent.bonus = cfg.bonus;
  if (kind == PolicyKind::ua_td_sf) {
    agent.sf_belief = KroneckerMatrixBelief::isotropic(l, 1.0, cfg.transition_prior_var, cfg.sf_decay,
                                                       cfg.transition_process_var,
                                                       cfg.transition_noise_var);
  }
  agent.refresh_weights();
  return agent;
}

void AgentState::refresh_weights() {
  const std::size_t actions = num_actions();
  if (sf_belief) {
    const Matrix psi_t = sf_belief->mean.transpose();
    v_weights = psi_t * reward_model.theta_pi;
    q_weights.resize(actions);
    for (std::size_t a = 0; a < actions; ++a) q_weights[a] = psi_t * reward_model.theta(a);
    return;
  }
  std::vector<Vector> theta_a;
  std::vector<Matrix> f_a;
  theta_a.reserve(actions);
  f_a.reserve(actions);
  for (std::size_t a = 0; a < actions; ++a) {
    theta_a.push_back(reward_model.theta(a));
    f_a.push_back(transition_model.beliefs[a].mean);
  }
  SfSolution sol = solve_successor(reward_model.theta_pi, transition_model.f_pi, theta_a, f_a, gamma);
  if (sol.shrunk()) ++diagnostics.resolvent_shrinkage;
  v_weights = std::move(sol.v_weights);
  q_weights = std::move(sol.q_weights);
}

void AgentState::validate() const {
  feature_map.validate();
  reward_model.validate();
  transition_model.validate();
  if (reward_model.dim() != feature_map.size() || transition_model.dim() != feature_map.size()) {
    throw ConfigError("agent model dimensions disagree with the feature map");
  }
  if (transition_model.beliefs.size() != reward_model.banks.size()) {
    throw ConfigError("reward and transition models disagree on action count");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("agent gamma must be in [0, 1)");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("agent epsilon must be in [0, 1]");
  if ((policy_kind == PolicyKind::ua_td_sf) != sf_belief.has_value()) {
    throw ConfigError("successor-matrix belief present iff policy is ua_td_sf");
  }
  if (sf_belief) {
    sf_belief->validate();
    if (sf_belief->dim() != feature_map.size()) throw ConfigError("successor matrix has wrong size");
  }
}

std::vector<double> action_values(const AgentState& agent, const Vector& state) {
  const Vector phi = featurize(agent.feature_map, state);
  std::vector<double> q(agent.num_actions());
  for (std::size_t a = 0; a < q.size(); ++a) q[a] = agent.q_weights[a].dot(phi);
  return q;
}

namespace {

double reward_spread(const MmaeBank& bank, const Vector& phi) {
  if (bank.size() == 1) {
    const Matrix& cov = bank.members.front().belief.covariance;
    return phi.dot(cov * phi);
  }
  const GaussianBelief fused = bank.fused();
  return phi.dot(fused.covariance * phi);
}

}  // namespace

std::vector<double> action_scores(const AgentState& agent, const Vector& state) {
  const Vector phi = featurize(agent.feature_map, state);
  std::vector<double> score(agent.num_actions());
  const auto* sf = agent.sf_belief ? &*agent.sf_belief : nullptr;
  const double phi_p_phi = sf ? phi.dot(sf->row_cov * phi) : 0.0;
  // Cov(F phi) = (phi' P phi) I under S = P (x) I, so Var(v' F phi) = |v|^2 phi' P phi.
  const double v_sq = agent.v_weights.squaredNorm();
  for (std::size_t a = 0; a < score.size(); ++a) {
    score[a] = agent.q_weights[a].dot(phi);
    const auto& bank = agent.reward_model.banks[a];
    const auto& belief = agent.transition_model.beliefs[a];
    switch (agent.bonus) {
      case BonusKind::trace:
        score[a] += agent.reward_model.covariance_trace(a) +
                    (sf ? sf->covariance_trace() : belief.covariance_trace());
        break;
      case BonusKind::state_variance:
        score[a] += reward_spread(bank, phi) + (sf ? phi_p_phi : phi.dot(belief.row_cov * phi));
        break;
      case BonusKind::q_std: {
        double var = 0.0;
        if (sf) {
          // Q = theta_a' Psi phi
          const Vector m = sf->mean * phi;
          var = reward_spread(bank, m) + agent.reward_model.theta(a).squaredNorm() * phi_p_phi;
        } else {
          var = reward_spread(bank, phi) +
                agent.gamma * agent.gamma * v_sq * phi.dot(belief.row_cov * phi);
        }
        score[a] += std::sqrt(var);
        break;
      }
    }
  }
  return score;
}

namespace {

std::size_t argmax(const std::vector<double>& values) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < values.size(); ++a) {
    if (values[a] > values[best]) best = a;
  }
  return best;
}

}  // namespace

std::size_t select_action(const AgentState& agent, const Vector& state) {
  return argmax(action_scores(agent, state));
}

std::size_t select_action_epsilon(const AgentState& agent, const Vector& state, double eps, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  if (u01(rng) < eps) {
    std::uniform_int_distribution<std::size_t> pick(0, agent.num_actions() - 1);
    return pick(rng);
  }
  return argmax(action_values(agent, state));
}

void learn(AgentState& agent, const Transition& sample) {
  const Vector phi = featurize(agent.feature_map, sample.state);
  const Vector phi_next = featurize(agent.feature_map, sample.next_state);
  agent.diagnostics += agent.reward_model.observe(phi, sample.action, sample.reward);
  agent.transition_model.observe(phi, sample.action, phi_next);

  SgdStepResult sgd = feature_sgd_step(agent.feature_map, sample, agent.reward_model.theta(sample.action),
                                       agent.transition_model.beliefs[sample.action].mean);
  if (sgd.skipped) ++agent.diagnostics.sgd_skipped;
  agent.feature_map = std::move(sgd.map);
  agent.refresh_weights();
}

AgentState agent_step(const AgentState& agent, const Transition& sample) {
  AgentState out = agent;
  learn(out, sample);
  return out;
}

void learn_td_sf(AgentState& agent, const Transition& sample) {
  if (!agent.sf_belief) throw ConfigError("TD successor-feature step needs a ua_td_sf agent");
  const Vector phi = featurize(agent.feature_map, sample.state);
  const Vector phi_next = featurize(agent.feature_map, sample.next_state);
  agent.diagnostics += agent.reward_model.observe(phi, sample.action, sample.reward);
  // phi(s) = Psi (phi(s) - gamma phi(s')) + noise
  const Vector regressor = phi - agent.gamma * phi_next;
  agent.sf_belief = matrix_kf_update(*agent.sf_belief, regressor, phi);
  agent.refresh_weights();
}

AgentState ua_td_sf_step(const AgentState& agent, const Transition& sample) {
  AgentState out = agent;
  learn_td_sf(out, sample);
  return out;
}

double error_bound_trace(const AgentState& agent) {
  return error_bound(agent.reward_model.max_abs_residual, agent.transition_model.max_model_error,
                     agent.v_weights, agent.gamma);
}

EpisodeRecord run_episode(AgentState& agent, const TaskSpec& task, std::size_t max_steps, Rng& rng,
                          const EpisodeOptions& opts) {
  if (task.num_actions() != agent.num_actions()) {
    throw ConfigError("agent action count does not match the task");
  }
  EpisodeRecord rec;
  Vector state = task.reset(rng);
  while (rec.length < max_steps) {
    std::size_t action = 0;
    switch (agent.policy_kind) {
      case PolicyKind::epsilon_greedy:
        action = select_action_epsilon(agent, state, agent.epsilon, rng);
        break;
      default:
        action = select_action(agent, state);
        break;
    }
    StepResult step = task.step(state, action, rng);
    const Transition sample{state, action, step.next_state, step.reward};
    if (agent.policy_kind == PolicyKind::ua_td_sf) {
      learn_td_sf(agent, sample);
    } else {
      learn(agent, sample);
    }
    ++rec.length;
    rec.total_return += step.reward;
    if (opts.record_bound) rec.bound_trace.push_back(error_bound_trace(agent));
    state = std::move(step.next_state);
    if (step.done) {
      rec.reached_goal = true;
      break;
    }
  }
  return rec;
}

}  // namespace mbsf
