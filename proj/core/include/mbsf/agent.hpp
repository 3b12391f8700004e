#pragma once

// The uncertainty-aware model-based successor-feature agent and its two
// ablations (epsilon-greedy exploration, TD-learned successor features).

#include <optional>
#include <string_view>
#include <vector>

#include "mbsf/envmodel.hpp"
#include "mbsf/envs.hpp"
#include "mbsf/features.hpp"
#include "mbsf/successor.hpp"

namespace mbsf {

enum class PolicyKind { uncertainty_aware, epsilon_greedy, ua_td_sf };

PolicyKind parse_policy_kind(std::string_view name);
std::string_view to_string(PolicyKind kind);

/// Exploration bonus added to Q(s, b) by the uncertainty-aware policy.
enum class BonusKind {
  trace,           ///< tr(Pi^b) + tr(S^b), independent of s
  state_variance,  ///< phi' Pi^b phi + phi' P^b phi, the model spread at s
  q_std,           ///< standard deviation of Q(s, b) under the filter posteriors
};

BonusKind parse_bonus_kind(std::string_view name);
std::string_view to_string(BonusKind kind);

/// Hyperparameters. Every noise covariance is a scalar times identity.
struct AgentConfig {
  double gamma = 0.95;
  std::size_t order = 4;  ///< RBF grid order per featurized dimension; L = order^D
  double theta_prior = 0.0;
  double reward_process_var = 0.01;  ///< P^omega
  double reward_noise_var = 0.2;     ///< P^N
  double reward_prior_var = 0.1;     ///< Pi_0
  double transition_prior_diag = 0.02;  ///< F_0 = c I
  double transition_process_var = 0.6;  ///< Sigma^A
  double transition_noise_var = 1.0;    ///< Sigma^B
  double transition_prior_var = 5.0;    ///< S_0
  double transition_decay = 0.9;
  double lr_mu = 0.001;
  double lr_sigma = 0.001;
  double epsilon = 0.2;
  PiAggregation pi_aggregation = PiAggregation::last_action;
  BonusKind bonus = BonusKind::q_std;
  /// Evolution coefficient of the TD successor-feature filter (ablation only).
  double sf_decay = 1.0;

  static AgentConfig navigation_defaults();
  static AgentConfig lock_defaults();
  static AgentConfig defaults_for(const TaskSpec& task);
  void validate() const;
};

struct AgentState {
  FeatureMap feature_map;
  RewardModel reward_model;
  TransitionModel transition_model;
  double gamma = 0.95;
  PolicyKind policy_kind = PolicyKind::uncertainty_aware;
  double epsilon = 0.0;
  BonusKind bonus = BonusKind::q_std;
  /// Successor matrix Psi with m(s) = Psi phi(s); only for ua_td_sf.
  std::optional<KroneckerMatrixBelief> sf_belief;

  /// Weights from the last refresh; select_action reads these (Q_{t-1}).
  Vector v_weights;
  std::vector<Vector> q_weights;
  Diagnostics diagnostics;

  std::size_t num_actions() const { return reward_model.banks.size(); }
  std::size_t feature_dim() const { return feature_map.size(); }

  /// Recompute v and q from the current model.
  void refresh_weights();
  void validate() const;
};

AgentState make_agent(const AgentConfig& cfg, const TaskSpec& task,
                      PolicyKind kind = PolicyKind::uncertainty_aware);

/// Per-action score without and with the exploration bonus.
std::vector<double> action_values(const AgentState& agent, const Vector& state);
std::vector<double> action_scores(const AgentState& agent, const Vector& state);

/// argmax_b Q(s, b) + tr(Pi^b) + tr(S^b); lowest index wins ties.
std::size_t select_action(const AgentState& agent, const Vector& state);
/// Uniform with probability eps, else greedy on Q alone.
std::size_t select_action_epsilon(const AgentState& agent, const Vector& state, double eps, Rng& rng);

/// One learning step: reward filter, transition filter, feature SGD, refresh.
void learn(AgentState& agent, const Transition& sample);
AgentState agent_step(const AgentState& agent, const Transition& sample);

/// Learning step of the TD successor-feature ablation.
void learn_td_sf(AgentState& agent, const Transition& sample);
AgentState ua_td_sf_step(const AgentState& agent, const Transition& sample);

/// Error bound from the running residual maxima and the current |v|.
double error_bound_trace(const AgentState& agent);

struct EpisodeRecord {
  std::size_t length = 0;
  double total_return = 0.0;
  bool reached_goal = false;
  std::vector<double> bound_trace;  ///< empty unless requested
  bool operator==(const EpisodeRecord&) const = default;
};

struct EpisodeOptions {
  bool record_bound = false;
};

/// Reset, then act/learn until the goal or `max_steps`. Dispatches on
/// agent.policy_kind.
EpisodeRecord run_episode(AgentState& agent, const TaskSpec& task, std::size_t max_steps, Rng& rng,
                          const EpisodeOptions& opts = {});

}  // namespace mbsf
