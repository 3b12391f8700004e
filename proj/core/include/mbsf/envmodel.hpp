#pragma once

// Per-action reward and transition estimators over state features, plus the
// policy-level parameters theta_pi / F_pi and the uncertainty bonus.

#include <string_view>
#include <vector>

#include "mbsf/kalman.hpp"

namespace mbsf {

/// How theta_pi / F_pi are formed from the per-action estimates.
enum class PiAggregation {
  last_action,  ///< overwrite with the estimate of the action just updated
  uniform,      ///< average over all actions
};

PiAggregation parse_pi_aggregation(std::string_view name);
std::string_view to_string(PiAggregation agg);

struct RewardModel {
  std::vector<MmaeBank> banks;  ///< one per action
  Vector theta_pi;
  PiAggregation aggregation = PiAggregation::last_action;
  /// Running max of |r - theta_a' phi(s)| before each update (e^R).
  double max_abs_residual = 0.0;

  static RewardModel make(std::size_t num_actions, const MmaeBank& prior,
                          PiAggregation agg = PiAggregation::last_action);

  std::size_t num_actions() const { return banks.size(); }
  std::size_t dim() const { return banks.empty() ? 0 : banks.front().dim(); }

  /// Fused mean of the bank for action a.
  Vector theta(std::size_t action) const;
  /// tr of the fused covariance for action a.
  double covariance_trace(std::size_t action) const;

  /// One predict + update of the bank for `action`, then refresh theta_pi.
  Diagnostics observe(const Vector& phi_s, std::size_t action, double reward);
  void validate() const;
};

struct TransitionModel {
  std::vector<KroneckerMatrixBelief> beliefs;  ///< one per action
  Matrix f_pi;
  PiAggregation aggregation = PiAggregation::last_action;
  /// Running max of |phi(s') - F_a phi(s)| before each update (e^P).
  double max_model_error = 0.0;

  static TransitionModel make(std::size_t num_actions, const KroneckerMatrixBelief& prior,
                              PiAggregation agg = PiAggregation::last_action);

  std::size_t num_actions() const { return beliefs.size(); }
  std::size_t dim() const { return beliefs.empty() ? 0 : beliefs.front().dim(); }

  void observe(const Vector& phi_s, std::size_t action, const Vector& phi_next);
  void validate() const;
};

RewardModel observe_reward(const RewardModel& rm, const Vector& phi_s, std::size_t action,
                           double reward);
TransitionModel observe_transition(const TransitionModel& tm, const Vector& phi_s,
                                   std::size_t action, const Vector& phi_next);

/// phi(s)' theta_a with theta_a the fused reward weights.
double predicted_reward(const RewardModel& rm, const Vector& phi_s, std::size_t action);
/// F_a phi(s).
Vector predicted_next_features(const TransitionModel& tm, const Vector& phi_s, std::size_t action);

/// tr(Pi_a) + tr(S_a).
double exploration_bonus(const RewardModel& rm, const TransitionModel& tm, std::size_t action);

}  // namespace mbsf
