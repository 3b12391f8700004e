#include "mbsf/envmodel.hpp"

#include <algorithm>
#include <string>

namespace mbsf {

PiAggregation parse_pi_aggregation(std::string_view name) {
  if (name == "last_action") return PiAggregation::last_action;
  if (name == "uniform") return PiAggregation::uniform;
  throw ConfigError("unknown pi_aggregation '" + std::string(name) + "'");
}

std::string_view to_string(PiAggregation agg) {
  return agg == PiAggregation::uniform ? "uniform" : "last_action";
}

namespace {

void check_action(std::size_t action, std::size_t count) {
  if (action >= count) {
    throw ValidationError("action " + std::to_string(action) + " out of range for " +
                          std::to_string(count) + " actions");
  }
}

}  // namespace

RewardModel RewardModel::make(std::size_t num_actions, const MmaeBank& prior, PiAggregation agg) {
  if (num_actions == 0) throw ConfigError("reward model needs at least one action");
  prior.validate();
  RewardModel rm{std::vector<MmaeBank>(num_actions, prior), Vector(), agg, 0.0};
  rm.theta_pi = rm.theta(0);
  if (agg == PiAggregation::uniform) {
    rm.theta_pi.setZero();
    for (std::size_t a = 0; a < num_actions; ++a) rm.theta_pi += rm.theta(a);
    rm.theta_pi /= static_cast<double>(num_actions);
  }
  return rm;
}

Vector RewardModel::theta(std::size_t action) const {
  check_action(action, banks.size());
  const auto& bank = banks[action];
  if (bank.size() == 1) return bank.members.front().belief.mean;
  Vector mean = Vector::Zero(static_cast<Eigen::Index>(bank.dim()));
  for (std::size_t i = 0; i < bank.size(); ++i) {
    mean += bank.weights[static_cast<Eigen::Index>(i)] * bank.members[i].belief.mean;
  }
  return mean;
}

double RewardModel::covariance_trace(std::size_t action) const {
  check_action(action, banks.size());
  const auto& bank = banks[action];
  if (bank.size() == 1) return bank.members.front().belief.covariance.trace();
  const Vector mean = theta(action);
  double trace = 0.0;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const auto& b = bank.members[i].belief;
    trace += bank.weights[static_cast<Eigen::Index>(i)] *
             (b.covariance.trace() + (b.mean - mean).squaredNorm());
  }
  return trace;
}

Diagnostics RewardModel::observe(const Vector& phi_s, std::size_t action, double reward) {
  check_action(action, banks.size());
  MmaeStepResult step = mmae_step(banks[action], phi_s, reward);
  max_abs_residual = std::max(max_abs_residual, std::abs(step.fused_prior_residual));
  banks[action] = std::move(step.bank);

  if (aggregation == PiAggregation::last_action) {
    theta_pi = std::move(step.fused.mean);
  } else {
    theta_pi.setZero();
    for (std::size_t a = 0; a < banks.size(); ++a) theta_pi += theta(a);
    theta_pi /= static_cast<double>(banks.size());
  }
  Diagnostics d;
  d.likelihood_underflow = step.likelihood_underflow ? 1 : 0;
  return d;
}

void RewardModel::validate() const {
  if (banks.empty()) throw ConfigError("reward model needs at least one action");
  for (const auto& bank : banks) {
    bank.validate();
    if (bank.dim() != banks.front().dim()) throw ConfigError("reward banks disagree on dimension");
  }
  if (theta_pi.size() != static_cast<Eigen::Index>(dim()) || !theta_pi.allFinite()) {
    throw ConfigError("reward model theta_pi has wrong length or non-finite entries");
  }
}

TransitionModel TransitionModel::make(std::size_t num_actions, const KroneckerMatrixBelief& prior,
                                      PiAggregation agg) {
  if (num_actions == 0) throw ConfigError("transition model needs at least one action");
  prior.validate();
  return {std::vector<KroneckerMatrixBelief>(num_actions, prior), prior.mean, agg, 0.0};
}

void TransitionModel::observe(const Vector& phi_s, std::size_t action, const Vector& phi_next) {
  check_action(action, beliefs.size());
  auto& belief = beliefs[action];
  max_model_error = std::max(max_model_error, (phi_next - belief.mean * phi_s).norm());
  belief = matrix_kf_update(belief, phi_s, phi_next);

  if (aggregation == PiAggregation::last_action) {
    f_pi = belief.mean;
  } else {
    f_pi.setZero();
    for (const auto& b : beliefs) f_pi += b.mean;
    f_pi /= static_cast<double>(beliefs.size());
  }
}

void TransitionModel::validate() const {
  if (beliefs.empty()) throw ConfigError("transition model needs at least one action");
  for (const auto& b : beliefs) {
    b.validate();
    if (b.dim() != dim()) throw ConfigError("transition beliefs disagree on dimension");
  }
  const auto l = static_cast<Eigen::Index>(dim());
  if (f_pi.rows() != l || f_pi.cols() != l || !f_pi.allFinite()) {
    throw ConfigError("transition model f_pi has wrong shape or non-finite entries");
  }
}

RewardModel observe_reward(const RewardModel& rm, const Vector& phi_s, std::size_t action,
                           double reward) {
  RewardModel out = rm;
  out.observe(phi_s, action, reward);
  return out;
}

TransitionModel observe_transition(const TransitionModel& tm, const Vector& phi_s,
                                   std::size_t action, const Vector& phi_next) {
  TransitionModel out = tm;
  out.observe(phi_s, action, phi_next);
  return out;
}

double predicted_reward(const RewardModel& rm, const Vector& phi_s, std::size_t action) {
  return phi_s.dot(rm.theta(action));
}

Vector predicted_next_features(const TransitionModel& tm, const Vector& phi_s, std::size_t action) {
  check_action(action, tm.beliefs.size());
  return tm.beliefs[action].mean * phi_s;
}

double exploration_bonus(const RewardModel& rm, const TransitionModel& tm, std::size_t action) {
  check_action(action, tm.beliefs.size());
  return rm.covariance_trace(action) + tm.beliefs[action].covariance_trace();
}

}  // namespace mbsf
