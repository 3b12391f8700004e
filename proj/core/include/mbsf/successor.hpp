#pragma once

// Closed-form successor features and the value / action-value weights they
// induce, the Q-approximation error bound, and the tabular successor
// representation used as an oracle.

#include <vector>

#include "mbsf/types.hpp"

namespace mbsf {

inline constexpr double kMaxConditionNumber = 1e12;

/// Solutions of m = phi + gamma F m, i.e. m = (I - gamma F)^{-1} phi.
/// Throws SolverError when I - gamma F has condition number above
/// kMaxConditionNumber.
Vector successor_features(const Matrix& f_pi, const Vector& phi, double gamma);

/// v = (I - gamma F_pi)^{-T} theta_pi, so that V(s) = v' phi(s).
Vector value_weights(const Vector& theta_pi, const Matrix& f_pi, double gamma);

/// q_a = theta_a + gamma F_a' v, so that Q(s, a) = q_a' phi(s).
Vector q_weights(const Vector& theta_a, const Vector& theta_pi, const Matrix& f_a,
                 const Matrix& f_pi, double gamma);

/// (e_R + gamma |v| e_P) / (1 - gamma). gamma must be < 1.
double error_bound(double reward_error, double transition_error, const Vector& v, double gamma);

struct SfSolution {
  Vector v_weights;
  std::vector<Vector> q_weights;  ///< one per action
  Matrix resolvent;               ///< (I - gamma F_pi)^{-1}; empty unless requested
  double gamma = 0.0;
  /// F_pi was scaled by this factor for the solve (1 when untouched).
  double shrink = 1.0;

  bool shrunk() const { return shrink != 1.0; }
};

/**
Value and per-action Q weights from the current model.

Learned F_pi carries no invertibility guarantee. When gamma * rho(F_pi) >= 1 or
the system is ill conditioned, F_pi is scaled by 0.99 / (gamma * rho(F_pi))
for this solve only and `shrink` records the factor.
*/
SfSolution solve_successor(const Vector& theta_pi, const Matrix& f_pi,
                           const std::vector<Vector>& theta_a, const std::vector<Matrix>& f_a,
                           double gamma, bool with_resolvent = false);

/// Successor representation M = (I - gamma T)^{-1} of a row-stochastic T.
struct TabularSr {
  Matrix transition;
  Matrix sr;
  double gamma = 0.0;
};

TabularSr tabular_sr(const Matrix& transition, double gamma);

/// V = M r.
Vector tabular_value(const TabularSr& sr, const Vector& reward);

}  // namespace mbsf
