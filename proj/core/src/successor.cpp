#include "mbsf/successor.hpp"

#include <cmath>
#include <string>

namespace mbsf {

namespace {

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ConfigError("discount must be in [0, 1), got " + std::to_string(gamma));
  }
}

void check_square(const Matrix& m, Eigen::Index n, const char* what) {
  if (m.rows() != n || m.cols() != n) {
    throw ConfigError(std::string(what) + " must be " + std::to_string(n) + "x" +
                      std::to_string(n));
  }
}

Eigen::PartialPivLU<Matrix> factor(const Matrix& f, double gamma) {
  const auto n = f.rows();
  Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(n, n) - gamma * f);
  const double rcond = lu.rcond();
  if (!(rcond > 1.0 / kMaxConditionNumber)) {
    const double cond = rcond > 0.0 ? 1.0 / rcond : INFINITY;
    throw SolverError("I - gamma F is singular or ill conditioned (cond ~ " +
                          std::to_string(cond) + ")",
                      cond);
  }
  return lu;
}

double spectral_radius(const Matrix& f) {
  Eigen::EigenSolver<Matrix> eig(f, false);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

Vector successor_features(const Matrix& f_pi, const Vector& phi, double gamma) {
  check_gamma(gamma);
  check_square(f_pi, phi.size(), "F_pi");
  return factor(f_pi, gamma).solve(phi);
}

Vector value_weights(const Vector& theta_pi, const Matrix& f_pi, double gamma) {
  check_gamma(gamma);
  check_square(f_pi, theta_pi.size(), "F_pi");
  return factor(f_pi, gamma).transpose().solve(theta_pi);
}

Vector q_weights(const Vector& theta_a, const Vector& theta_pi, const Matrix& f_a,
                 const Matrix& f_pi, double gamma) {
  check_square(f_a, theta_a.size(), "F_a");
  const Vector v = value_weights(theta_pi, f_pi, gamma);
  return theta_a + gamma * f_a.transpose() * v;
}

double error_bound(double reward_error, double transition_error, const Vector& v, double gamma) {
  if (!(gamma < 1.0)) throw std::domain_error("error bound needs gamma < 1");
  if (gamma < 0.0) throw std::domain_error("error bound needs gamma >= 0");
  if (reward_error < 0.0 || transition_error < 0.0) {
    throw std::domain_error("error bound needs nonnegative model errors");
  }
  return (reward_error + gamma * v.norm() * transition_error) / (1.0 - gamma);
}

SfSolution solve_successor(const Vector& theta_pi, const Matrix& f_pi,
                           const std::vector<Vector>& theta_a, const std::vector<Matrix>& f_a,
                           double gamma, bool with_resolvent) {
  check_gamma(gamma);
  const auto n = theta_pi.size();
  check_square(f_pi, n, "F_pi");
  if (theta_a.size() != f_a.size()) throw ConfigError("theta_a and F_a disagree on action count");

  SfSolution out;
  out.gamma = gamma;

  const Matrix eye = Matrix::Identity(n, n);
  Eigen::PartialPivLU<Matrix> lu;
  bool needs_shrink = false;
  double rho = -1.0;
  // Any induced norm bounds the spectral radius; only go to eigenvalues when
  // the cheap bound is inconclusive.
  const Matrix magnitude = f_pi.cwiseAbs();
  if (gamma * magnitude.rowwise().sum().maxCoeff() >= 1.0 &&
      gamma * magnitude.colwise().sum().maxCoeff() >= 1.0) {
    rho = spectral_radius(f_pi);
    needs_shrink = gamma * rho >= 1.0;
  }
  if (!needs_shrink) {
    lu.compute(eye - gamma * f_pi);
    needs_shrink = !(lu.rcond() > 1.0 / kMaxConditionNumber);
  }
  if (needs_shrink) {
    if (rho < 0.0) rho = spectral_radius(f_pi);
    out.shrink = (gamma * rho > 0.0) ? 0.99 / (gamma * rho) : 1.0;
    lu = factor(out.shrink * f_pi, gamma);
  }

  out.v_weights = lu.transpose().solve(theta_pi);
  out.q_weights.reserve(theta_a.size());
  for (std::size_t a = 0; a < theta_a.size(); ++a) {
    out.q_weights.push_back(theta_a[a] + gamma * f_a[a].transpose() * out.v_weights);
  }
  if (with_resolvent) out.resolvent = lu.inverse();
  return out;
}

TabularSr tabular_sr(const Matrix& transition, double gamma) {
  const auto n = transition.rows();
  if (transition.cols() != n || n == 0) throw ValidationError("transition matrix must be square");
  if ((transition.array() < 0.0).any() || !transition.allFinite()) {
    throw ValidationError("transition matrix has negative or non-finite entries");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(transition.row(i).sum() - 1.0) > 1e-12) {
      throw ValidationError("transition row " + std::to_string(i) + " does not sum to 1");
    }
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ValidationError("tabular SR needs gamma in [0, 1) for a stochastic matrix");
  }
  Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(n, n) - gamma * transition);
  return {transition, lu.inverse(), gamma};
}

Vector tabular_value(const TabularSr& sr, const Vector& reward) {
  if (reward.size() != sr.sr.cols()) {
    throw ConfigError("reward vector length " + std::to_string(reward.size()) +
                      " does not match " + std::to_string(sr.sr.cols()) + " states");
  }
  return sr.sr * reward;
}

}  // namespace mbsf
