#pragma once

// Recursive Bayesian estimators: the linear Kalman filter over a parameter
// vector, a likelihood-weighted bank of such filters, and a matrix-variate
// filter over a parameter matrix.

#include <vector>

#include "mbsf/types.hpp"

namespace mbsf {

/// Gaussian belief N(mean, covariance) over a parameter vector.
struct GaussianBelief {
  Vector mean;
  Matrix covariance;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }

  static GaussianBelief isotropic(std::size_t dim, double prior_mean, double prior_var);
};

/// Evolution model x_t = G x_{t-1} + w, w ~ N(0, process_noise_cov), together
/// with the variance of a scalar measurement y = h x + n.
struct KfConfig {
  Matrix evolution;
  Matrix process_noise_cov;
  double measurement_noise_var = 1.0;

  /// G = I, P^w = q I: the mean is left alone and only uncertainty grows.
  static KfConfig random_walk(std::size_t dim, double process_var, double measurement_var);
  void validate(std::size_t dim) const;
};

GaussianBelief kf_predict(const GaussianBelief& belief, const KfConfig& cfg);

struct KfUpdateResult {
  GaussianBelief belief;
  double residual = 0.0;  ///< y - h * prior mean
  Vector gain;
};

/// Scalar-measurement update. A zero regressor carries no information and
/// returns the belief unchanged with zero gain.
KfUpdateResult kf_update(const GaussianBelief& belief, const Vector& h, double y, double noise_var);

/// Density of y under N(h*mean, h*cov*h' + noise_var).
double kf_likelihood(const GaussianBelief& belief, const Vector& h, double y, double noise_var);

struct MmaeMember {
  GaussianBelief belief;
  KfConfig config;
};

/**
Bank of parallel Kalman filters fused by posterior model probabilities.

How members should differ for a bank size above one (priors, noise levels) is
left to the caller; every member carries its own config.
*/
struct MmaeBank {
  std::vector<MmaeMember> members;
  Vector weights;

  static MmaeBank uniform(std::vector<MmaeMember> members);
  static MmaeBank single(GaussianBelief prior, KfConfig config);

  std::size_t size() const { return members.size(); }
  std::size_t dim() const { return members.empty() ? 0 : members.front().belief.dim(); }

  /// Weighted mixture moments: mean = sum w_i m_i,
  /// cov = sum w_i (C_i + (m_i - mean)(m_i - mean)').
  GaussianBelief fused() const;
  void validate() const;
};

inline constexpr double kLikelihoodFloor = 1e-300;

struct MmaeStepResult {
  MmaeBank bank;
  GaussianBelief fused;
  double fused_prior_residual = 0.0;  ///< y - h * (fused predicted mean)
  bool likelihood_underflow = false;  ///< weights were left untouched
};

/// Predict + update every member, reweight by the predictive likelihood of y,
/// then fuse. If every weighted likelihood falls below kLikelihoodFloor the
/// previous weights are kept.
MmaeStepResult mmae_step(const MmaeBank& bank, const Vector& h, double y);

/**
Dense matrix-variate belief over an L x L matrix F, with covariance over the
column-stacked vec(F). Evolution F_t = decay * F_{t-1} + A, measurement
y = F x + B. Equivalent to a vector KF on vec(F) with regressor (x' kron I_L).
*/
struct MatrixBelief {
  Matrix mean;                   ///< L x L
  Matrix covariance;             ///< L^2 x L^2, over vec(mean)
  double decay = 0.9;
  Matrix process_noise_cov;      ///< L^2 x L^2
  Matrix measurement_noise_cov;  ///< L x L

  std::size_t dim() const { return static_cast<std::size_t>(mean.rows()); }
  void validate() const;
};

MatrixBelief matrix_kf_update(const MatrixBelief& mb, const Vector& x, const Vector& y);

/**
Matrix-variate belief whose covariance keeps the form S = P kron I_L, with
isotropic process and measurement noise. Under those noise models the dense
update preserves the form exactly, so only the L x L factor P is stored and a
step costs O(L^2) instead of O(L^5).
*/
struct KroneckerMatrixBelief {
  Matrix mean;       ///< L x L
  Matrix row_cov;    ///< P; full covariance of vec(mean) is P kron I_L
  double decay = 0.9;
  double process_noise_var = 0.0;      ///< Sigma^A = q I_{L^2}
  double measurement_noise_var = 1.0;  ///< Sigma^B = r I_L

  static KroneckerMatrixBelief isotropic(std::size_t dim, double prior_diag, double prior_var,
                                         double decay, double process_var, double measurement_var);

  std::size_t dim() const { return static_cast<std::size_t>(mean.rows()); }
  /// tr(P kron I_L) = L tr(P)
  double covariance_trace() const { return static_cast<double>(dim()) * row_cov.trace(); }
  MatrixBelief to_dense() const;
  void validate() const;
};

KroneckerMatrixBelief matrix_kf_update(const KroneckerMatrixBelief& mb, const Vector& x,
                                       const Vector& y);

/// (C + C') / 2 in place.
void symmetrize(Matrix& m);

/// Zero every subnormal entry. Long runs with narrow RBFs otherwise fill the
/// covariances with subnormals, and arithmetic on those is very slow.
void flush_subnormals(Matrix& m);
void flush_subnormals(Vector& v);

}  // namespace mbsf
