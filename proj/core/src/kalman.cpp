#include "mbsf/kalman.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace mbsf {

namespace {

void require_dims(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ConfigError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                      std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()));
  }
}

void require_vector(const Vector& v, Eigen::Index size, const char* what) {
  if (v.size() != size) {
    throw ConfigError(std::string(what) + ": expected length " + std::to_string(size) + ", got " +
                      std::to_string(v.size()));
  }
  if (!v.allFinite()) throw ValidationError(std::string(what) + ": non-finite entries");
}

}  // namespace

void symmetrize(Matrix& m) {
  m = (0.5 * (m + m.transpose())).eval();
}

namespace {

template <typename Dense>
void flush_dense(Dense& m) {
  constexpr double tiny = std::numeric_limits<double>::min();
  m = m.unaryExpr([](double v) { return std::abs(v) < tiny ? 0.0 : v; });
}

}  // namespace

void flush_subnormals(Matrix& m) { flush_dense(m); }
void flush_subnormals(Vector& v) { flush_dense(v); }

GaussianBelief GaussianBelief::isotropic(std::size_t dim, double prior_mean, double prior_var) {
  const auto n = static_cast<Eigen::Index>(dim);
  return {Vector::Constant(n, prior_mean), prior_var * Matrix::Identity(n, n)};
}

KfConfig KfConfig::random_walk(std::size_t dim, double process_var, double measurement_var) {
  const auto n = static_cast<Eigen::Index>(dim);
  return {Matrix::Identity(n, n), process_var * Matrix::Identity(n, n), measurement_var};
}

void KfConfig::validate(std::size_t dim) const {
  const auto n = static_cast<Eigen::Index>(dim);
  require_dims(evolution, n, n, "kf evolution matrix");
  require_dims(process_noise_cov, n, n, "kf process noise");
  if (!(measurement_noise_var > 0.0)) throw ConfigError("kf measurement noise variance must be > 0");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(process_noise_cov, Eigen::EigenvaluesOnly);
  if (n > 0 && eig.eigenvalues().minCoeff() < -1e-9) {
    throw ConfigError("kf process noise covariance is not positive semidefinite");
  }
}

GaussianBelief kf_predict(const GaussianBelief& belief, const KfConfig& cfg) {
  const auto n = belief.mean.size();
  require_dims(belief.covariance, n, n, "belief covariance");
  require_dims(cfg.evolution, n, n, "kf evolution matrix");
  require_dims(cfg.process_noise_cov, n, n, "kf process noise");

  GaussianBelief out{cfg.evolution * belief.mean,
                     cfg.evolution * belief.covariance * cfg.evolution.transpose() +
                         cfg.process_noise_cov};
  symmetrize(out.covariance);
  return out;
}

KfUpdateResult kf_update(const GaussianBelief& belief, const Vector& h, double y, double noise_var) {
  const auto n = belief.mean.size();
  require_vector(h, n, "kf regressor");
  require_dims(belief.covariance, n, n, "belief covariance");
  if (!(noise_var > 0.0)) throw ConfigError("kf measurement noise variance must be > 0");

  const double residual = y - h.dot(belief.mean);
  if (h.isZero(0.0)) return {belief, residual, Vector::Zero(n)};

  const Vector ph = belief.covariance * h;
  const double innovation_var = h.dot(ph) + noise_var;
  if (!(innovation_var > 0.0) || !std::isfinite(innovation_var)) {
    throw NumericalError("kf innovation variance is not positive: " +
                         std::to_string(innovation_var));
  }
  Vector gain = ph / innovation_var;

  KfUpdateResult out{{belief.mean + gain * residual, belief.covariance - gain * ph.transpose()},
                     residual,
                     std::move(gain)};
  symmetrize(out.belief.covariance);
  flush_subnormals(out.belief.covariance);
  flush_subnormals(out.belief.mean);
  return out;
}

double kf_likelihood(const GaussianBelief& belief, const Vector& h, double y, double noise_var) {
  const auto n = belief.mean.size();
  require_vector(h, n, "kf regressor");
  const double z = h.dot(belief.covariance * h) + noise_var;
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw NumericalError("kf predictive variance is not positive: " + std::to_string(z));
  }
  const double residual = y - h.dot(belief.mean);
  return std::exp(-0.5 * residual * residual / z) / std::sqrt(2.0 * std::numbers::pi * z);
}

MmaeBank MmaeBank::uniform(std::vector<MmaeMember> members) {
  if (members.empty()) throw ConfigError("mmae bank needs at least one member");
  const auto m = static_cast<Eigen::Index>(members.size());
  MmaeBank bank{std::move(members), Vector::Constant(m, 1.0 / static_cast<double>(m))};
  bank.validate();
  return bank;
}

MmaeBank MmaeBank::single(GaussianBelief prior, KfConfig config) {
  std::vector<MmaeMember> members;
  members.push_back({std::move(prior), std::move(config)});
  return uniform(std::move(members));
}

void MmaeBank::validate() const {
  if (members.empty()) throw ConfigError("mmae bank needs at least one member");
  if (weights.size() != static_cast<Eigen::Index>(members.size())) {
    throw ConfigError("mmae weight vector length differs from member count");
  }
  const auto n = members.front().belief.mean.size();
  for (const auto& m : members) {
    if (m.belief.mean.size() != n) throw ConfigError("mmae members disagree on dimension");
    require_dims(m.belief.covariance, n, n, "mmae member covariance");
    m.config.validate(static_cast<std::size_t>(n));
  }
  if ((weights.array() < 0.0).any() || (weights.array() > 1.0).any() ||
      std::abs(weights.sum() - 1.0) > 1e-12) {
    throw ConfigError("mmae weights are not on the probability simplex");
  }
}

GaussianBelief MmaeBank::fused() const {
  if (members.size() == 1) return members.front().belief;
  const auto n = members.front().belief.mean.size();
  Vector mean = Vector::Zero(n);
  for (std::size_t i = 0; i < members.size(); ++i) {
    mean += weights[static_cast<Eigen::Index>(i)] * members[i].belief.mean;
  }
  Matrix cov = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < members.size(); ++i) {
    const Vector d = members[i].belief.mean - mean;
    cov += weights[static_cast<Eigen::Index>(i)] * (members[i].belief.covariance + d * d.transpose());
  }
  symmetrize(cov);
  return {std::move(mean), std::move(cov)};
}

MmaeStepResult mmae_step(const MmaeBank& bank, const Vector& h, double y) {
  const auto m = bank.members.size();
  if (m == 0) throw ConfigError("mmae bank needs at least one member");

  MmaeStepResult out;
  out.bank.members.reserve(m);
  Vector weighted(static_cast<Eigen::Index>(m));
  double predicted = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& member = bank.members[i];
    const double w = bank.weights[static_cast<Eigen::Index>(i)];
    GaussianBelief prior = kf_predict(member.belief, member.config);
    const double noise = member.config.measurement_noise_var;
    weighted[static_cast<Eigen::Index>(i)] = w * kf_likelihood(prior, h, y, noise);
    predicted += w * h.dot(prior.mean);
    out.bank.members.push_back({kf_update(prior, h, y, noise).belief, member.config});
  }
  out.fused_prior_residual = y - predicted;

  if ((weighted.array() <= kLikelihoodFloor).all()) {
    out.bank.weights = bank.weights;
    out.likelihood_underflow = m > 1;
  } else {
    out.bank.weights = weighted / weighted.sum();
  }
  out.fused = out.bank.fused();
  return out;
}

void MatrixBelief::validate() const {
  const auto l = mean.rows();
  require_dims(mean, l, l, "matrix belief mean");
  require_dims(covariance, l * l, l * l, "matrix belief covariance");
  require_dims(process_noise_cov, l * l, l * l, "matrix belief process noise");
  require_dims(measurement_noise_cov, l, l, "matrix belief measurement noise");
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("matrix belief decay must be in (0, 1]");
}

MatrixBelief matrix_kf_update(const MatrixBelief& mb, const Vector& x, const Vector& y) {
  mb.validate();
  const auto l = mb.mean.rows();
  require_vector(x, l, "matrix kf input");
  require_vector(y, l, "matrix kf observation");

  MatrixBelief out = mb;
  out.mean = mb.decay * mb.mean;
  out.covariance = mb.decay * mb.decay * mb.covariance + mb.process_noise_cov;
  symmetrize(out.covariance);
  if (x.isZero(0.0)) return out;

  // Column-stacked vec(F): F x = (x' kron I_L) vec(F).
  Matrix regressor = Matrix::Zero(l, l * l);
  for (Eigen::Index j = 0; j < l; ++j) {
    regressor.middleCols(j * l, l).diagonal().setConstant(x[j]);
  }
  const Matrix ch = out.covariance * regressor.transpose();
  const Matrix innovation_cov = regressor * ch + mb.measurement_noise_cov;
  Eigen::LLT<Matrix> llt(innovation_cov);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("matrix kf innovation covariance is not positive definite");
  }
  const Matrix gain = llt.solve(ch.transpose()).transpose();  // L^2 x L
  const Vector innovation = y - out.mean * x;

  Eigen::Map<Vector> vec_mean(out.mean.data(), l * l);
  vec_mean += gain * innovation;
  out.covariance -= gain * ch.transpose();
  symmetrize(out.covariance);
  return out;
}

KroneckerMatrixBelief KroneckerMatrixBelief::isotropic(std::size_t dim, double prior_diag,
                                                       double prior_var, double decay,
                                                       double process_var, double measurement_var) {
  const auto l = static_cast<Eigen::Index>(dim);
  KroneckerMatrixBelief mb{prior_diag * Matrix::Identity(l, l), prior_var * Matrix::Identity(l, l),
                           decay, process_var, measurement_var};
  mb.validate();
  return mb;
}

void KroneckerMatrixBelief::validate() const {
  const auto l = mean.rows();
  require_dims(mean, l, l, "matrix belief mean");
  require_dims(row_cov, l, l, "matrix belief row covariance");
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("matrix belief decay must be in (0, 1]");
  if (process_noise_var < 0.0) throw ConfigError("matrix belief process noise must be >= 0");
  if (!(measurement_noise_var > 0.0)) throw ConfigError("matrix belief measurement noise must be > 0");
}

MatrixBelief KroneckerMatrixBelief::to_dense() const {
  const auto l = mean.rows();
  const Matrix eye = Matrix::Identity(l, l);
  Matrix cov(l * l, l * l);
  for (Eigen::Index i = 0; i < l; ++i) {
    for (Eigen::Index j = 0; j < l; ++j) cov.block(i * l, j * l, l, l) = row_cov(i, j) * eye;
  }
  return {mean, std::move(cov), decay, process_noise_var * Matrix::Identity(l * l, l * l),
          measurement_noise_var * eye};
}

KroneckerMatrixBelief matrix_kf_update(const KroneckerMatrixBelief& mb, const Vector& x,
                                       const Vector& y) {
  const auto l = mb.mean.rows();
  require_dims(mb.row_cov, l, l, "matrix belief row covariance");
  require_vector(x, l, "matrix kf input");
  require_vector(y, l, "matrix kf observation");

  KroneckerMatrixBelief out = mb;
  out.mean *= mb.decay;
  out.row_cov *= mb.decay * mb.decay;
  out.row_cov.diagonal().array() += mb.process_noise_var;
  if (x.isZero(0.0)) {
    symmetrize(out.row_cov);
    return out;
  }

  // Innovation covariance (x'Px + r) I_L is a scaled identity.
  const Vector px = out.row_cov * x;
  const double scale = x.dot(px) + mb.measurement_noise_var;
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw NumericalError("matrix kf innovation covariance is not positive definite");
  }
  const Vector innovation = y - out.mean * x;
  out.mean.noalias() += innovation * (px.transpose() / scale);
  out.row_cov.noalias() -= px * (px.transpose() / scale);
  symmetrize(out.row_cov);
  flush_subnormals(out.row_cov);
  flush_subnormals(out.mean);
  return out;
}

}  // namespace mbsf
