#include "mbsf/features.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mbsf {

Vector FeatureMap::project(const Vector& raw_state) const {
  if (input_dims.empty()) return raw_state;
  Vector out(static_cast<Eigen::Index>(input_dims.size()));
  for (std::size_t i = 0; i < input_dims.size(); ++i) {
    const auto d = static_cast<Eigen::Index>(input_dims[i]);
    if (d >= raw_state.size()) {
      throw ConfigError("feature map reads state coordinate " + std::to_string(d) +
                        " of a " + std::to_string(raw_state.size()) + "-dimensional state");
    }
    out[static_cast<Eigen::Index>(i)] = raw_state[d];
  }
  return out;
}

void FeatureMap::validate() const {
  if (bases.empty()) throw ConfigError("feature map needs at least one basis");
  const auto d = bases.front().mu.size();
  if (d == 0) throw ConfigError("rbf basis has zero dimension");
  if (!input_dims.empty() && static_cast<Eigen::Index>(input_dims.size()) != d) {
    throw ConfigError("feature map input_dims length differs from basis dimension");
  }
  for (const auto& b : bases) {
    if (b.mu.size() != d || b.sigma.size() != d) throw ConfigError("rbf bases disagree on dimension");
    if (!b.mu.allFinite() || !b.sigma.allFinite() || (b.sigma.array() <= 0.0).any()) {
      throw ConfigError("rbf basis has non-finite center or non-positive variance");
    }
  }
  if (!(lr_mu > 0.0) || !(lr_sigma > 0.0)) throw ConfigError("rbf learning rates must be > 0");
}

Vector featurize(const FeatureMap& fm, const Vector& raw_state) {
  const Vector s = fm.project(raw_state);
  Vector phi(static_cast<Eigen::Index>(fm.bases.size()));
  for (std::size_t j = 0; j < fm.bases.size(); ++j) {
    const auto& b = fm.bases[j];
    const double mahalanobis = ((s - b.mu).array().square() / b.sigma.array()).sum();
    const double v = std::exp(-0.5 * mahalanobis);
    phi[static_cast<Eigen::Index>(j)] = v < std::numeric_limits<double>::min() ? 0.0 : v;
  }
  return phi;
}

double feature_loss(const FeatureMap& fm, const Transition& sample, const Vector& theta,
                    const Matrix& transition) {
  const Vector phi = featurize(fm, sample.state);
  const Vector phi_next = featurize(fm, sample.next_state);
  const double reward_err = sample.reward - theta.dot(phi);
  const double norm_err = phi.squaredNorm() - 1.0;
  return reward_err * reward_err + (phi_next - transition * phi).squaredNorm() +
         norm_err * norm_err;
}

namespace {

// Accumulates upstream[j] * dphi_j(s)/d(mu_j, sigma_j) into the gradient rows.
void accumulate(const FeatureMap& fm, const Vector& s, const Vector& phi, const Vector& upstream,
                FeatureGradient& grad) {
  for (std::size_t j = 0; j < fm.bases.size(); ++j) {
    const auto row = static_cast<Eigen::Index>(j);
    const double g = upstream[row] * phi[row];
    if (g == 0.0) continue;
    const auto& b = fm.bases[j];
    const Eigen::ArrayXd u = (s - b.mu).array();
    grad.d_mu.row(row) += (g * u / b.sigma.array()).matrix().transpose();
    grad.d_sigma.row(row) += (0.5 * g * u.square() / b.sigma.array().square()).matrix().transpose();
  }
}

}  // namespace

FeatureGradient feature_loss_gradient(const FeatureMap& fm, const Transition& sample,
                                      const Vector& theta, const Matrix& transition) {
  const auto l = static_cast<Eigen::Index>(fm.size());
  const auto d = static_cast<Eigen::Index>(fm.input_dim());
  const Vector s = fm.project(sample.state);
  const Vector s_next = fm.project(sample.next_state);
  const Vector phi = featurize(fm, sample.state);
  const Vector phi_next = featurize(fm, sample.next_state);

  const double reward_err = sample.reward - theta.dot(phi);
  const Vector model_err = phi_next - transition * phi;
  const double norm_err = phi.squaredNorm() - 1.0;

  const Vector d_phi =
      -2.0 * reward_err * theta - 2.0 * transition.transpose() * model_err + 4.0 * norm_err * phi;
  const Vector d_phi_next = 2.0 * model_err;

  FeatureGradient grad{Matrix::Zero(l, d), Matrix::Zero(l, d)};
  accumulate(fm, s, phi, d_phi, grad);
  accumulate(fm, s_next, phi_next, d_phi_next, grad);
  return grad;
}

SgdStepResult feature_sgd_step(const FeatureMap& fm, const Transition& sample, const Vector& theta,
                               const Matrix& transition) {
  const FeatureGradient grad = feature_loss_gradient(fm, sample, theta, transition);
  if (!grad.d_mu.allFinite() || !grad.d_sigma.allFinite()) return {fm, true};

  SgdStepResult out{fm, false};
  for (std::size_t j = 0; j < out.map.bases.size(); ++j) {
    auto& b = out.map.bases[j];
    const auto row = static_cast<Eigen::Index>(j);
    b.mu -= fm.lr_mu * grad.d_mu.row(row).transpose();
    b.sigma -= fm.lr_sigma * grad.d_sigma.row(row).transpose();
    b.sigma = b.sigma.cwiseMax(kRbfVarianceFloor);
  }
  return out;
}

FeatureMap default_rbf_grid(std::size_t dims, std::size_t order, const Vector& lo, const Vector& hi,
                            CenterPlacement placement, double lr_mu, double lr_sigma) {
  if (order < 2) throw ConfigError("rbf grid order must be >= 2");
  if (dims == 0) throw ConfigError("rbf grid needs at least one dimension");
  const auto d = static_cast<Eigen::Index>(dims);
  if (lo.size() != d || hi.size() != d) throw ConfigError("rbf grid bounds have wrong length");

  const double variance = 2.0 / static_cast<double>(order - 1);
  auto coordinate = [&](Eigen::Index dim, std::size_t k) {
    const double span = hi[dim] - lo[dim];
    const double kk = static_cast<double>(k);
    const double n = static_cast<double>(order);
    return placement == CenterPlacement::endpoints ? lo[dim] + span * kk / (n - 1.0)
                                                   : lo[dim] + span * (kk + 1.0) / (n + 1.0);
  };

  std::size_t count = 1;
  for (std::size_t i = 0; i < dims; ++i) count *= order;

  FeatureMap fm;
  fm.lr_mu = lr_mu;
  fm.lr_sigma = lr_sigma;
  fm.bases.reserve(count);
  for (std::size_t index = 0; index < count; ++index) {
    RbfBasis b{Vector(d), Vector::Constant(d, variance)};
    std::size_t rest = index;
    for (Eigen::Index dim = d - 1; dim >= 0; --dim) {
      b.mu[dim] = coordinate(dim, rest % order);
      rest /= order;
    }
    fm.bases.push_back(std::move(b));
  }
  return fm;
}

}  // namespace mbsf
