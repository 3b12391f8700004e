#pragma once

// Radial-basis-function featurization of raw states and its online refinement
// by stochastic gradient descent on the joint reward/transition fit.

#include <vector>

#include "mbsf/types.hpp"

namespace mbsf {

inline constexpr double kRbfVarianceFloor = 1e-6;

/// Axis-aligned Gaussian bump: center mu, per-dimension variances sigma.
struct RbfBasis {
  Vector mu;
  Vector sigma;
};

struct FeatureMap {
  std::vector<RbfBasis> bases;
  double lr_mu = 1e-3;
  double lr_sigma = 1e-3;
  /// Raw-state coordinates the bases read, in order. Empty means all of them.
  std::vector<std::size_t> input_dims;

  std::size_t size() const { return bases.size(); }
  std::size_t input_dim() const {
    return bases.empty() ? 0 : static_cast<std::size_t>(bases.front().mu.size());
  }
  Vector project(const Vector& raw_state) const;
  void validate() const;
};

/// phi_j(s) = exp(-1/2 (s - mu_j)' Sigma_j^{-1} (s - mu_j)), every entry in (0, 1].
Vector featurize(const FeatureMap& fm, const Vector& raw_state);

/**
Joint model-fit loss on one transition:
  J = (r - theta' phi(s))^2 + |phi(s') - F phi(s)|^2 + (|phi(s)|^2 - 1)^2.
The norm penalty is squared so J is bounded below.
*/
double feature_loss(const FeatureMap& fm, const Transition& sample, const Vector& theta,
                    const Matrix& transition);

/// dJ/dmu and dJ/dsigma, one row per basis (L x D each).
struct FeatureGradient {
  Matrix d_mu;
  Matrix d_sigma;
};

FeatureGradient feature_loss_gradient(const FeatureMap& fm, const Transition& sample,
                                      const Vector& theta, const Matrix& transition);

struct SgdStepResult {
  FeatureMap map;
  bool skipped = false;  ///< gradient was non-finite; map returned unchanged
};

SgdStepResult feature_sgd_step(const FeatureMap& fm, const Transition& sample, const Vector& theta,
                               const Matrix& transition);

enum class CenterPlacement {
  endpoints,  ///< linspace(lo, hi, order), both ends included
  interior,   ///< order points splitting [lo, hi] into order + 1 equal gaps
};

/// order^D bases on an even grid, first coordinate varying slowest, every
/// variance 2 / (order - 1).
FeatureMap default_rbf_grid(std::size_t dims, std::size_t order, const Vector& lo, const Vector& hi,
                            CenterPlacement placement = CenterPlacement::endpoints,
                            double lr_mu = 1e-3, double lr_sigma = 1e-3);

}  // namespace mbsf
