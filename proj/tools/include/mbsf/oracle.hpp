#pragma once

// Brute-force reference checks for the closed-form pieces of the core
// library: successor features, the tabular successor representation, the
// Q error bound and the RBF loss gradient.

#include <cstdint>
#include <string>
#include <vector>

#include <mbsf/types.hpp>
#include <mbsf/envs.hpp>

namespace mbsf::oracle {

struct OracleResult {
  std::string name;
  bool passed = false;
  double metric = 0.0;     ///< worst observed error (or violation count)
  double tolerance = 0.0;  ///< pass threshold for `metric`
  std::string detail;
};

/// Uniformly random row-stochastic n x n matrix.
Matrix random_row_stochastic(std::size_t n, Rng& rng);

/// M = sum_k gamma^k T^k by iterating M <- I + gamma T M until the update
/// falls below `tol` (max-abs).
Matrix sr_by_iteration(const Matrix& transition, double gamma, double tol = 1e-13,
                       std::size_t max_iter = 100000);

/// V for a fixed reward vector by value iteration V <- r + gamma T V.
Vector value_by_iteration(const Matrix& transition, const Vector& reward, double gamma,
                          double tol = 1e-13, std::size_t max_iter = 100000);

OracleResult check_sf_fixed_point(std::size_t trials, std::uint64_t seed);
OracleResult check_tabular_sr(std::size_t trials, std::uint64_t seed);
OracleResult check_two_state_chain();
/// Corridor s1..s5 under "move right"; blocking s3 -> s4 must change every
/// upstream row of M and zero their occupancy of s4 and s5.
OracleResult check_barrier_adaptation();
OracleResult check_error_bound(std::size_t trials, std::uint64_t seed);
OracleResult check_rbf_gradient(std::size_t trials, std::uint64_t seed);

std::vector<OracleResult> run_oracle_suite(std::uint64_t seed);

}  // namespace mbsf::oracle
