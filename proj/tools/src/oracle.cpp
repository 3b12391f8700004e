#include "mbsf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include <mbsf/features.hpp>
#include <mbsf/successor.hpp>

namespace mbsf::oracle {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << x;
  return os.str();
}

double spectral_radius(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n01(rng);
  return m;
}

Vector uniform_vector(Eigen::Index n, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

}  // namespace

Matrix random_row_stochastic(std::size_t n, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  const auto k = static_cast<Eigen::Index>(n);
  Matrix t(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) t(i, j) = expo(rng);
    t.row(i) /= t.row(i).sum();
  }
  return t;
}

Matrix sr_by_iteration(const Matrix& transition, double gamma, double tol, std::size_t max_iter) {
  const Matrix eye = Matrix::Identity(transition.rows(), transition.cols());
  Matrix m = eye;
  for (std::size_t it = 0; it < max_iter; ++it) {
    Matrix next = eye + gamma * transition * m;
    const double delta = (next - m).cwiseAbs().maxCoeff();
    m = std::move(next);
    if (delta < tol) break;
  }
  return m;
}

Vector value_by_iteration(const Matrix& transition, const Vector& reward, double gamma, double tol,
                          std::size_t max_iter) {
  Vector v = Vector::Zero(reward.size());
  for (std::size_t it = 0; it < max_iter; ++it) {
    Vector next = reward + gamma * transition * v;
    const double delta = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    if (delta < tol) break;
  }
  return v;
}

OracleResult check_sf_fixed_point(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> size(2, 36);
  std::uniform_real_distribution<double> target(0.05, 0.95);
  const double gammas[] = {0.9, 0.95, 0.99};
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const double gamma = gammas[t % 3];
    const Eigen::Index l = size(rng);
    Matrix f = gaussian_matrix(l, l, rng);
    // Scale so that rho(gamma F) lands in (0.05, 0.95].
    f *= target(rng) / (gamma * spectral_radius(f));
    const Vector phi = uniform_vector(l, 0.0, 1.0, rng);
    const Vector m = successor_features(f, phi, gamma);
    worst = std::max(worst, (m - phi - gamma * f * m).cwiseAbs().maxCoeff());
  }
  const double tol = 1e-9;
  return {"sf_fixed_point", worst <= tol, worst, tol,
          std::to_string(trials) + " random (F, phi), max |m - phi - gamma F m| = " + fmt(worst)};
}

OracleResult check_tabular_sr(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> size(2, 30);
  std::uniform_real_distribution<double> gamma_dist(0.5, 0.95);
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const Matrix tr = random_row_stochastic(static_cast<std::size_t>(size(rng)), rng);
    const double gamma = gamma_dist(rng);
    const TabularSr closed = tabular_sr(tr, gamma);
    worst = std::max(worst, (closed.sr - sr_by_iteration(tr, gamma)).cwiseAbs().maxCoeff());
  }
  const double tol = 1e-6;
  return {"tabular_sr", worst <= tol, worst, tol,
          std::to_string(trials) + " random stochastic T, closed form vs iteration " + fmt(worst)};
}

OracleResult check_two_state_chain() {
  Matrix t(2, 2);
  t << 0.0, 1.0, 0.0, 1.0;
  Matrix expected(2, 2);
  expected << 1.0, 1.0, 0.0, 2.0;
  const double err = (tabular_sr(t, 0.5).sr - expected).cwiseAbs().maxCoeff();
  return {"two_state_chain", err == 0.0, err, 0.0, "M for T = [[0,1],[0,1]], gamma 0.5, vs [[1,1],[0,2]]"};
}

OracleResult check_barrier_adaptation() {
  const Eigen::Index n = 5;
  Matrix before = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) before(i, i + 1) = 1.0;
  before(n - 1, n - 1) = 1.0;
  Matrix after = before;
  after(2, 3) = 0.0;
  after(2, 2) = 1.0;
  const double gamma = 0.9;
  const Matrix m0 = tabular_sr(before, gamma).sr;
  const Matrix m1 = tabular_sr(after, gamma).sr;
  bool ok = true;
  double worst_leak = 0.0;
  for (Eigen::Index i = 0; i <= 2; ++i) {
    if ((m0.row(i) - m1.row(i)).cwiseAbs().maxCoeff() < 1e-9) ok = false;
    worst_leak = std::max({worst_leak, std::abs(m1(i, 3)), std::abs(m1(i, 4))});
  }
  ok = ok && worst_leak < 1e-12;
  // Downstream rows see no change.
  ok = ok && (m0.bottomRows(2) - m1.bottomRows(2)).cwiseAbs().maxCoeff() < 1e-12;
  return {"barrier_adaptation", ok, worst_leak, 1e-12,
          "blocking s3->s4 rewrites rows s1..s3; residual occupancy of s4,s5 " + fmt(worst_leak)};
}

OracleResult check_error_bound(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const std::size_t states = 20;
  const std::size_t actions = 4;
  const auto n = static_cast<Eigen::Index>(states);
  std::size_t violations = 0;
  std::size_t checked = 0;
  double tightest = 1e300;
  for (std::size_t t = 0; t < trials; ++t) {
    const double gamma = u01(rng) < 0.5 ? 0.5 : 0.9;
    const double noise = 0.002 + 0.02 * u01(rng);
    std::vector<Matrix> p(actions);
    std::vector<Vector> r(actions), theta(actions);
    std::vector<Matrix> f(actions);
    for (std::size_t a = 0; a < actions; ++a) {
      p[a] = random_row_stochastic(states, rng);
      r[a] = uniform_vector(n, 0.0, 1.0, rng);
      // One-hot features: E[phi(s')] = P_a(s, :)' so the exact model is F_a = P_a'.
      theta[a] = r[a] + uniform_vector(n, -noise, noise, rng);
      f[a] = p[a].transpose() + noise / static_cast<double>(n) * gaussian_matrix(n, n, rng);
    }
    Matrix t_pi = Matrix::Zero(n, n), f_pi = Matrix::Zero(n, n);
    Vector r_pi = Vector::Zero(n), theta_pi = Vector::Zero(n);
    for (std::size_t a = 0; a < actions; ++a) {
      t_pi += p[a] / actions;
      f_pi += f[a] / actions;
      r_pi += r[a] / actions;
      theta_pi += theta[a] / actions;
    }
    const SfSolution sol = solve_successor(theta_pi, f_pi, theta, f, gamma);
    if (sol.shrunk()) continue;
    ++checked;
    const Vector v_true = value_by_iteration(t_pi, r_pi, gamma);

    double e_r = 0.0, e_p = 0.0;
    for (std::size_t a = 0; a < actions; ++a) {
      e_r = std::max(e_r, (r[a] - theta[a]).cwiseAbs().maxCoeff());
      for (Eigen::Index s = 0; s < n; ++s) {
        e_p = std::max(e_p, (p[a].row(s).transpose() - f[a].col(s)).norm());
      }
    }
    const double bound = error_bound(e_r, e_p, sol.v_weights, gamma);
    for (std::size_t a = 0; a < actions; ++a) {
      const Vector q_true = r[a] + gamma * p[a] * v_true;
      // q_a' e_s is entry s of q_a.
      const double err = (q_true - sol.q_weights[a]).cwiseAbs().maxCoeff();
      if (err > bound + 1e-12) ++violations;
      tightest = std::min(tightest, bound - err);
    }
  }
  const bool ok = violations == 0 && checked == trials;
  return {"error_bound", ok, static_cast<double>(violations), 0.0,
          std::to_string(checked) + "/" + std::to_string(trials) + " MDPs checked, " +
              std::to_string(violations) + " violations, min slack " + fmt(tightest)};
}

OracleResult check_rbf_gradient(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> dims_dist(1, 3);
  std::uniform_int_distribution<int> bases_dist(2, 9);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const Eigen::Index d = dims_dist(rng);
    const Eigen::Index l = bases_dist(rng);
    FeatureMap fm;
    for (Eigen::Index j = 0; j < l; ++j) {
      fm.bases.push_back({uniform_vector(d, 0.0, 1.0, rng), uniform_vector(d, 0.1, 0.8, rng)});
    }
    Transition sample;
    sample.state = uniform_vector(d, 0.0, 1.0, rng);
    sample.next_state = uniform_vector(d, 0.0, 1.0, rng);
    sample.reward = u01(rng) < 0.5 ? 0.0 : 1.0;
    const Vector theta = uniform_vector(l, -1.0, 1.0, rng);
    const Matrix f = 0.5 * gaussian_matrix(l, l, rng);

    const FeatureGradient g = feature_loss_gradient(fm, sample, theta, f);
    Matrix fd_mu(l, d), fd_sigma(l, d);
    for (Eigen::Index j = 0; j < l; ++j) {
      for (Eigen::Index k = 0; k < d; ++k) {
        for (int which = 0; which < 2; ++which) {
          FeatureMap plus = fm, minus = fm;
          double& xp = which == 0 ? plus.bases[j].mu[k] : plus.bases[j].sigma[k];
          double& xm = which == 0 ? minus.bases[j].mu[k] : minus.bases[j].sigma[k];
          const double h = 1e-6 * std::max(1.0, std::abs(xp));
          xp += h;
          xm -= h;
          const double fd =
              (feature_loss(plus, sample, theta, f) - feature_loss(minus, sample, theta, f)) / (2 * h);
          (which == 0 ? fd_mu : fd_sigma)(j, k) = fd;
        }
      }
    }
    const double scale = std::max({fd_mu.norm(), fd_sigma.norm(), 1e-8});
    const double rel = std::max((g.d_mu - fd_mu).norm(), (g.d_sigma - fd_sigma).norm()) / scale;
    worst = std::max(worst, rel);
  }
  const double tol = 1e-4;
  return {"rbf_gradient", worst <= tol, worst, tol,
          std::to_string(trials) + " random maps, worst relative error " + fmt(worst)};
}

std::vector<OracleResult> run_oracle_suite(std::uint64_t seed) {
  return {check_sf_fixed_point(1000, seed),   check_tabular_sr(100, seed + 1),
          check_two_state_chain(),            check_barrier_adaptation(),
          check_error_bound(100, seed + 2),   check_rbf_gradient(100, seed + 3)};
}

}  // namespace mbsf::oracle
