// Acceptance run: one PASS/FAIL line per criterion on stdout, progress on
// stderr. Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include <mbsf/checkpoint.hpp>
#include <mbsf/cli.hpp>
#include <mbsf/harness.hpp>
#include <mbsf/kalman.hpp>
#include <mbsf/oracle.hpp>
#include <mbsf_test/support.hpp>

namespace {

using namespace mbsf;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kSeeds = 20;
constexpr double kAlpha = 0.05;

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << "criterion " << id << ' ' << (pass ? "PASS" : "FAIL") << ' ' << detail << std::endl;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string f3(double v) { return format_fixed(v, 3); }

std::string sci(double v) {
  std::ostringstream out;
  out << std::scientific << std::setprecision(1) << v;
  return out.str();
}

struct Run {
  std::vector<RunRecord> records;
  Summary summary;
  std::vector<double> run_means() const {
    std::vector<double> m;
    for (const auto& r : records) m.push_back(r.mean_length());
    return m;
  }
  double seconds_per_step() const {
    double s = 0.0, n = 0.0;
    for (const auto& r : records) {
      s += r.wall_seconds;
      n += static_cast<double>(r.total_steps);
    }
    return n > 0 ? s / n : 0.0;
  }
};

ExperimentConfig experiment(const std::string& task, PolicyKind policy, std::size_t seeds) {
  ExperimentConfig cfg;
  cfg.task = builtin_task(task);
  cfg.agent = AgentConfig::defaults_for(cfg.task);
  cfg.policy = policy;
  cfg.seeds = default_seeds(seeds);
  return cfg;
}

Run execute(const std::string& label, const ExperimentConfig& cfg, const std::string& save_dir = {}) {
  const auto t0 = Clock::now();
  Run run;
  run.records = run_experiment(cfg, !save_dir.empty());
  run.summary = aggregate(run.records);
  if (!save_dir.empty()) {
    std::filesystem::create_directories(save_dir);
    for (auto& r : run.records) {
      save_checkpoint(*r.final_agent, save_dir + "/" + seed_checkpoint_name(r.seed));
      r.final_agent.reset();
    }
  }
  std::cerr << "  " << label << ": grand_mean=" << f3(run.summary.grand_mean)
            << " grand_std=" << f3(run.summary.grand_std) << " (" << f3(seconds_since(t0)) << " s)"
            << std::endl;
  return run;
}

ExperimentConfig transferred(ExperimentConfig cfg, const std::string& checkpoint_dir) {
  cfg.transfer = TransferMode::per_seed;
  cfg.checkpoint_in = checkpoint_dir;
  return cfg;
}

double window_mean(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  return std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(begin), v.begin() + static_cast<std::ptrdiff_t>(end),
                         0.0) /
         static_cast<double>(end - begin);
}

/// One-sided Welch test of H1: mean(a) < mean(b). Returns the p-value.
double welch_less(const std::vector<double>& a, const std::vector<double>& b) {
  auto moments = [](const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::pair{m, ss / (n - 1.0)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double se2 = va / na + vb / nb;
  if (se2 == 0.0) return ma < mb ? 0.0 : 1.0;
  const double t = (mb - ma) / std::sqrt(se2);
  const double df = se2 * se2 / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
  boost::math::students_t dist(df);
  return boost::math::cdf(boost::math::complement(dist, t));
}

void oracle_criteria() {
  {
    const auto t0 = Clock::now();
    const auto r = oracle::check_sf_fixed_point(1000, 1);
    const double secs = seconds_since(t0);
    report(1, r.passed && secs < 5.0, r.detail + " (tol " + sci(r.tolerance) + "), " + f3(secs) + " s");
  }
  {
    const auto sr = oracle::check_tabular_sr(100, 2);
    const auto chain = oracle::check_two_state_chain();
    const auto barrier = oracle::check_barrier_adaptation();
    report(2, sr.passed && chain.passed && barrier.passed,
           sr.detail + "; " + chain.name + (chain.passed ? " exact" : " mismatch") + "; " + barrier.detail);
  }
  {
    const auto r = oracle::check_error_bound(100, 4);
    report(4, r.passed, r.detail);
  }
  {
    const auto r = oracle::check_rbf_gradient(100, 5);
    report(5, r.passed, r.detail);
  }
}

void estimator_criterion() {
  const auto t0 = Clock::now();
  Rng rng(3);
  const Eigen::Index l = 16;
  Vector theta = test::random_vector(l, rng);
  theta *= 0.5 / theta.norm();
  const double noise = theta.squaredNorm() / 10.0;  // SNR 10 for x ~ N(0, I)
  std::normal_distribution<double> eps(0.0, std::sqrt(noise));
  GaussianBelief b = GaussianBelief::isotropic(l, 0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const Vector x = test::random_vector(l, rng);
    b = kf_update(b, x, theta.dot(x) + eps(rng), noise).belief;
  }
  const double theta_err = (b.mean - theta).norm();

  const Eigen::Index n = 16;
  Matrix f = test::random_matrix(n, n, rng);
  f *= 0.9 / f.jacobiSvd().singularValues()[0];
  std::normal_distribution<double> y_noise(0.0, 0.1);
  KroneckerMatrixBelief k = KroneckerMatrixBelief::isotropic(n, 0.0, 1.0, 1.0, 0.0, 0.01);
  for (int i = 0; i < 2000; ++i) {
    const Vector x = test::random_vector(n, rng);
    Vector y = f * x;
    for (Eigen::Index j = 0; j < n; ++j) y[j] += y_noise(rng);
    k = matrix_kf_update(k, x, y);
  }
  const double f_err = (k.mean - f).norm();
  const double secs = seconds_since(t0);
  report(3, theta_err <= 0.05 && f_err <= 0.1 && secs < 30.0,
         "|theta-theta*|=" + format_fixed(theta_err, 4) + " (tol 0.05), |F-F*|_F=" + format_fixed(f_err, 4) +
             " (tol 0.1, L=16), " + f3(secs) + " s");
}

struct Ablation {
  double p_value = 1.0;
  std::string detail;
};

struct NavigationOutcome {
  Ablation ablation;
  double slowest_run_seconds = 0.0;
};

NavigationOutcome navigation_criteria(const std::string& work) {
  std::cerr << "navigation runs (" << kSeeds << " seeds)" << std::endl;
  const Run a = execute("A uncertainty_aware", experiment("A", PolicyKind::uncertainty_aware, kSeeds),
                        work + "/A_ua");
  const Run a_eps = execute("A epsilon_greedy", experiment("A", PolicyKind::epsilon_greedy, kSeeds));
  execute("A ua_td_sf", experiment("A", PolicyKind::ua_td_sf, kSeeds), work + "/A_td");
  const Run b = execute("A->B", transferred(experiment("B", PolicyKind::uncertainty_aware, kSeeds), work + "/A_ua"));
  const Run c = execute("A->C", transferred(experiment("C", PolicyKind::uncertainty_aware, kSeeds), work + "/A_ua"));
  const Run c_td = execute("A->C ua_td_sf", transferred(experiment("C", PolicyKind::ua_td_sf, kSeeds), work + "/A_td"));

  const auto& curve = a.summary.mean_length;
  const double first = window_mean(curve, 0, 100);
  const double last = window_mean(curve, curve.size() - 100, curve.size());
  report(6, a.summary.grand_mean <= 95.0 && last <= 0.5 * first,
         "grand_mean=" + f3(a.summary.grand_mean) + " (tol 95), last100=" + f3(last) + " first100=" + f3(first) +
             " (need ratio <= 0.5)");

  const double scratch = a.summary.grand_mean;
  report(7, b.summary.grand_mean <= 0.6 * scratch,
         "B transfer grand_mean=" + f3(b.summary.grand_mean) + " vs 0.6 x A scratch " + f3(0.6 * scratch));

  std::size_t capped = 0, total = 0;
  const std::size_t cap = builtin_task("C").episode_cap;
  for (const auto& r : c_td.records) {
    for (const auto& e : r.episodes) {
      ++total;
      if (e.length >= cap && !e.reached_goal) ++capped;
    }
  }
  const double capped_frac = static_cast<double>(capped) / static_cast<double>(total);
  report(8, c.summary.grand_mean <= 0.7 * scratch && capped_frac >= 0.8,
         "C transfer grand_mean=" + f3(c.summary.grand_mean) + " vs 0.7 x A scratch " + f3(0.7 * scratch) +
             "; ua_td_sf capped fraction=" + f3(capped_frac) + " (need >= 0.8)");

  NavigationOutcome out;
  out.ablation.p_value = welch_less(a.run_means(), a_eps.run_means());
  out.ablation.detail = "A " + f3(a.summary.grand_mean) + " vs eps " + f3(a_eps.summary.grand_mean) +
                        " p=" + format_fixed(out.ablation.p_value, 4);
  for (const auto& r : a.records) out.slowest_run_seconds = std::max(out.slowest_run_seconds, r.wall_seconds);
  return out;
}

Ablation lock_criteria(const std::string& work) {
  std::cerr << "lock runs (" << kSeeds << " seeds)" << std::endl;
  const Run l1 = execute("lock1 uncertainty_aware", experiment("lock1", PolicyKind::uncertainty_aware, kSeeds),
                         work + "/lock1");
  const Run l1_eps = execute("lock1 epsilon_greedy", experiment("lock1", PolicyKind::epsilon_greedy, kSeeds));
  const Run l2 =
      execute("lock1->lock2", transferred(experiment("lock2", PolicyKind::uncertainty_aware, kSeeds), work + "/lock1"));
  const Run l3 =
      execute("lock1->lock3", transferred(experiment("lock3", PolicyKind::uncertainty_aware, kSeeds), work + "/lock1"));
  const double scratch = l1.summary.grand_mean;
  report(9, scratch <= 20.0 && l2.summary.grand_mean <= 0.7 * scratch && l3.summary.grand_mean >= scratch,
         "lock1=" + f3(scratch) + " (tol 20), lock2 transfer=" + f3(l2.summary.grand_mean) + " (tol " +
             f3(0.7 * scratch) + "), lock3 transfer=" + f3(l3.summary.grand_mean) + " (need >= " + f3(scratch) + ")");
  Ablation out;
  out.p_value = welch_less(l1.run_means(), l1_eps.run_means());
  out.detail = "lock1 " + f3(scratch) + " vs eps " + f3(l1_eps.summary.grand_mean) +
               " p=" + format_fixed(out.p_value, 4);
  return out;
}

void sweep_criteria(double l16_run_seconds) {
  std::cerr << "L sweep on A (" << kSeeds << " seeds)" << std::endl;
  std::map<std::size_t, Run> by_l;
  for (std::size_t order : {3u, 4u, 5u, 6u}) {
    ExperimentConfig cfg = experiment("A", PolicyKind::uncertainty_aware, kSeeds);
    cfg.agent.order = order;
    by_l[order * order] = execute("A L=" + std::to_string(order * order), cfg);
  }
  std::string means;
  for (const auto& [l, run] : by_l) means += " L" + std::to_string(l) + "=" + f3(run.summary.grand_mean);
  const double m9 = by_l.at(9).summary.grand_mean;
  const double m36 = by_l.at(36).summary.grand_mean;
  report(11, m36 <= 0.75 * m9, "grand means" + means + " (need L36 <= 0.75 x L9 = " + f3(0.75 * m9) + ")");

  const double ratio = by_l.at(36).seconds_per_step() / by_l.at(9).seconds_per_step();
  report(12, ratio <= 30.0 && l16_run_seconds < 600.0,
         "step time L36/L9=" + f3(ratio) + " (tol 30), slowest full L=16 A run " + f3(l16_run_seconds) +
             " s (tol 600)");
}

void determinism_criterion(const std::string& work) {
  std::string outputs[2];
  bool ok = true;
  for (int i = 0; i < 2; ++i) {
    const std::string dir = work + "/det_" + std::to_string(i);
    std::ostringstream out, err;
    if (cli({"train", "--task", "A", "--seeds", "1", "--out", dir}, out, err) != 0) {
      ok = false;
      std::cerr << err.str();
    }
    outputs[i] = test::read_file(dir + "/episodes.csv") + test::read_file(dir + "/plotdata.csv");
  }
  ok = ok && !outputs[0].empty() && outputs[0] == outputs[1];
  report(13, ok, std::string("two `train --task A --seeds 1` runs ") + (ok ? "byte-identical" : "differ"));
}

}  // namespace

int main() {
  test::TempDir work("acceptance");
  const auto t0 = Clock::now();
  try {
    oracle_criteria();
    estimator_criterion();
    const NavigationOutcome nav = navigation_criteria(work.str());
    const Ablation lock = lock_criteria(work.str());
    report(10, nav.ablation.p_value < kAlpha && lock.p_value < kAlpha,
           nav.ablation.detail + "; " + lock.detail + " (one-sided Welch, alpha 0.05)");
    sweep_criteria(nav.slowest_run_seconds);
    determinism_criterion(work.str());
  } catch (const std::exception& e) {
    std::cout << "acceptance aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cerr << "total " << f3(seconds_since(t0)) << " s" << std::endl;
  std::cout << (failures == 0 ? "all criteria PASS" : std::to_string(failures) + " criteria FAIL") << std::endl;
  return failures == 0 ? 0 : 1;
}
