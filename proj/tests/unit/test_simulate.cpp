#include <cmath>
#include <cstdlib>
#include <numbers>

#include "doctest.h"

#include "sepcross/error.hpp"
#include "sepcross/report_io.hpp"
#include "sepcross/simulate.hpp"
#include "sepcross/stats.hpp"

using namespace sepcross;

namespace {

struct Duffing {
  SystemPtr sys = catalog_system("duffing_dissipative");
  SaddleChart chart = find_saddle(*sys, std::vector<double>{0.0}, {0.1, 0.1});
};

const SeparatrixCoefficients& duffing_coeffs() {
  static const SeparatrixCoefficients c =
      bundle(catalog_system("duffing_dissipative"), std::vector<double>{0.0}, {0.1, 0.1});
  return c;
}

SweepConfig small_sweep() {
  SweepConfig cfg;
  cfg.sys = catalog_system("duffing_dissipative");
  cfg.z0 = {0.0};
  cfg.saddle_seed = {0.1, 0.1};
  cfg.eps = 1e-2;
  cfg.h_init = 0.1;
  cfg.phases = 8;
  cfg.time_shift = false;
  return cfg;
}

}  // namespace

TEST_CASE("energy is conserved without the perturbation") {
  Duffing d;
  SimOptions opt;
  opt.t_end = 1000.0;
  const std::vector<double> y0{0.0, 1.5, 0.0};
  const TrajectoryRecord tr = integrate_full(d.sys, d.chart, y0, 0.0, opt);
  CHECK(tr.t_final == doctest::Approx(1000.0));
  const double H0 = d.sys->H(0.0, 1.5, nullptr);
  const double H1 = d.sys->H(tr.y_final[0], tr.y_final[1], nullptr);
  CHECK(std::abs(H1 - H0) <= 1e-10);
  for (const auto& e : tr.events) CHECK(std::abs(e.h - H0) < 1e-10);
}

TEST_CASE("rounds before capture") {
  Duffing d;
  const auto& c = duffing_coeffs();
  const double eps = 1e-3, h_init = 0.04;
  SimOptions opt;
  opt.rounds_after_capture = 4;
  const TrajectoryRecord tr =
      integrate_full(d.sys, d.chart, initial_state(d.sys, d.chart, Domain::G3, h_init, 0.3), eps, opt);
  std::size_t n_eta = 0, n_low = 0;
  double t_prev = -1.0;
  for (const auto& e : tr.events) {
    CHECK(e.t > t_prev);
    t_prev = e.t;
    if (e.ray == Ray::eta_plus && e.h > 0.0) ++n_eta;
    if (e.ray == Ray::eta_plus && e.h > 0.0 && e.h < 0.02) ++n_low;
  }
  // Close to the separatrix the loss per round is eps Theta3.
  CAPTURE(n_low);
  CHECK(std::abs(static_cast<double>(n_low) - 0.02 / (eps * c.Theta[2])) <= 2.0);
  // Same count with the h dependence of the loss per round.
  double rounds = 0.0;
  const int n = 100;
  for (int k = 0; k < n; ++k) {
    const double h = h_init * (k + 0.5) / n;
    rounds += h_init / n / (eps * averaged_rhs(d.sys, d.chart, Domain::G3, h).Theta);
  }
  CAPTURE(rounds);
  CHECK(std::abs(static_cast<double>(n_eta) - rounds) <= 2.0);

  const CrossingRecord cr = extract_crossing(tr, c);
  REQUIRE(cr.increments.size() >= 10);
  double m = 0.0;
  for (std::size_t k = cr.increments.size() - 10; k < cr.increments.size(); ++k) {
    m += cr.increments[k] / (eps * c.Theta[2]);
  }
  CHECK(m / 10.0 == doctest::Approx(1.0).epsilon(0.05));
  CHECK(cr.h0 > 0.0);
  CHECK(cr.h0p < 0.0);
  CHECK(cr.xi3 == doctest::Approx(cr.h0 / (eps * c.Theta[2])));
  const double th = c.theta_i3(cr.target);
  CHECK(std::abs(cr.xi3 - th * (1.0 - cr.xi_i)) <= 0.02);
  for (const auto& e : tr.events) {
    if ((e.ray == Ray::xi_plus || e.ray == Ray::xi_minus) && e.t > cr.t0p) CHECK(e.h < 0.0);
  }
}

TEST_CASE("tolerance halving") {
  Duffing d;
  SimOptions a;
  a.t_end = 50.0;
  a.rtol = 1e-11;
  a.atol = 1e-13;
  SimOptions b = a;
  b.rtol *= 0.5;
  b.atol *= 0.5;
  const auto y0 = initial_state(d.sys, d.chart, Domain::G3, 0.2, 1.0);
  const auto ra = integrate_full(d.sys, d.chart, y0, 1e-2, a);
  const auto rb = integrate_full(d.sys, d.chart, y0, 1e-2, b);
  for (std::size_t k = 0; k < ra.y_final.size(); ++k) {
    CHECK(std::abs(ra.y_final[k] - rb.y_final[k]) <= 1e-9);
  }
}

TEST_CASE("no crossing") {
  Duffing d;
  SimOptions opt;
  opt.t_end = 30.0;
  const auto tr =
      integrate_full(d.sys, d.chart, initial_state(d.sys, d.chart, Domain::G3, 0.3, 0.0), 1e-3, opt);
  try {
    extract_crossing(tr, duffing_coeffs());
    FAIL("expected not_captured");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_captured);
  }
}

TEST_CASE("synthetic time shift") {
  Duffing d;
  AveragedRequest req;
  req.h0 = 0.3;
  req.z0 = {0.0};
  req.saddle_seed = {0.1, 0.1};
  const AveragedSolution avg = solve_averaged(d.sys, req);
  const double eps = 1e-3;
  auto rounds_with = [&](double shift, double noise) {
    std::vector<Round> rs;
    const double t0 = (avg.tau_at_h(0.2) - shift) / eps;
    for (int k = 0; k < 30; ++k) {
      Round r;
      r.t_a = t0 + 6.0 * k;
      r.t_b = r.t_a + 6.0;
      const double a = eps * r.t_a + shift, b = eps * r.t_b + shift;
      r.h_avg = (avg.h_at_tau(a) + 4.0 * avg.h_at_tau(0.5 * (a + b)) + avg.h_at_tau(b)) / 6.0;
      r.h_avg += noise * ((k * 7919) % 13 - 6) / 6.0;
      rs.push_back(r);
    }
    return rs;
  };
  CHECK(std::abs(fit_time_shift(rounds_with(1e-3, 0.0), avg, eps).delta - 1e-3) < 1e-8);
  CHECK(std::abs(fit_time_shift(rounds_with(0.0, 0.0), avg, eps).delta) < 1e-9);
  const double clean = fit_time_shift(rounds_with(1e-3, 0.0), avg, eps).delta;
  CHECK(std::abs(fit_time_shift(rounds_with(1e-3, 1e-8), avg, eps).delta - clean) < 1e-6);
  auto few = rounds_with(0.0, 0.0);
  few.resize(4);
  CHECK_THROWS_AS(fit_time_shift(few, avg, eps), Error);
}

TEST_CASE("sweep bookkeeping and determinism") {
  const SweepConfig cfg = small_sweep();
  const SweepResult a = run_sweep(cfg);
  REQUIRE(a.rows.size() == 8);
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(a.rows[k].run_id == k);
    CHECK(a.rows[k].phi0 == doctest::Approx(2.0 * std::numbers::pi * (k + 0.5) / 8.0));
    CHECK(a.rows[k].error.empty());
  }
  const auto names = cfg.sys->z_names();
  const std::string csv = io::sweep_csv(a.rows, names);
  CHECK(io::sweep_csv(run_sweep(cfg).rows, names) == csv);
  setenv("SEPCROSS_THREADS", "3", 1);
  const std::string par = io::sweep_csv(run_sweep(cfg).rows, names);
  unsetenv("SEPCROSS_THREADS");
  CHECK(par == csv);
}

TEST_CASE("sweep phases and layers") {
  const auto grid = sweep_phases(4, std::nullopt);
  REQUIRE(grid.size() == 4);
  CHECK(grid[0] == doctest::Approx(std::numbers::pi / 4.0));
  const auto r1 = sweep_phases(100, 7), r2 = sweep_phases(100, 7), r3 = sweep_phases(100, 8);
  CHECK(r1 == r2);
  CHECK(r1 != r3);
  for (double p : r1) CHECK((p >= 0.0 && p < 2.0 * std::numbers::pi));
  const auto l1 = sweep_layer(100, 7);
  for (double x : l1) CHECK((x >= 0.0 && x < 1.0));
  CHECK(l1 != sweep_layer(100, std::nullopt));
}

TEST_CASE("statistics helpers") {
  const std::vector<double> x{3.0, 1.0, 2.0, 4.0};
  CHECK(stats::mean(x) == 2.5);
  CHECK(stats::median(x) == 2.5);
  CHECK(stats::rms(x) == doctest::Approx(std::sqrt(7.5)));
  const auto [lo, hi] = stats::wilson_interval(50, 100);
  CHECK(lo == doctest::Approx(0.4038).epsilon(1e-3));
  CHECK(hi == doctest::Approx(0.5962).epsilon(1e-3));
  std::vector<double> u;
  for (int k = 0; k < 500; ++k) u.push_back((k + 0.5) / 500.0);
  CHECK(stats::ks_uniform(u).p > 0.99);
  for (double& v : u) v *= v;
  CHECK(stats::ks_uniform(u).p < 1e-6);
  const std::vector<double> xs{1.0, 10.0, 100.0}, ys{2.0, 200.0, 20000.0};
  CHECK(stats::loglog_slope(xs, ys) == doctest::Approx(2.0));
}
