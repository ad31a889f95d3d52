#include <cmath>
#include <numbers>

#include "doctest.h"

#include "sepcross/averaging.hpp"
#include "sepcross/simulate.hpp"

using namespace sepcross;

namespace {

constexpr double kPi = std::numbers::pi;

struct Duffing {
  SystemPtr sys = catalog_system("duffing_dissipative");
  SaddleChart chart = find_saddle(*sys, std::vector<double>{0.0}, {0.1, 0.1});
};

// Simpson rule on [a, b] with n (even) panels.
template <class F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("averaged right-hand side") {
  Duffing d;
  SUBCASE("G3 near the separatrix") {
    const AveragedRhs r = averaged_rhs(d.sys, d.chart, Domain::G3, 1e-7);
    CHECK(r.T * r.fh == doctest::Approx(-8.0 / 3.0).epsilon(1e-4));
    CHECK(r.Theta == doctest::Approx(-r.T * r.fh).epsilon(1e-12));
    CHECK(r.fz[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("harmonic virial in a well") {
    const double h = -0.2499;
    const AveragedRhs r = averaged_rhs(d.sys, d.chart, Domain::G1, h);
    CHECK(std::abs(r.fh + (h + 0.25)) < 1e-4 * 1e-2 + 1e-6);
  }
}

TEST_CASE("arrival time against a quadrature oracle") {
  Duffing d;
  AveragedRequest req;
  req.h0 = 1.0;
  req.z0 = {0.0};
  req.saddle_seed = {0.1, 0.1};
  const AveragedSolution sol = solve_averaged(d.sys, req);
  REQUIRE(sol.arrived());
  // tau_* = int_0^1 T / Theta dh, written in s = -ln h to tame the log singularity.
  const FrozenFields ff(d.sys, d.chart);
  auto integrand = [&](double s) {
    const double h = std::exp(-s);
    const OrbitIntegrals I = periodic_orbit(ff, d.chart, Domain::G3, h).integrals;
    return h * I.T / -I.fh;
  };
  const double s_max = 24.0;
  double oracle = simpson(integrand, 0.0, 4.0, 80) + simpson(integrand, 4.0, s_max, 160);
  // Below h = e^{-s_max}: T ~ -2 ln h + b3 and Theta ~ 8/3.
  const double x = std::exp(-s_max);
  const AveragedRhs tail = averaged_rhs(d.sys, d.chart, Domain::G3, x);
  const double b3 = tail.T + 2.0 * std::log(x);
  oracle += (-2.0 * (x * std::log(x) - x) + b3 * x) / tail.Theta;
  CHECK(sol.tau_star() == doctest::Approx(oracle).epsilon(1e-8));
  CHECK(sol.z_star()[0] == doctest::Approx(sol.tau_star()).epsilon(1e-12));
}

TEST_CASE("separatrix start arrives at once") {
  Duffing d;
  AveragedRequest req;
  req.h0 = 0.0;
  req.z0 = {0.25};
  req.tau0 = 0.25;
  req.saddle_seed = {0.1, 0.1};
  const AveragedSolution sol = solve_averaged(d.sys, req);
  CHECK(sol.tau_star() == doctest::Approx(0.25));
  CHECK(sol.z_star()[0] == doctest::Approx(0.25));
}

TEST_CASE("glued solution") {
  Duffing d;
  AveragedRequest req;
  req.h0 = 0.3;
  req.z0 = {0.0};
  req.target = Domain::G2;
  req.h_end = -0.2;
  req.saddle_seed = {0.1, 0.1};
  const AveragedSolution sol = solve_averaged(d.sys, req);
  REQUIRE(sol.route() == std::vector<Domain>{Domain::G3, Domain::G2});
  const double ts = sol.tau_star();
  CHECK(sol.legs()[0].tau_star == doctest::Approx(ts));
  CHECK(sol.legs()[1].tau_star == doctest::Approx(ts));
  CHECK(sol.h_at_tau(ts - 1e-3) > 0.0);
  CHECK(sol.h_at_tau(ts + 1e-3) < 0.0);
  // Inverse lookups agree on both sides.
  for (double h : {0.25, 0.1, 1e-3, -1e-3, -0.1}) {
    CAPTURE(h);
    const double tau = sol.tau_at_h(h);
    CHECK(sol.h_at_tau(tau) == doctest::Approx(h).epsilon(1e-9));
  }
  // Near the separatrix in G3 the energy falls at the rate Theta3 / T.
  double h1, h2;
  std::vector<double> z;
  sol.at_tau(ts - 2e-3, h1, z);
  sol.at_tau(ts - 1e-3, h2, z);
  const AveragedRhs r = averaged_rhs(d.sys, d.chart, Domain::G3, 0.5 * (h1 + h2));
  CHECK((h2 - h1) / 1e-3 == doctest::Approx(r.fh).epsilon(2e-2));
}

TEST_CASE("backward then forward returns to the start") {
  Duffing d;
  AveragedRequest fwd;
  fwd.h0 = 0.2;
  fwd.z0 = {0.0};
  fwd.h_end = 0.05;
  fwd.saddle_seed = {0.1, 0.1};
  const AveragedSolution a = solve_averaged(d.sys, fwd);
  double tau_end;
  std::vector<double> z_end;
  a.at_h(0, 0.05, tau_end, z_end);
  AveragedRequest back = fwd;
  back.h0 = 0.05;
  back.z0 = z_end;
  back.tau0 = tau_end;
  back.h_end = 0.2;
  const AveragedSolution b = solve_averaged(d.sys, back);
  double tau0;
  std::vector<double> z0;
  b.at_h(0, 0.2, tau0, z0);
  CHECK(std::abs(tau0) < 1e-9);
  CHECK(std::abs(z0[0]) < 1e-9);
}

TEST_CASE("first-order correction") {
  Duffing d;
  SUBCASE("zero mean over start phases") {
    double sum = 0.0, amp = 0.0;
    for (int k = 0; k < 64; ++k) {
      const Correction c =
          first_order_correction(d.sys, d.chart, Domain::G3, 0.2, 2.0 * kPi * k / 64.0);
      sum += c.u_h;
      amp = std::max(amp, std::abs(c.u_h));
      CHECK(c.u_z[0] == 0.0);
    }
    CHECK(amp > 1e-2);
    CHECK(std::abs(sum / 64.0) < 1e-8);
  }
  SUBCASE("harmonic limit") {
    const double h = -0.2499;
    const double u0 = first_order_correction(d.sys, d.chart, Domain::G1, h, 0.0).u_h;
    const double u1 = first_order_correction(d.sys, d.chart, Domain::G1, h, kPi / 4.0).u_h;
    const double expect = (h + 0.25) / (2.0 * std::sqrt(2.0));
    CHECK(std::hypot(u0, u1) == doctest::Approx(expect).epsilon(0.02));
  }
  SUBCASE("phase derivative is the fluctuation of f_h") {
    const double h = 0.2, phi = 1.1, dphi = 1e-4;
    const FrozenFields ff(d.sys, d.chart);
    const Orbit o = periodic_orbit(ff, d.chart, Domain::G3, h);
    const double up = first_order_correction(d.sys, d.chart, Domain::G3, h, phi + dphi).u_h;
    const double um = first_order_correction(d.sys, d.chart, Domain::G3, h, phi - dphi).u_h;
    const double du_dt = (up - um) / (2.0 * dphi) * 2.0 * kPi / o.T;
    const std::vector<double> x = initial_state(d.sys, d.chart, Domain::G3, h, phi);
    CHECK(du_dt == doctest::Approx(ff.f_h(x[0], x[1]) - o.integrals.fh / o.T).epsilon(1e-5));
  }
}

TEST_CASE("improved invariant is flatter than the action") {
  auto sys = catalog_system("duffing_breathing_asym");
  const Vec2 seed{0.1, 0.1};
  const SaddleChart c0 = find_saddle(*sys, std::vector<double>{0.0}, seed);
  const double eps = 1e-3;
  SimOptions opt;
  opt.t_end = 40.0;
  opt.sample_dt = 0.37;
  const TrajectoryRecord tr =
      integrate_full(sys, c0, initial_state(sys, c0, Domain::G3, 0.3, 0.0), eps, opt);
  REQUIRE(tr.samples.size() > 50);
  double Imin = 1e9, Imax = -1e9, Jmin = 1e9, Jmax = -1e9;
  for (const auto& s : tr.samples) {
    const std::vector<double> z{s[2]};
    const SaddleChart c = track_saddle(*sys, z, c0);
    const InvariantSample v = improved_invariant(sys, c, s[0], s[1], eps);
    Imin = std::min(Imin, v.I);
    Imax = std::max(Imax, v.I);
    Jmin = std::min(Jmin, v.J);
    Jmax = std::max(Jmax, v.J);
  }
  CHECK(Imax - Imin > 10.0 * (Jmax - Jmin));
  CHECK(Jmax - Jmin < 5.0 * eps * eps);
}
