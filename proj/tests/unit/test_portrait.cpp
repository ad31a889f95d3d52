#include <cmath>
#include <numbers>

#include "doctest.h"

#include "sepcross/error.hpp"
#include "sepcross/model.hpp"
#include "sepcross/portrait.hpp"

using namespace sepcross;

namespace {
const std::vector<double> kZ0{0.0};
}

TEST_CASE("duffing saddle chart") {
  auto s = catalog_system("duffing_dissipative");
  const SaddleChart c = find_saddle(*s, kZ0, {0.1, 0.1});
  CHECK(std::abs(c.p_C) < 1e-12);
  CHECK(std::abs(c.q_C) < 1e-12);
  CHECK(c.h_C == doctest::Approx(0.0));
  CHECK(c.lambda == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.a == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(norm(c.v_u) - 1.0) < 1e-12);
  CHECK(std::abs(norm(c.e_eta) - 1.0) < 1e-12);
  CHECK(std::abs(dot(c.e_eta, c.e_xi)) < 1e-12);
}

TEST_CASE("a well is not a saddle") {
  auto s = catalog_system("duffing_dissipative");
  try {
    find_saddle(*s, kZ0, {0.0, 1.0});
    FAIL("expected not_a_saddle");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_a_saddle);
  }
}

TEST_CASE("breathing saddle stays at the origin") {
  auto s = catalog_system("duffing_breathing_asym");
  for (double tau : {0.0, 0.7, 2.0}) {
    const SaddleChart c = find_saddle(*s, std::vector<double>{tau}, {0.1, 0.1});
    CHECK(std::abs(c.q_C) < 1e-12);
    CHECK(c.lambda == doctest::Approx(std::sqrt(1.0 + 0.5 * tau)).epsilon(1e-10));
  }
}

TEST_CASE("duffing loop areas") {
  auto s = catalog_system("duffing_dissipative");
  const SeparatrixGeometry g = trace_separatrices(s, find_saddle(*s, kZ0, {0.1, 0.1}));
  CHECK(g.S1 == doctest::Approx(4.0 / 3.0).epsilon(1e-8));
  CHECK(g.S2 == doctest::Approx(4.0 / 3.0).epsilon(1e-8));
  CHECK(g.S3 == doctest::Approx(g.S1 + g.S2).epsilon(1e-12));
  CHECK(g.l1.max_abs_E < 1e-9);
  CHECK(g.l2.max_abs_E < 1e-9);
}

TEST_CASE("symmetric breathing areas scale with the square root of zeta") {
  auto s = catalog_system("duffing_breathing_asym", {{"c", 0.0}, {"rate", 0.5}});
  const double rate = 0.5;
  for (double tau : {0.0, 1.0, 3.0}) {
    const SaddleChart c = find_saddle(*s, std::vector<double>{tau}, {0.1, 0.1});
    const SeparatrixGeometry g = trace_separatrices(s, c);
    const double expect = 4.0 / 3.0 * std::sqrt(1.0 + rate * tau);
    CHECK(g.S1 == doctest::Approx(expect).epsilon(1e-8));
    CHECK(g.S2 == doctest::Approx(expect).epsilon(1e-8));
  }
}

TEST_CASE("periodic orbits") {
  auto s = catalog_system("duffing_dissipative");
  const SaddleChart c = find_saddle(*s, kZ0, {0.1, 0.1});
  const FrozenFields ff(s, c);

  SUBCASE("small oscillations in a well") {
    const Orbit o = periodic_orbit(ff, c, Domain::G1, -0.25 + 1e-8);
    CHECK(o.T == doctest::Approx(2.0 * std::numbers::pi / std::sqrt(2.0)).epsilon(1e-5));
  }
  SUBCASE("the two wells agree") {
    for (double h : {-0.2, -0.05, -1e-4}) {
      const Orbit o1 = periodic_orbit(ff, c, Domain::G1, h);
      const Orbit o2 = periodic_orbit(ff, c, Domain::G2, h);
      CHECK(o1.T == doctest::Approx(o2.T).epsilon(1e-10));
      CHECK(o1.integrals.area == doctest::Approx(o2.integrals.area).epsilon(1e-10));
    }
  }
  SUBCASE("period grows like -a ln|h|") {
    double prev = 0.0;
    for (double h : {1e-4, 1e-6, 1e-8}) {
      const double r = periodic_orbit(ff, c, Domain::G2, -h).T / (-c.a * std::log(h));
      if (prev != 0.0) CHECK(std::abs(r - 1.0) < std::abs(prev - 1.0));
      prev = r;
    }
    // Quartic well: T = ln(16 / |h|) + o(1) per loop, twice that outside.
    const double h = 1e-8;
    CHECK(periodic_orbit(ff, c, Domain::G2, -h).T + std::log(h) ==
          doctest::Approx(std::log(16.0)).epsilon(1e-5));
    CHECK(periodic_orbit(ff, c, Domain::G3, h).T + 2.0 * std::log(h) ==
          doctest::Approx(2.0 * std::log(16.0)).epsilon(1e-5));
  }
  SUBCASE("orbit closes and conserves energy") {
    OrbitOptions opt;
    opt.keep_dense = true;
    const Orbit o = periodic_orbit(ff, c, Domain::G3, 0.1, opt);
    const Vec2 end = o.point(o.T);
    CHECK(norm(end - o.start) < 1e-9);
    for (int k = 1; k < 8; ++k) {
      const Vec2 x = o.point(o.T * k / 8.0);
      CHECK(std::abs(ff.E(x.p, x.q) - 0.1) < 1e-10);
    }
    // Area enclosed by the G3 orbit exceeds both loops together.
    CHECK(o.integrals.area > 8.0 / 3.0);
  }
}

TEST_CASE("classification") {
  auto s = catalog_system("duffing_dissipative");
  const SeparatrixGeometry g = trace_separatrices(s, find_saddle(*s, kZ0, {0.1, 0.1}));
  const Classification out = classify(*s, g, 0.0, 1.5);
  CHECK(out.domain == Domain::G3);
  CHECK(out.E == doctest::Approx(0.140625));
  const Domain up = classify(*s, g, 0.0, 1.0).domain;
  const Domain down = classify(*s, g, 0.0, -1.0).domain;
  CHECK(up != Domain::G3);
  CHECK(down != Domain::G3);
  CHECK(up != down);
  CHECK(classify(*s, g, 0.0, 1.0).E == doctest::Approx(-0.25));
  CHECK_THROWS_AS(classify(*s, g, 0.0, 0.0), Error);
}
