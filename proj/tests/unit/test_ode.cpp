#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"

#include "sepcross/ode.hpp"

using namespace sepcross;

namespace {
void oscillator(double, const double* y, double* dy) {
  dy[0] = y[1];
  dy[1] = -y[0];
}
}  // namespace

TEST_CASE("harmonic oscillator over ten periods") {
  ode::Dop853 s(2, oscillator);
  const double T = 20.0 * std::numbers::pi;
  const std::vector<double> y0{1.0, 0.0};
  s.reset(0.0, y0, T);
  while (s.step() == ode::StepStatus::running) {
    const auto y = s.y();
    CHECK(std::abs(y[0] * y[0] + y[1] * y[1] - 1.0) < 1e-11);
  }
  CHECK(s.t() == T);
  CHECK(std::abs(s.y()[0] - 1.0) < 1e-10);
  CHECK(std::abs(s.y()[1]) < 1e-10);
  CHECK(s.steps() > 10);
}

TEST_CASE("backward integration") {
  ode::Dop853 s(2, oscillator);
  const std::vector<double> y0{1.0, 0.0};
  s.reset(0.0, y0, -1.0);
  while (s.step() == ode::StepStatus::running) {
  }
  CHECK(s.y()[0] == doctest::Approx(std::cos(1.0)).epsilon(1e-11));
  CHECK(s.y()[1] == doctest::Approx(std::sin(1.0)).epsilon(1e-11));
}

TEST_CASE("dense output") {
  ode::Options opt;
  opt.rtol = 1e-10;
  opt.atol = 1e-12;
  ode::Dop853 s(2, oscillator, opt);
  const std::vector<double> y0{0.0, 1.0};
  s.reset(0.0, y0, 6.0);
  double out[2];
  ode::StepStatus st;
  do {
    st = s.step();
    for (int k = 1; k < 4; ++k) {
      const double t = s.t_old() + (s.t() - s.t_old()) * k / 4.0;
      s.dense(t, out);
      CHECK(std::abs(out[0] - std::sin(t)) < 1e-9);
      CHECK(std::abs(s.segment().eval(t, 1) - std::cos(t)) < 1e-9);
    }
  } while (st == ode::StepStatus::running);
}

TEST_CASE("root location on the dense output") {
  ode::Dop853 s(2, oscillator);
  const std::vector<double> y0{0.0, 1.0};
  s.reset(0.0, y0, 10.0);
  std::vector<double> roots;
  auto g = [](double, const double* y) { return y[0]; };
  double g_old = 0.0;
  bool first = true;
  while (true) {
    const auto st = s.step();
    const double g_new = s.y()[0];
    if (!first && g_old * g_new < 0.0) roots.push_back(ode::locate_root(s, g, g_old, g_new));
    first = false;
    g_old = g_new;
    if (st == ode::StepStatus::finished) break;
  }
  REQUIRE(roots.size() == 3);
  for (std::size_t k = 0; k < roots.size(); ++k) {
    CHECK(std::abs(roots[k] - std::numbers::pi * (k + 1)) < 1e-12);
  }
}
