#include <cmath>

#include "doctest.h"

#include "sepcross/coeffs.hpp"
#include "sepcross/error.hpp"

using namespace sepcross;

namespace {

const SeparatrixCoefficients& duffing() {
  static const SeparatrixCoefficients c =
      bundle(catalog_system("duffing_dissipative"), std::vector<double>{0.0}, {0.1, 0.1});
  return c;
}

const SeparatrixCoefficients& asym() {
  static const SeparatrixCoefficients c =
      bundle(catalog_system("duffing_breathing_asym"), std::vector<double>{0.0}, {0.1, 0.1});
  return c;
}

}  // namespace

TEST_CASE("dissipative duffing coefficients") {
  const auto& c = duffing();
  CHECK(c.a == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(c.Theta[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-6));
  CHECK(c.Theta[1] == doctest::Approx(4.0 / 3.0).epsilon(1e-6));
  CHECK(c.S[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-8));
  CHECK(c.A[0][0] == doctest::Approx(0.0));
  CHECK(c.A[1][0] == doctest::Approx(0.0));
  CHECK(c.g[0][0] == doctest::Approx(0.0));
  CHECK(c.g[1][0] == doctest::Approx(0.0));
  CHECK(c.b[0] == doctest::Approx(c.b[1]).epsilon(1e-7));
  CHECK(c.d[0] == doctest::Approx(c.d[1]).epsilon(1e-5));
  CHECK(c.f_zC[0] == 1.0);
}

TEST_CASE("index 3 is the sum of the loops") {
  for (const auto* c : {&duffing(), &asym()}) {
    CHECK(c->Theta[2] == doctest::Approx(c->Theta[0] + c->Theta[1]).epsilon(1e-10));
    CHECK(c->S[2] == doctest::Approx(c->S[0] + c->S[1]).epsilon(1e-10));
    CHECK(c->b[2] == doctest::Approx(c->b[0] + c->b[1]).epsilon(1e-6));
    for (std::size_t j = 0; j < c->z.size(); ++j) {
      CHECK(c->A[2][j] == doctest::Approx(c->A[0][j] + c->A[1][j]).epsilon(1e-8));
    }
    // Orbit-based estimates of the index-3 quantities.
    CHECK(c->diagnostics.Theta3_orbit == doctest::Approx(c->Theta[2]).epsilon(1e-6));
    CHECK(c->diagnostics.S3_orbit == doctest::Approx(c->S[2]).epsilon(1e-6));
  }
}

TEST_CASE("breathing: Theta equals the rate of change of the loop area") {
  auto s = catalog_system("duffing_breathing_asym");
  const auto& c = asym();
  CHECK(c.S[0] != doctest::Approx(c.S[1]));
  const double d = 1e-4;
  for (Domain dom : {Domain::G1, Domain::G2}) {
    const std::size_t i = index_of(dom);
    auto area = [&](double tau) {
      const SaddleChart ch = find_saddle(*s, std::vector<double>{tau}, {0.1, 0.1});
      const SeparatrixGeometry g = trace_separatrices(s, ch);
      return dom == Domain::G1 ? g.S1 : g.S2;
    };
    const double dS = (area(d) - area(-d)) / (2.0 * d);
    CHECK(c.Theta[i] == doctest::Approx(dS).epsilon(1e-6));
    CHECK(c.dSdz[i][0] == doctest::Approx(dS).epsilon(1e-6));
  }
}

TEST_CASE("fits report their slopes") {
  for (const FitRecord& r : duffing().diagnostics.fits) {
    CAPTURE(r.name);
    CHECK(r.order > 0);
    CHECK(r.h.size() > r.order);
    if (r.slope && r.slope_predicted) {
      CHECK(std::abs(*r.slope - *r.slope_predicted) < 0.05 + 0.05 * std::abs(*r.slope_predicted));
    }
  }
}

TEST_CASE("bundles with different sections do not mix") {
  SectionConfig flipped;
  flipped.flip = true;
  const auto other = bundle(catalog_system("duffing_dissipative"), std::vector<double>{0.0},
                            {0.1, 0.1}, flipped);
  CHECK_NOTHROW(require_same_sections(duffing(), duffing()));
  try {
    require_same_sections(duffing(), other);
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
  }
  // Flipping exchanges the loops, which are identical here.
  CHECK(other.Theta[0] == doctest::Approx(duffing().Theta[1]).epsilon(1e-8));
}

TEST_CASE("json export") {
  const auto j = duffing().to_json();
  CHECK(j.contains("a"));
  CHECK(j.contains("Theta"));
}
