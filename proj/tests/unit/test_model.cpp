#include <array>
#include <cmath>

#include "doctest.h"

#include "sepcross/error.hpp"
#include "sepcross/model.hpp"
#include "sepcross/model_file.hpp"
#include "sepcross/portrait.hpp"

using namespace sepcross;

namespace {
SaddleChart chart_at(const SystemPtr& s, std::vector<double> z) {
  return find_saddle(*s, z, {0.1, 0.1});
}
}  // namespace

TEST_CASE("catalog definitions") {
  auto dis = catalog_system("duffing_dissipative", {{"gamma", 1.0}});
  CHECK(dis->mode() == Mode::generic);
  CHECK(dis->dim_z() == 1);
  CHECK(catalog_system("duffing_breathing_asym")->mode() == Mode::hamiltonian_time);
  auto sf = catalog_system("duffing_slowfast");
  CHECK(sf->mode() == Mode::slow_fast);
  CHECK(sf->z_names() == std::vector<std::string>{"y", "x"});
  // f_z = (-dH/dx, dH/dy) = (-q, y).
  const double z[2] = {0.3, -0.1};
  double fp, fq, fz[2];
  sf->perturbation(0.2, 0.7, z, 0.0, fp, fq, fz);
  CHECK(fz[0] == doctest::Approx(-0.7));
  CHECK(fz[1] == doctest::Approx(0.3));
  CHECK_THROWS_AS(catalog_system("nope"), Error);
  CHECK_THROWS_AS(catalog_system("duffing_dissipative", {{"beta", 1.0}}), Error);
}

TEST_CASE("dissipative duffing fields") {
  auto s = catalog_system("duffing_dissipative");
  const SaddleChart c = chart_at(s, {0.0});
  const FieldSample at_c = derived_fields(s, c, 0.0, 0.0);
  CHECK(at_c.f_h == 0.0);
  CHECK(at_c.F_z[0] == 0.0);
  const FieldSample f = derived_fields(s, c, 1.0, 1.0);
  CHECK(f.E == doctest::Approx(0.25));
  CHECK(f.f_h == doctest::Approx(-1.0));
  CHECK(f.f_zC[0] == 1.0);
  CHECK(f.F_z[0] == 0.0);
}

TEST_CASE("slow-fast f_zC matches the saddle energy gradient") {
  for (const char* name : {"duffing_slowfast", "duffing_slowfast_breathing"}) {
    auto s = catalog_system(name);
    const std::vector<double> z{0.4, 0.15};
    const SaddleChart c = chart_at(s, z);
    const FieldSample f = derived_fields(s, c, 0.0, 0.0);
    const double d = 1e-5;
    auto hC = [&](double y, double x) { return track_saddle(*s, std::vector<double>{y, x}, c).h_C; };
    const double dy = (hC(z[0] + d, z[1]) - hC(z[0] - d, z[1])) / (2 * d);
    const double dx = (hC(z[0], z[1] + d) - hC(z[0], z[1] - d)) / (2 * d);
    CHECK(f.f_zC[0] == doctest::Approx(-dx).epsilon(1e-6));
    CHECK(f.f_zC[1] == doctest::Approx(dy).epsilon(1e-6));
  }
}

TEST_CASE("perturbation fields vanish linearly at the saddle") {
  auto s = catalog_system("duffing_breathing_asym");
  const SaddleChart c = chart_at(s, {0.3});
  const double r1 = 1e-3, r2 = 1e-4;
  const Vec2 dir{0.6, 0.8};
  const double f1 = std::abs(derived_fields(s, c, c.p_C + r1 * dir.p, c.q_C + r1 * dir.q).f_h);
  const double f2 = std::abs(derived_fields(s, c, c.p_C + r2 * dir.p, c.q_C + r2 * dir.q).f_h);
  CHECK(std::log(f1 / f2) / std::log(r1 / r2) >= 1.0 - 1e-3);
}

TEST_CASE("E is positive outside the figure eight") {
  auto s = catalog_system("duffing_dissipative");
  const SaddleChart c = chart_at(s, {0.0});
  // The separatrix crosses q = sqrt(2) at p = 0.
  CHECK(derived_fields(s, c, 0.0, std::sqrt(2.0) + 1e-4).E > 0.0);
  CHECK(derived_fields(s, c, 0.0, std::sqrt(2.0) - 1e-4).E < 0.0);
}

TEST_CASE("expression model matches the catalog model") {
  const std::string src = R"(
[model]
mode = "generic"
z = ["tau"]
H = "p^2/2 - q^2/2 + q^4/4"
f_p = "-gamma*p"
f_z = ["1"]
[params]
gamma = 0.7
)";
  const ModelFile mf = parse_model_file(src);
  auto cat = catalog_system("duffing_dissipative", {{"gamma", 0.7}});
  const double z[1] = {0.0};
  for (double p : {-0.8, 0.1, 1.3}) {
    for (double q : {-1.1, 0.4, 0.9}) {
      CHECK(mf.sys->H(p, q, z) == doctest::Approx(cat->H(p, q, z)).epsilon(1e-14));
      double a[3], b[3];
      mf.sys->rhs(std::array<double, 3>{p, q, 0.0}.data(), 1e-2, a);
      cat->rhs(std::array<double, 3>{p, q, 0.0}.data(), 1e-2, b);
      for (int k = 0; k < 3; ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-14));
    }
  }
}

TEST_CASE("model file errors are config errors") {
  auto kind = [](const std::string& src) {
    try {
      parse_model_file(src);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::model;
  };
  CHECK(kind("[model]\ncatalog = \"duffing_dissipative\"\ncolour = 1\n") == ErrorKind::config);
  CHECK(kind("[model]\ncatalog = \"duffing_dissipative\"\n[run]\neps = [-1.0]\n") == ErrorKind::config);
  CHECK(kind("[model\n") == ErrorKind::config);
  CHECK(kind("[params]\ngamma = 1.0\n") == ErrorKind::config);
  CHECK(kind("[model]\nz = [\"tau\"]\nH = \"p^2 +* q\"\n") == ErrorKind::config);
  try {
    load_model_file("/nonexistent/model.toml");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
    CHECK(std::string(e.what()).find("/nonexistent/model.toml") != std::string::npos);
  }
}

TEST_CASE("shipped model files load") {
  for (const char* f : {"duffing_dissipative", "duffing_dissipative_expr", "duffing_breathing_asym",
                        "duffing_slowfast", "duffing_slowfast_breathing"}) {
    const ModelFile mf = load_model_file(std::string(SEPCROSS_MODELS_DIR) + "/" + f + ".toml");
    CHECK(mf.run.z0.size() == mf.sys->dim_z());
    CHECK(mf.resolved()["model"]["name"].is_string());
  }
}

TEST_CASE("box") {
  Box b;
  b.z = {{-1.0, 1.0}};
  const double in[1] = {0.5}, out[1] = {2.0};
  CHECK(b.contains(0.0, 0.0, in));
  CHECK_FALSE(b.contains(0.0, 0.0, out));
  CHECK_FALSE(b.contains(11.0, 0.0, in));
}
