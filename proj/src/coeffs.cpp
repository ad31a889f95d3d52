#include "sepcross/coeffs.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "lsq.hpp"
#include "sepcross/error.hpp"

namespace sepcross {

namespace {

using Basis = std::vector<std::function<double(double)>>;

// T + a ln|h| and other quantities with h ln h corrections.
const Basis& smooth_basis() {
  static const Basis b{
      [](double) { return 1.0; },
      [](double x) { return x * std::log(x); },
      [](double x) { return x; },
      [](double x) { return x * x * std::log(x); },
      [](double x) { return x * x; },
  };
  return b;
}

// Weighted integrals: alpha ln|h| + beta plus half-integer power corrections.
const Basis& weighted_basis() {
  static const Basis b{
      [](double x) { return std::log(x); },
      [](double) { return 1.0; },
      [](double x) { return std::sqrt(x) * std::log(x); },
      [](double x) { return std::sqrt(x); },
      [](double x) { return x * std::log(x); },
      [](double x) { return x; },
      [](double x) { return x * std::sqrt(x) * std::log(x); },
      [](double x) { return x * std::sqrt(x); },
  };
  return b;
}

constexpr std::size_t kDropped = 4;

FitRecord fit_record(const std::string& name, const std::vector<double>& h,
                     const std::vector<double>& y, const Basis& basis, std::size_t value_index) {
  if (h.size() < basis.size() + kDropped + 2) {
    throw Error(ErrorKind::fit_diverged, name + ": h grid too short for the fit");
  }
  const lsq::Fit full = lsq::fit(h, y, basis);
  const std::vector<double> h2(h.begin() + kDropped, h.end());
  const std::vector<double> y2(y.begin() + kDropped, y.end());
  const lsq::Fit part = lsq::fit(h2, y2, basis);
  FitRecord r;
  r.name = name;
  r.h = h;
  r.order = basis.size();
  r.value = full.coef[value_index];
  r.residual_rms = full.residual_rms;
  r.spread = std::abs(part.coef[value_index] - r.value);
  if (&basis == &weighted_basis()) r.slope = full.coef[0];
  return r;
}

void check_slope(FitRecord& r, double predicted, double ref, double tol) {
  r.slope_predicted = predicted;
  const double allowed = tol * std::max(std::abs(predicted), ref) + 1e-10;
  if (std::abs(*r.slope - predicted) > allowed) {
    std::ostringstream os;
    os.precision(10);
    os << r.name << ": fitted log-slope " << *r.slope << " differs from predicted " << predicted;
    throw Error(ErrorKind::fit_diverged, os.str());
  }
}

std::string component_name(const char* base, std::size_t i, std::size_t j) {
  return std::string(base) + std::to_string(i) + "[" + std::to_string(j) + "]";
}

}  // namespace

LoopIntegrals loop_integrals(const SeparatrixGeometry& geo) {
  LoopIntegrals out;
  const std::size_t k = geo.l1.Fz.size();
  for (std::size_t i = 0; i < 2; ++i) {
    const Loop& l = i == 0 ? geo.l1 : geo.l2;
    out.Theta[i] = -(l.fh + l.fh_tail);
    out.A[i].resize(k);
    out.dSdz[i].resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      out.A[i][j] = l.Fz[j] + l.Fz_tail[j];
      out.dSdz[i][j] = -(l.Ez[j] + l.Ez_tail[j]);
    }
  }
  out.S = {geo.S1, geo.S2, geo.S3};
  out.Theta[2] = out.Theta[0] + out.Theta[1];
  out.A[2].resize(k);
  out.dSdz[2].resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    out.A[2][j] = out.A[0][j] + out.A[1][j];
    out.dSdz[2][j] = out.dSdz[0][j] + out.dSdz[1][j];
  }
  return out;
}

OrbitSweep sweep_orbits(const FrozenFields& ff, const SeparatrixGeometry& geo,
                        const CoeffOptions& opt) {
  OrbitSweep sw;
  const double top = opt.h_max_rel * geo.S3;
  const double bottom = opt.h_min_rel * geo.S3;
  for (double h = top; h >= bottom; h /= opt.ratio) sw.h.push_back(h);
  const SaddleChart& ch = geo.chart;
  for (const Ray r : {Ray::xi_minus, Ray::xi_plus}) {
    const double Emin = ray_minimum(ff, ch, r).E;
    if (!(Emin < -top)) {
      throw Error(ErrorKind::topology, "loop interior too shallow for the h grid on ray " + to_string(r));
    }
  }
  for (const double h : sw.h) {
    sw.orbits[0].push_back(periodic_orbit(ff, ch, Domain::G1, -h).integrals);
    sw.orbits[1].push_back(periodic_orbit(ff, ch, Domain::G2, -h).integrals);
    sw.orbits[2].push_back(periodic_orbit(ff, ch, Domain::G3, h).integrals);
    sw.orbits[3].push_back(periodic_orbit(ff, ch, Domain::G3, h, {}, Ray::eta_minus).integrals);
  }
  return sw;
}

PeriodConstants period_constants(const SaddleChart& chart, const OrbitSweep& sw,
                                 const CoeffOptions& opt) {
  PeriodConstants pc;
  pc.a = chart.a;
  for (std::size_t i = 0; i < 3; ++i) {
    const double ai = i == 2 ? 2.0 * chart.a : chart.a;
    std::vector<double> y;
    for (std::size_t n = 0; n < sw.h.size(); ++n) y.push_back(sw.orbits[i][n].T + ai * std::log(sw.h[n]));
    FitRecord r = fit_record("b" + std::to_string(i + 1), sw.h, y, smooth_basis(), 0);
    if (!(r.residual_rms <= opt.b_residual_tol * (1.0 + std::abs(r.value)))) {
      throw Error(ErrorKind::fit_diverged, r.name + ": period fit residual " +
                                               std::to_string(r.residual_rms) + " too large");
    }
    pc.b[i] = r.value;
    pc.fits.push_back(std::move(r));
  }
  return pc;
}

WeightedConstants weighted_constants(const SaddleChart& chart, const OrbitSweep& sw,
                                     const LoopIntegrals& loops, const PeriodConstants& pc,
                                     const CoeffOptions& opt) {
  WeightedConstants wc;
  const double a = chart.a;
  const auto& Th = loops.Theta;
  const auto& b = pc.b;
  const std::size_t n = sw.h.size();
  const std::size_t k = loops.A[0].size();
  auto W_fh = [&](std::size_t set) {
    std::vector<double> y(n);
    for (std::size_t m = 0; m < n; ++m) {
      const OrbitIntegrals& o = sw.orbits[set][m];
      y[m] = o.tfh - 0.5 * o.T * o.fh;
    }
    return y;
  };
  auto W_Fz = [&](std::size_t set, std::size_t j) {
    std::vector<double> y(n);
    for (std::size_t m = 0; m < n; ++m) {
      const OrbitIntegrals& o = sw.orbits[set][m];
      y[m] = o.tFz[j] - 0.5 * o.T * o.Fz[j];
    }
    return y;
  };
  const double th_ref = 0.5 * a * (std::abs(Th[0]) + std::abs(Th[1]));

  for (std::size_t i = 0; i < 2; ++i) {
    FitRecord r = fit_record("d" + std::to_string(i + 1), sw.h, W_fh(i), weighted_basis(), 1);
    check_slope(r, 0.0, th_ref, opt.slope_tol);
    wc.d[i] = -r.value;
    wc.fits.push_back(std::move(r));
  }
  {
    FitRecord r = fit_record("d3", sw.h, W_fh(2), weighted_basis(), 1);
    check_slope(r, -a * (Th[1] - Th[0]) / 2.0, th_ref, opt.slope_tol);
    wc.d[2] = -r.value - (Th[0] * b[1] - Th[1] * b[0]) / 2.0;
    wc.fits.push_back(std::move(r));
  }
  {
    // Mirrored start: the loops are visited in the opposite order.
    FitRecord r = fit_record("d3_mirror", sw.h, W_fh(3), weighted_basis(), 1);
    check_slope(r, -a * (Th[0] - Th[1]) / 2.0, th_ref, opt.slope_tol);
    wc.d3_mirror = -r.value - (Th[1] * b[0] - Th[0] * b[1]) / 2.0;
    wc.fits.push_back(std::move(r));
  }

  for (std::size_t i = 0; i < 3; ++i) wc.g[i].resize(k);
  wc.g3_mirror.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double A1 = loops.A[0][j], A2 = loops.A[1][j];
    const double ref = 0.5 * a * (std::abs(A1) + std::abs(A2));
    for (std::size_t i = 0; i < 2; ++i) {
      FitRecord r = fit_record(component_name("g", i + 1, j), sw.h, W_Fz(i, j), weighted_basis(), 1);
      check_slope(r, 0.0, ref, opt.slope_tol);
      wc.g[i][j] = -r.value;
      wc.fits.push_back(std::move(r));
    }
    FitRecord r3 = fit_record(component_name("g", 3, j), sw.h, W_Fz(2, j), weighted_basis(), 1);
    check_slope(r3, -a * (A1 - A2) / 2.0, ref, opt.slope_tol);
    wc.g[2][j] = -r3.value + (A1 * b[1] - A2 * b[0]) / 2.0;
    wc.fits.push_back(std::move(r3));
    FitRecord rm = fit_record("g3_mirror[" + std::to_string(j) + "]", sw.h, W_Fz(3, j),
                              weighted_basis(), 1);
    check_slope(rm, -a * (A2 - A1) / 2.0, ref, opt.slope_tol);
    wc.g3_mirror[j] = -rm.value + (A2 * b[0] - A1 * b[1]) / 2.0;
    wc.fits.push_back(std::move(rm));
  }
  return wc;
}

SeparatrixCoefficients bundle(const SystemPtr& sys, const SaddleChart& chart,
                              const CoeffOptions& opt) {
  const SeparatrixGeometry geo = trace_separatrices(sys, chart, opt.delta_rel);
  const LoopIntegrals loops = loop_integrals(geo);
  if (opt.require_supported && !(loops.Theta[0] > 0.0 && loops.Theta[1] > 0.0)) {
    throw Error(ErrorKind::unsupported_regime,
                "Theta1 = " + std::to_string(loops.Theta[0]) + ", Theta2 = " +
                    std::to_string(loops.Theta[1]) + "; both must be positive");
  }
  FrozenFields ff(sys, chart);
  const OrbitSweep sw = sweep_orbits(ff, geo, opt);
  PeriodConstants pc = period_constants(chart, sw, opt);
  WeightedConstants wc = weighted_constants(chart, sw, loops, pc, opt);

  SeparatrixCoefficients c;
  c.z = chart.z;
  c.chart = chart;
  c.a = chart.a;
  c.b = pc.b;
  c.Theta = loops.Theta;
  c.S = loops.S;
  c.A = loops.A;
  c.dSdz = loops.dSdz;
  c.d = wc.d;
  c.g = wc.g;
  c.d3_mirror = wc.d3_mirror;
  c.g3_mirror = wc.g3_mirror;
  c.f_zC = ff.f_zC();

  FitDiagnostics& dg = c.diagnostics;
  dg.fits = std::move(pc.fits);
  for (auto& r : wc.fits) dg.fits.push_back(std::move(r));
  dg.fh_tail = {geo.l1.fh_tail, geo.l2.fh_tail};
  dg.Fz_tail = {geo.l1.Fz_tail, geo.l2.Fz_tail};
  dg.loop_max_abs_E = std::max(geo.l1.max_abs_E, geo.l2.max_abs_E);
  std::vector<double> th3, s3;
  for (const auto& o : sw.orbits[2]) {
    th3.push_back(-o.fh);
    s3.push_back(o.area);
  }
  FitRecord rt = fit_record("Theta3_orbit", sw.h, th3, smooth_basis(), 0);
  FitRecord rs = fit_record("S3_orbit", sw.h, s3, smooth_basis(), 0);
  dg.Theta3_orbit = rt.value;
  dg.S3_orbit = rs.value;
  dg.fits.push_back(std::move(rt));
  dg.fits.push_back(std::move(rs));
  return c;
}

SeparatrixCoefficients bundle(const SystemPtr& sys, std::span<const double> z, Vec2 seed,
                              SectionConfig sections, const CoeffOptions& opt) {
  return bundle(sys, find_saddle(*sys, z, seed, sections), opt);
}

void require_same_sections(const SeparatrixCoefficients& x, const SeparatrixCoefficients& y) {
  if (x.chart.sections.flip != y.chart.sections.flip ||
      x.chart.sections.rotate_deg != y.chart.sections.rotate_deg) {
    throw Error(ErrorKind::config, "coefficient bundles use different section conventions");
  }
}

nlohmann::json SeparatrixCoefficients::section_metadata() const {
  auto v = [](Vec2 x) { return nlohmann::json::array({x.p, x.q}); };
  return {
      {"flip", chart.sections.flip},
      {"rotate_deg", chart.sections.rotate_deg},
      {"convention", "eta: rotated eigen-bisector into G3; xi: same eigen-coordinate ratio, into G2"},
      {"v_u", v(chart.v_u)},
      {"v_s", v(chart.v_s)},
      {"e_eta", v(chart.e_eta)},
      {"e_xi", v(chart.e_xi)},
  };
}

nlohmann::json SeparatrixCoefficients::to_json() const {
  using nlohmann::json;
  json fits = json::array();
  for (const auto& r : diagnostics.fits) {
    json f = {{"name", r.name},
              {"h_max", r.h.front()},
              {"h_min", r.h.back()},
              {"levels", r.h.size()},
              {"order", r.order},
              {"value", r.value},
              {"residual_rms", r.residual_rms},
              {"spread", r.spread}};
    if (r.slope) f["slope"] = *r.slope;
    if (r.slope_predicted) f["slope_predicted"] = *r.slope_predicted;
    fits.push_back(std::move(f));
  }
  return {
      {"z", z},
      {"saddle", {{"p", chart.p_C}, {"q", chart.q_C}, {"h_C", chart.h_C}, {"lambda", chart.lambda}}},
      {"sections", section_metadata()},
      {"a", a},
      {"b", b},
      {"Theta", Theta},
      {"S", S},
      {"A", A},
      {"dS_dz", dSdz},
      {"d", d},
      {"g", g},
      {"d3_mirror", d3_mirror},
      {"g3_mirror", g3_mirror},
      {"f_zC", f_zC},
      {"diagnostics",
       {{"fits", fits},
        {"fh_tail", diagnostics.fh_tail},
        {"Fz_tail", diagnostics.Fz_tail},
        {"loop_max_abs_E", diagnostics.loop_max_abs_E},
        {"Theta3_orbit", diagnostics.Theta3_orbit},
        {"S3_orbit", diagnostics.S3_orbit}}},
  };
}

}  // namespace sepcross
