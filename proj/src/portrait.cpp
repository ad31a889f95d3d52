#include "sepcross/portrait.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/tools/minima.hpp>

#include "orbit_state.hpp"
#include "sepcross/error.hpp"

namespace sepcross {

std::string to_string(Domain d) {
  switch (d) {
    case Domain::G1: return "G1";
    case Domain::G2: return "G2";
    case Domain::G3: return "G3";
  }
  return "G3";
}

std::string to_string(Ray r) {
  switch (r) {
    case Ray::eta_plus: return "eta+";
    case Ray::eta_minus: return "eta-";
    case Ray::xi_plus: return "xi+";
    case Ray::xi_minus: return "xi-";
  }
  return "eta+";
}

Vec2 SaddleChart::direction(Ray r) const {
  switch (r) {
    case Ray::eta_plus: return e_eta;
    case Ray::eta_minus: return -e_eta;
    case Ray::xi_plus: return e_xi;
    case Ray::xi_minus: return -e_xi;
  }
  return e_eta;
}

Ray default_ray(Domain d) {
  switch (d) {
    case Domain::G1: return Ray::xi_minus;
    case Domain::G2: return Ray::xi_plus;
    case Domain::G3: return Ray::eta_plus;
  }
  return Ray::eta_plus;
}

namespace {

Vec2 unit(Vec2 v) {
  const double n = norm(v);
  return {v.p / n, v.q / n};
}

Vec2 rotate(Vec2 v, double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  return {c * v.p - s * v.q, s * v.p + c * v.q};
}

Vec2 newton_critical_point(const SystemDef& sys, const double* z, Vec2 x) {
  double Hp, Hq;
  sys.grad_pq(x.p, x.q, z, Hp, Hq);
  double g = std::hypot(Hp, Hq);
  for (int it = 0; it < 100; ++it) {
    if (g <= 1e-14) return x;
    double Hpp, Hpq, Hqq;
    sys.hess_pq(x.p, x.q, z, Hpp, Hpq, Hqq);
    const double det = Hpp * Hqq - Hpq * Hpq;
    if (det == 0.0 || !std::isfinite(det)) break;
    const Vec2 step{(Hqq * Hp - Hpq * Hq) / det, (-Hpq * Hp + Hpp * Hq) / det};
    double damp = 1.0;
    for (int k = 0; k < 30; ++k) {
      const Vec2 trial = x - damp * step;
      double tp, tq;
      sys.grad_pq(trial.p, trial.q, z, tp, tq);
      const double gt = std::hypot(tp, tq);
      if (gt < g || damp < 1e-6) {
        x = trial;
        g = gt;
        Hp = tp;
        Hq = tq;
        break;
      }
      damp *= 0.5;
    }
    if (norm(step) * damp < 1e-15 * (1.0 + norm(x))) break;
  }
  if (g > 1e-12) {
    throw Error(ErrorKind::no_convergence,
                "Newton iteration for the saddle did not converge (|grad H| = " +
                    std::to_string(g) + ")");
  }
  return x;
}

SaddleChart build_chart(const SystemDef& sys, std::span<const double> z, Vec2 c,
                        SectionConfig sections, const Vec2* vu_hint) {
  SaddleChart ch;
  ch.z.assign(z.begin(), z.end());
  ch.p_C = c.p;
  ch.q_C = c.q;
  ch.h_C = sys.H(c.p, c.q, z.data());
  ch.sections = sections;
  double Hpp, Hpq, Hqq;
  sys.hess_pq(c.p, c.q, z.data(), Hpp, Hpq, Hqq);
  const double det = Hpp * Hqq - Hpq * Hpq;
  if (!(det < 0.0)) {
    throw Error(ErrorKind::not_a_saddle, "critical point at (p, q) = (" + std::to_string(c.p) +
                                             ", " + std::to_string(c.q) + ") is not a saddle");
  }
  const double lam = std::sqrt(-det);
  ch.lambda = lam;
  ch.a = 1.0 / lam;
  auto eigvec = [&](double l) {
    const Vec2 v1{-Hqq, Hpq + l};
    const Vec2 v2{l - Hpq, Hpp};
    return unit(norm(v1) >= norm(v2) ? v1 : v2);
  };
  Vec2 vu = eigvec(lam);
  Vec2 vs = eigvec(-lam);
  auto Q = [&](Vec2 v) { return Hpp * v.p * v.p + 2.0 * Hpq * v.p * v.q + Hqq * v.q * v.q; };
  auto bisectors = [&](Vec2 u, Vec2& eta, Vec2& xi) {
    const Vec2 b1 = unit(u + vs), b2 = unit(u - vs);
    if (Q(b1) > 0.0) {
      eta = b1;
      xi = b2;
    } else {
      eta = b2;
      xi = b1;
    }
  };
  Vec2 eta, xi;
  bisectors(vu, eta, xi);
  if (vu_hint) {
    if (dot(vu, *vu_hint) < 0.0) vu = -vu;
  } else {
    const bool positive = xi.q > 0.0 || (xi.q == 0.0 && xi.p > 0.0);
    if (!positive) vu = -vu;
    if (sections.flip) vu = -vu;
  }
  bisectors(vu, eta, xi);
  ch.v_u = vu;
  ch.v_s = vs;
  const double rad = sections.rotate_deg * std::numbers::pi / 180.0;
  ch.e_eta = rotate(eta, rad);
  // The xi rays keep the same ratio of eigen-coordinates as the rotated eta
  // ray, so starts on all sections shift by one common time near C.
  const double det_uv = cross(vu, vs);
  const double al = cross(ch.e_eta, vs) / det_uv;
  const double be = cross(vu, ch.e_eta) / det_uv;
  Vec2 x = unit(al * vu - be * vs);
  if (dot(x, xi) < 0.0) x = -x;
  ch.e_xi = x;
  return ch;
}

double safeguarded_root(const std::function<double(double)>& f,
                        const std::function<double(double)>& df, double lo, double hi, double ftol) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw Error(ErrorKind::orbit, "root not bracketed on section ray");
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = f(x);
    if (std::abs(fx) <= ftol) return x;
    if ((fx > 0.0) == (fhi > 0.0)) {
      hi = x;
      fhi = fx;
    } else {
      lo = x;
      flo = fx;
    }
    const double d = df(x);
    double xn = d != 0.0 ? x - fx / d : 0.5 * (lo + hi);
    if (!(xn > std::min(lo, hi) && xn < std::max(lo, hi))) xn = 0.5 * (lo + hi);
    if (std::abs(hi - lo) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x)) return xn;
    x = xn;
  }
  return x;
}

}  // namespace

SaddleChart find_saddle(const SystemDef& sys, std::span<const double> z, Vec2 seed,
                        SectionConfig sections) {
  if (z.size() != sys.dim_z()) throw Error(ErrorKind::model, "z has the wrong dimension");
  const Vec2 c = newton_critical_point(sys, z.data(), seed);
  return build_chart(sys, z, c, sections, nullptr);
}

SaddleChart track_saddle(const SystemDef& sys, std::span<const double> z, const SaddleChart& prev) {
  const Vec2 c = newton_critical_point(sys, z.data(), prev.center());
  return build_chart(sys, z, c, prev.sections, &prev.v_u);
}

RayMinimum ray_minimum(const FrozenFields& ff, const SaddleChart& chart, Ray ray) {
  const Vec2 d = chart.direction(ray);
  const Vec2 c = chart.center();
  const Box& box = ff.system().box();
  auto E = [&](double s) {
    const Vec2 x = c + s * d;
    return ff.E(x.p, x.q);
  };
  auto inside = [&](double s) {
    const Vec2 x = c + s * d;
    return x.p >= box.p_lo && x.p <= box.p_hi && x.q >= box.q_lo && x.q <= box.q_hi;
  };
  double s = 1e-3 / std::max(1.0, chart.lambda);
  if (!(E(s) < 0.0)) throw Error(ErrorKind::topology, "E is not negative along the xi ray");
  while (inside(2.0 * s) && E(2.0 * s) < E(s)) s *= 2.0;
  if (!inside(2.0 * s)) throw Error(ErrorKind::topology, "no minimum of E along the xi ray inside the box");
  auto r = boost::math::tools::brent_find_minima(E, 0.5 * s, 2.0 * s, 52);
  return {r.first, r.second};
}

Vec2 section_point(const FrozenFields& ff, const SaddleChart& chart, Ray ray, double h) {
  const Vec2 d = chart.direction(ray);
  const Vec2 c = chart.center();
  const SystemDef& sys = ff.system();
  auto f = [&](double s) {
    const Vec2 x = c + s * d;
    return ff.E(x.p, x.q) - h;
  };
  auto df = [&](double s) {
    const Vec2 x = c + s * d;
    double Hp, Hq;
    sys.grad_pq(x.p, x.q, ff.z().data(), Hp, Hq);
    return Hp * d.p + Hq * d.q;
  };
  const double ftol = 1e-13 * std::min(1.0, std::abs(h));
  if (ray == Ray::eta_plus || ray == Ray::eta_minus) {
    if (!(h > 0.0)) throw Error(ErrorKind::orbit, "G3 orbits need h > 0");
    double hi = 1e-3;
    const Box& box = sys.box();
    for (int k = 0; k < 200 && f(hi) < 0.0; ++k) {
      hi *= 2.0;
      const Vec2 x = c + hi * d;
      if (x.p < box.p_lo || x.p > box.p_hi || x.q < box.q_lo || x.q > box.q_hi) {
        throw Error(ErrorKind::orbit, "h = " + std::to_string(h) + " is beyond the box on the eta ray");
      }
    }
    double lo = 0.0;
    return c + safeguarded_root(f, df, lo, hi, ftol) * d;
  }
  const RayMinimum m = ray_minimum(ff, chart, ray);
  if (!(h < 0.0 && h > m.E)) {
    throw Error(ErrorKind::orbit, "h = " + std::to_string(h) + " outside (" + std::to_string(m.E) +
                                      ", 0) for the loop domain");
  }
  return c + safeguarded_root(f, df, 0.0, m.s, ftol) * d;
}

void Orbit::state(double t, std::vector<double>& out) const {
  if (dense.empty()) throw Error(ErrorKind::orbit, "orbit was computed without dense output");
  auto it = std::upper_bound(dense.begin(), dense.end(), t,
                             [](double v, const ode::DenseSegment& s) { return v < s.t_new(); });
  if (it == dense.end()) --it;
  out.resize(it->dim());
  it->eval(t, out.data());
}

Vec2 Orbit::point(double t) const {
  std::vector<double> s;
  state(t, s);
  return {s[0], s[1]};
}

namespace {

enum class Closure { section_ray, normal_line };

struct OrbitRun {
  double T = 0.0;
  std::vector<double> end;
  std::vector<ode::DenseSegment> dense;
};

// Integrates the frozen flow with quadratures from x0 until the first
// return to the section with the starting crossing direction.
OrbitRun run_orbit(const FrozenFields& ff, const SaddleChart& chart, Vec2 x0, Closure closure,
                   Vec2 dir, double s_max, const OrbitOptions& opt) {
  const std::size_t k = ff.system().dim_z();
  const OrbitLayout L(k);
  ode::Dop853 solver(L.size(), make_orbit_rhs(ff, chart), {opt.rtol, opt.atol});
  std::vector<double> y0(L.size(), 0.0);
  y0[0] = x0.p;
  y0[1] = x0.q;
  solver.reset(0.0, y0, opt.t_cap);
  const Vec2 c = chart.center();
  const Vec2 anchor = closure == Closure::section_ray ? c : x0;
  Vec2 normal_dir = dir;
  if (closure == Closure::normal_line) {
    const auto f0 = solver.f();
    normal_dir = unit({-f0[1], f0[0]});  // perpendicular to the flow: line direction
  }
  auto g = [&](double, const double* y) { return cross(normal_dir, Vec2{y[0], y[1]} - anchor); };
  double sigma;
  {
    const auto f0 = solver.f();
    sigma = cross(normal_dir, Vec2{f0[0], f0[1]}) >= 0.0 ? 1.0 : -1.0;
  }
  const double radius = closure == Closure::normal_line ? 0.5 * norm(x0 - c) : 0.0;
  OrbitRun run;
  double g_old = 0.0;
  std::vector<double> yr(L.size());
  for (;;) {
    const auto status = solver.step();
    if (opt.keep_dense) run.dense.push_back(solver.segment());
    const double g_new = g(solver.t(), solver.y().data());
    if (g_old * sigma < 0.0 && g_new * sigma >= 0.0) {
      const double tr = ode::locate_root(solver, g, g_old, g_new);
      solver.dense(tr, yr.data());
      const Vec2 xr{yr[0], yr[1]};
      bool valid;
      if (closure == Closure::section_ray) {
        const double s = dot(dir, xr - c);
        valid = s > 0.0 && s < s_max;
      } else {
        valid = norm(xr - x0) < radius;
      }
      if (valid) {
        run.T = tr;
        run.end = yr;
        return run;
      }
    }
    g_old = g_new;
    if (status == ode::StepStatus::finished) {
      throw Error(ErrorKind::orbit, "orbit did not return to its section before t = " +
                                        std::to_string(opt.t_cap));
    }
    const double p = solver.y()[0], q = solver.y()[1];
    const Box& box = ff.system().box();
    if (!(p >= box.p_lo && p <= box.p_hi && q >= box.q_lo && q <= box.q_hi)) {
      throw Error(ErrorKind::out_of_box, "orbit left the phase-space box");
    }
  }
}

OrbitIntegrals unpack(const std::vector<double>& y, double T, std::size_t k) {
  const OrbitLayout L(k);
  OrbitIntegrals I;
  I.T = T;
  I.area = std::abs(y[L.area]);
  I.fh = y[L.fh];
  I.tfh = y[L.tfh];
  I.H = y[L.Eint];
  I.Fz.assign(y.begin() + L.Fz, y.begin() + L.Fz + k);
  I.tFz.assign(y.begin() + L.tFz, y.begin() + L.tFz + k);
  I.fz.assign(y.begin() + L.fz, y.begin() + L.fz + k);
  I.Ez.assign(y.begin() + L.Ez, y.begin() + L.Ez + k);
  return I;
}

}  // namespace

Orbit periodic_orbit(const FrozenFields& ff, const SaddleChart& chart, Domain domain, double h,
                     const OrbitOptions& opt, std::optional<Ray> ray_opt) {
  const Ray ray = ray_opt.value_or(default_ray(domain));
  const bool eta = ray == Ray::eta_plus || ray == Ray::eta_minus;
  if ((domain == Domain::G3) != eta) throw Error(ErrorKind::orbit, "section ray does not match domain");
  if (domain == Domain::G1 && ray != Ray::xi_minus) throw Error(ErrorKind::orbit, "G1 uses the xi- ray");
  if (domain == Domain::G2 && ray != Ray::xi_plus) throw Error(ErrorKind::orbit, "G2 uses the xi+ ray");
  const Vec2 x0 = section_point(ff, chart, ray, h);
  const Vec2 dir = chart.direction(ray);
  const double s_max = eta ? std::numeric_limits<double>::infinity() : ray_minimum(ff, chart, ray).s;
  OrbitRun run = run_orbit(ff, chart, x0, Closure::section_ray, dir, s_max, opt);
  Orbit o;
  o.domain = domain;
  o.ray = ray;
  o.h = h;
  o.start = x0;
  o.T = run.T;
  o.dim_z = ff.system().dim_z();
  o.integrals = unpack(run.end, run.T, o.dim_z);
  o.dense = std::move(run.dense);
  return o;
}

Orbit orbit_through(const FrozenFields& ff, const SaddleChart& chart, Vec2 x0,
                    const OrbitOptions& opt) {
  const double E = ff.E(x0.p, x0.q);
  OrbitRun run = run_orbit(ff, chart, x0, Closure::normal_line, {}, 0.0, opt);
  Orbit o;
  o.domain = E > 0.0 ? Domain::G3 : Domain::G2;
  o.h = E;
  o.start = x0;
  o.T = run.T;
  o.dim_z = ff.system().dim_z();
  o.integrals = unpack(run.end, run.T, o.dim_z);
  o.dense = std::move(run.dense);
  return o;
}

namespace {

Loop trace_loop(const SystemPtr& sys, const FrozenFields& ff, const SaddleChart& chart, Vec2 dir,
                double delta, Domain domain) {
  const std::size_t k = sys->dim_z();
  const OrbitLayout L(k);
  const Vec2 c = chart.center();
  // Start on the unstable manifold, then project onto E = 0 along grad E.
  Vec2 x = c + delta * dir;
  for (int it = 0; it < 8; ++it) {
    double Hp, Hq;
    sys->grad_pq(x.p, x.q, ff.z().data(), Hp, Hq);
    const double g2 = Hp * Hp + Hq * Hq;
    if (g2 == 0.0) break;
    const double e = ff.E(x.p, x.q);
    x = x - (e / g2) * Vec2{Hp, Hq};
  }
  ode::Dop853 solver(L.size(), make_orbit_rhs(ff, chart), {1e-13, 1e-15});
  std::vector<double> y0(L.size(), 0.0);
  y0[0] = x.p;
  y0[1] = x.q;
  const double t_cap = 1e4 / chart.lambda;
  solver.reset(0.0, y0, t_cap);
  Loop loop;
  loop.domain = domain;
  loop.r_exit = x - c;
  auto g = [&](double, const double* y) {
    const Vec2 r = Vec2{y[0], y[1]} - c;
    return dot(r, r) - delta * delta;
  };
  bool left = false;
  double g_old = g(0.0, y0.data());
  std::vector<double> yr(L.size());
  auto record = [&](double t, const double* y) {
    loop.t.push_back(t);
    loop.p.push_back(y[0]);
    loop.q.push_back(y[1]);
    loop.max_abs_E = std::max(loop.max_abs_E, std::abs(ff.E(y[0], y[1])));
  };
  record(0.0, y0.data());
  for (;;) {
    const auto status = solver.step();
    const double g_new = g(solver.t(), solver.y().data());
    if (left && g_new <= 0.0) {
      const double tr = ode::locate_root(solver, g, g_old, g_new);
      const double t0 = solver.t_old();
      for (int j = 1; j < 8; ++j) {
        const double tj = t0 + (tr - t0) * j / 8.0;
        if (tj < tr) {
          solver.dense(tj, yr.data());
          record(tj, yr.data());
        }
      }
      solver.dense(tr, yr.data());
      record(tr, yr.data());
      loop.duration = tr;
      loop.r_entry = Vec2{yr[0], yr[1]} - c;
      loop.area = std::abs(yr[L.area]);
      loop.fh = yr[L.fh];
      loop.Fz.assign(yr.begin() + L.Fz, yr.begin() + L.Fz + k);
      loop.Ez.assign(yr.begin() + L.Ez, yr.begin() + L.Ez + k);
      break;
    }
    if (!left && g_new > 3.0 * delta * delta) left = true;
    const double t0 = solver.t_old(), t1 = solver.t();
    for (int j = 1; j < 8; ++j) {
      solver.dense(t0 + (t1 - t0) * j / 8.0, yr.data());
      record(t0 + (t1 - t0) * j / 8.0, yr.data());
    }
    record(t1, solver.y().data());
    g_old = g_new;
    const Box& box = sys->box();
    const double p = solver.y()[0], q = solver.y()[1];
    if (status == ode::StepStatus::finished || !(p >= box.p_lo && p <= box.p_hi && q >= box.q_lo &&
                                                 q <= box.q_hi)) {
      throw Error(ErrorKind::topology,
                  "separatrix leaving along " + std::string(domain == Domain::G2 ? "+" : "-") +
                      "v_u does not return to the saddle (not a homoclinic loop)");
    }
  }
  // Linear tails inside the ball: integrand ~ grad g(C) . r with r = r0 exp(-+lambda t).
  const double hstep = delta;
  FieldSample sp, sm;
  auto grad_dot = [&](Vec2 r, auto getter, std::size_t j) {
    const Vec2 u = unit(r);
    ff.sample(c.p + hstep * u.p, c.q + hstep * u.q, sp);
    ff.sample(c.p - hstep * u.p, c.q - hstep * u.q, sm);
    return norm(r) * (getter(sp, j) - getter(sm, j)) / (2.0 * hstep);
  };
  auto fh_of = [](const FieldSample& s, std::size_t) { return s.f_h; };
  auto Fz_of = [](const FieldSample& s, std::size_t j) { return s.F_z[j]; };
  auto Ez_of = [](const FieldSample& s, std::size_t j) { return s.Ez[j]; };
  const double il = 1.0 / chart.lambda;
  loop.fh_tail = il * (grad_dot(loop.r_exit, fh_of, 0) + grad_dot(loop.r_entry, fh_of, 0));
  loop.Fz_tail.resize(k);
  loop.Ez_tail.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    loop.Fz_tail[j] = il * (grad_dot(loop.r_exit, Fz_of, j) + grad_dot(loop.r_entry, Fz_of, j));
    loop.Ez_tail[j] = il * (grad_dot(loop.r_exit, Ez_of, j) + grad_dot(loop.r_entry, Ez_of, j));
  }
  return loop;
}

}  // namespace

SeparatrixGeometry trace_separatrices(const SystemPtr& sys, const SaddleChart& chart,
                                      double delta_rel) {
  FrozenFields ff(sys, chart);
  SeparatrixGeometry geo;
  geo.chart = chart;
  const double s1 = ray_minimum(ff, chart, Ray::xi_plus).s;
  const double s2 = ray_minimum(ff, chart, Ray::xi_minus).s;
  geo.scale = std::max(s1, s2);
  geo.delta = delta_rel * geo.scale;
  geo.l2 = trace_loop(sys, ff, chart, chart.v_u, geo.delta, Domain::G2);
  geo.l1 = trace_loop(sys, ff, chart, -chart.v_u, geo.delta, Domain::G1);
  geo.S1 = geo.l1.area;
  geo.S2 = geo.l2.area;
  geo.S3 = geo.S1 + geo.S2;
  return geo;
}

namespace {

// Winding number of the closed polyline (loop samples closed through C).
int winding(const Loop& loop, Vec2 c, Vec2 x) {
  int w = 0;
  const std::size_t n = loop.p.size();
  auto vertex = [&](std::size_t i) { return i < n ? Vec2{loop.p[i], loop.q[i]} : c; };
  for (std::size_t i = 0; i <= n; ++i) {
    const Vec2 a = vertex(i);
    const Vec2 b = vertex(i == n ? 0 : i + 1);
    if (a.q <= x.q) {
      if (b.q > x.q && cross(b - a, x - a) > 0.0) ++w;
    } else if (b.q <= x.q && cross(b - a, x - a) < 0.0) {
      --w;
    }
  }
  return w;
}

}  // namespace

Classification classify(const SystemDef& sys, const SeparatrixGeometry& geo, double p, double q) {
  const double E = sys.H(p, q, geo.chart.z.data()) - geo.chart.h_C;
  if (std::abs(E) <= 1e-12) throw Error(ErrorKind::on_separatrix, "point lies on the separatrix");
  if (E > 0.0) return {Domain::G3, E};
  const Vec2 c = geo.chart.center();
  const Vec2 x{p, q};
  if (winding(geo.l2, c, x) != 0) return {Domain::G2, E};
  if (winding(geo.l1, c, x) != 0) return {Domain::G1, E};
  // Inside the ball the polylines are closed through C; fall back to the
  // side of the stable-unstable cross.
  const Vec2 r = x - c;
  return {dot(r, geo.chart.e_xi) >= 0.0 ? Domain::G2 : Domain::G1, E};
}

}  // namespace sepcross
