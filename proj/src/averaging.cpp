#include "sepcross/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/tools/roots.hpp>

#include "orbit_state.hpp"
#include "sepcross/error.hpp"

namespace sepcross {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sign_of(Domain d) { return d == Domain::G3 ? 1.0 : -1.0; }

OrbitOptions rhs_orbit_options() {
  OrbitOptions o;
  o.rtol = 1e-12;
  o.atol = 1e-14;
  return o;
}

double tail_integral(double a_d, double b, double x) {
  if (x <= 0.0) return 0.0;
  return -a_d * (x * std::log(x) - x) + b * x;
}

const ode::DenseSegment& segment_at(const std::vector<ode::DenseSegment>& segs, double s) {
  // Segments may run in either direction of s; they are contiguous.
  const bool up = segs.front().h > 0.0;
  std::size_t lo = 0, hi = segs.size();
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    const bool before = up ? s < segs[mid].t_old : s > segs[mid].t_old;
    if (before) hi = mid; else lo = mid;
  }
  return segs[lo];
}

struct TailParams {
  double a_d = 0.0, b = 0.0, Theta = 0.0;
  std::vector<double> A, fzC;
};

TailParams tail_params(const SystemPtr& sys, const SaddleChart& chart, Domain d, double x) {
  FrozenFields ff(sys, chart);
  const Orbit o = periodic_orbit(ff, chart, d, sign_of(d) * x, rhs_orbit_options());
  TailParams tp;
  tp.a_d = d == Domain::G3 ? 2.0 * chart.a : chart.a;
  tp.b = o.T + tp.a_d * std::log(x);
  tp.Theta = -o.integrals.fh;
  tp.A = o.integrals.Fz;
  tp.fzC = ff.f_zC();
  if (!(tp.Theta > 0.0)) {
    throw Error(ErrorKind::unsupported_regime,
                "averaged flow does not approach the separatrix in " + to_string(d));
  }
  return tp;
}

void set_tail(AveragedLeg& leg, const TailParams& tp, double tail_x) {
  leg.has_tail = true;
  leg.tail_x = tail_x;
  leg.tail_a = tp.a_d;
  leg.tail_b = tp.b;
  leg.tail_Theta = tp.Theta;
  leg.tail_A = tp.A;
  leg.tail_fzC = tp.fzC;
}

// Integrates (tau, z) in s = ln|h| from x0 to x1 within one domain.
std::vector<ode::DenseSegment> integrate_leg(const SystemPtr& sys, SaddleChart chart, Domain d,
                                             double x0, std::vector<double> y0, double x1,
                                             const AveragedOptions& opt,
                                             std::vector<double>& y_end, SaddleChart& chart_end) {
  const std::size_t k = sys->dim_z();
  const double sigma = sign_of(d);
  auto rhs = [&, k, sigma](double s, const double* y, double* dy) {
    std::vector<double> z(y + 1, y + 1 + k);
    chart = track_saddle(*sys, z, chart);
    const double h = sigma * std::exp(s);
    const AveragedRhs r = averaged_rhs(sys, chart, d, h);
    const double fh = r.fh;
    if (fh == 0.0) throw Error(ErrorKind::no_convergence, "averaged energy rate vanishes");
    dy[0] = h / fh;
    for (std::size_t j = 0; j < k; ++j) dy[1 + j] = h * r.fz[j] / fh;
  };
  ode::Options o;
  o.rtol = opt.rtol;
  o.atol = opt.atol;
  ode::Dop853 solver(1 + k, rhs, o);
  solver.reset(std::log(x0), y0, std::log(x1));
  std::vector<ode::DenseSegment> segs;
  while (solver.step() == ode::StepStatus::running) segs.push_back(solver.segment());
  segs.push_back(solver.segment());
  y_end.assign(solver.y().begin(), solver.y().end());
  chart_end = track_saddle(*sys, std::span<const double>(y_end.data() + 1, k), chart);
  return segs;
}

}  // namespace

AveragedRhs averaged_rhs(const SystemPtr& sys, const SaddleChart& chart, Domain d, double h) {
  if (sign_of(d) * h <= 0.0) {
    throw Error(ErrorKind::orbit, "h = " + std::to_string(h) + " has the wrong sign for " +
                                      to_string(d));
  }
  FrozenFields ff(sys, chart);
  const Orbit o = periodic_orbit(ff, chart, d, h, rhs_orbit_options());
  AveragedRhs r;
  r.T = o.T;
  r.fh = o.integrals.fh / o.T;
  r.Theta = -o.integrals.fh;
  r.fz.resize(o.integrals.fz.size());
  for (std::size_t j = 0; j < r.fz.size(); ++j) r.fz[j] = o.integrals.fz[j] / o.T;
  r.Fz_int = o.integrals.Fz;
  return r;
}

void AveragedLeg::at_x(double x, double& tau, std::vector<double>& z) const {
  const std::size_t k = z_star.size();
  z.resize(k);
  if (has_tail && x <= tail_x) {
    const double I = tail_integral(tail_a, tail_b, x);
    tau = tau_star + kappa() * I / tail_Theta;
    for (std::size_t j = 0; j < k; ++j) {
      z[j] = z_star[j] + kappa() * (tail_fzC[j] * I + tail_A[j] * x) / tail_Theta;
    }
    return;
  }
  if (segments.empty()) throw Error(ErrorKind::domain, "|h| outside the averaged leg");
  const double s = std::log(x);
  std::vector<double> y(1 + k);
  segment_at(segments, s).eval(s, y.data());
  tau = y[0];
  std::copy(y.begin() + 1, y.end(), z.begin());
}

double AveragedLeg::tau_at_x(double x) const {
  double tau;
  std::vector<double> z;
  at_x(x, tau, z);
  return tau;
}

std::vector<Domain> AveragedSolution::route() const {
  std::vector<Domain> r;
  for (const auto& l : legs_) r.push_back(l.domain);
  return r;
}

double AveragedSolution::tau_begin() const { return legs_.front().tau_at_x(legs_.front().x_from); }
double AveragedSolution::tau_end() const { return legs_.back().tau_at_x(legs_.back().x_to); }

void AveragedSolution::at_tau(double tau, double& h, std::vector<double>& z) const {
  for (const auto& leg : legs_) {
    const double t0 = leg.tau_at_x(leg.x_from), t1 = leg.tau_at_x(leg.x_to);
    if (tau < std::min(t0, t1) || tau > std::max(t0, t1)) continue;
    const double lo = std::min(leg.x_from, leg.x_to), hi = std::max(leg.x_from, leg.x_to);
    double x;
    if (lo == hi) {
      x = lo;
    } else {
      auto f = [&](double xx) { return leg.tau_at_x(xx) - tau; };
      double flo = f(lo), fhi = f(hi);
      if (flo == 0.0) {
        x = lo;
      } else if (fhi == 0.0) {
        x = hi;
      } else {
        std::uintmax_t it = 200;
        auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-15 * std::max(1e-300, std::abs(a)); };
        auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, it);
        x = 0.5 * (r.first + r.second);
      }
    }
    double tt;
    leg.at_x(x, tt, z);
    h = sign_of(leg.domain) * x;
    return;
  }
  throw Error(ErrorKind::domain, "tau = " + std::to_string(tau) + " outside the averaged solution");
}

double AveragedSolution::h_at_tau(double tau) const {
  double h;
  std::vector<double> z;
  at_tau(tau, h, z);
  return h;
}

double AveragedSolution::tau_at_h(double h) const {
  for (const auto& leg : legs_) {
    if (sign_of(leg.domain) * h < 0.0) continue;
    const double x = std::abs(h);
    if (x < std::min(leg.x_from, leg.x_to) || x > std::max(leg.x_from, leg.x_to)) continue;
    return leg.tau_at_x(x);
  }
  throw Error(ErrorKind::domain, "h = " + std::to_string(h) + " outside the averaged solution");
}

AveragedSolution solve_averaged(const SystemPtr& sys, const AveragedRequest& req,
                                const AveragedOptions& opt) {
  const std::size_t k = sys->dim_z();
  if (req.z0.size() != k) throw Error(ErrorKind::config, "initial z has the wrong dimension");
  if (req.h0 != 0.0 && sign_of(req.domain) * req.h0 < 0.0) {
    throw Error(ErrorKind::config, "initial h has the wrong sign for " + to_string(req.domain));
  }
  if (req.target) {
    if (req.domain != Domain::G3 || *req.target == Domain::G3) {
      throw Error(ErrorKind::config, "only passages from G3 into G1 or G2 are supported");
    }
    if (!req.h_end) throw Error(ErrorKind::config, "a continued route needs an end energy");
  }
  if (req.h_end && !req.target && sign_of(req.domain) * *req.h_end <= 0.0) {
    throw Error(ErrorKind::config, "end energy lies outside the starting domain");
  }
  if (req.target && sign_of(*req.target) * *req.h_end <= 0.0) {
    throw Error(ErrorKind::config, "end energy lies outside the target domain");
  }

  SaddleChart chart = find_saddle(*sys, req.z0, req.saddle_seed, req.sections);
  const double S3 = trace_separatrices(sys, chart).S3;
  const double tail_x = opt.h_tail_rel * S3;

  AveragedSolution sol;
  std::vector<double> y(1 + k);

  // First leg: from h0 either to h_end or to the separatrix.
  {
    AveragedLeg leg;
    leg.domain = req.domain;
    leg.x_from = std::abs(req.h0);
    const bool to_sep = req.target.has_value() || !req.h_end;
    leg.x_to = to_sep ? 0.0 : std::abs(*req.h_end);
    y[0] = req.tau0;
    std::copy(req.z0.begin(), req.z0.end(), y.begin() + 1);
    std::vector<double> y_end = y;
    SaddleChart chart_end = chart;
    const bool integrate = to_sep ? leg.x_from > tail_x : leg.x_from != leg.x_to;
    if (integrate) {
      leg.segments = integrate_leg(sys, chart, leg.domain, leg.x_from, y,
                                   to_sep ? tail_x : leg.x_to, opt, y_end, chart_end);
    }
    if (to_sep) {
      const double xt = std::min(tail_x, leg.x_from);
      const std::vector<double> zt(y_end.begin() + 1, y_end.end());
      if (xt > 0.0) {
        const TailParams tp = tail_params(sys, chart_end, leg.domain, xt);
        set_tail(leg, tp, xt);
        const double I = tail_integral(tp.a_d, tp.b, xt);
        leg.tau_star = y_end[0] - leg.kappa() * I / tp.Theta;
        leg.z_star.resize(k);
        for (std::size_t j = 0; j < k; ++j) {
          leg.z_star[j] = zt[j] - leg.kappa() * (tp.fzC[j] * I + tp.A[j] * xt) / tp.Theta;
        }
      } else {
        // Already on the separatrix.
        const TailParams tp = tail_params(sys, chart_end, leg.domain, tail_x);
        set_tail(leg, tp, 0.0);
        leg.tau_star = y_end[0];
        leg.z_star = zt;
      }
      sol.arrived_ = true;
      sol.tau_star_ = leg.tau_star;
      sol.z_star_ = leg.z_star;
      chart = track_saddle(*sys, sol.z_star_, chart_end);
    } else {
      leg.z_star = req.z0;  // sized for queries; no tail on this leg
    }
    sol.legs_.push_back(std::move(leg));
  }

  // Second leg: from the separatrix into the target domain.
  if (req.target) {
    AveragedLeg leg;
    leg.domain = *req.target;
    leg.x_from = 0.0;
    leg.x_to = std::abs(*req.h_end);
    leg.tau_star = sol.tau_star_;
    leg.z_star = sol.z_star_;
    const double xt = std::min(tail_x, leg.x_to);
    const TailParams tp = tail_params(sys, chart, leg.domain, xt);
    set_tail(leg, tp, xt);
    if (leg.x_to > xt) {
      double tau0;
      std::vector<double> z0;
      leg.at_x(xt, tau0, z0);
      y[0] = tau0;
      std::copy(z0.begin(), z0.end(), y.begin() + 1);
      std::vector<double> y_end;
      SaddleChart chart_end;
      const SaddleChart c0 = track_saddle(*sys, z0, chart);
      leg.segments = integrate_leg(sys, c0, leg.domain, xt, y, leg.x_to, opt, y_end, chart_end);
    }
    sol.legs_.push_back(std::move(leg));
  }
  return sol;
}

Correction first_order_correction(const SystemPtr& sys, const SaddleChart& chart, Domain d,
                                  double h, double phi) {
  FrozenFields ff(sys, chart);
  OrbitOptions oo = rhs_orbit_options();
  oo.keep_dense = true;
  const Orbit o = periodic_orbit(ff, chart, d, h, oo);
  const double T = o.T;
  double ph = std::fmod(phi, kTwoPi);
  if (ph < 0.0) ph += kTwoPi;
  const double t0 = ph / kTwoPi * T;
  std::vector<double> st;
  o.state(t0, st);
  // Kernel moved to start t0 using periodicity:
  //   int_0^T (s - T/2) f(t0 + s) ds = W - t0 F + T F(t0)
  // with W, F the section-based weighted and plain integrals and F(t0) the running one.
  const OrbitIntegrals& I = o.integrals;
  const OrbitLayout L(o.dim_z);
  Correction c;
  c.u_h = (I.tfh - 0.5 * T * I.fh - t0 * I.fh + T * st[L.fh]) / T;
  c.u_z.resize(o.dim_z);
  for (std::size_t j = 0; j < o.dim_z; ++j) {
    c.u_z[j] = (I.tFz[j] - 0.5 * T * I.Fz[j] - t0 * I.Fz[j] + T * st[L.Fz + j]) / T;
  }
  return c;
}

InvariantSample improved_invariant(const SystemPtr& sys, const SaddleChart& chart, double p,
                                   double q, double eps) {
  FrozenFields ff(sys, chart);
  const Orbit o = orbit_through(ff, chart, {p, q}, rhs_orbit_options());
  const OrbitIntegrals& I = o.integrals;
  InvariantSample r;
  r.T = o.T;
  r.S = I.area;
  r.u.u_h = (I.tfh - 0.5 * o.T * I.fh) / o.T;
  // dI/dz = -(1/2 pi) * integral of E_z over the orbit
  double corr = o.T * r.u.u_h;
  r.u.u_z.resize(o.dim_z);
  for (std::size_t j = 0; j < o.dim_z; ++j) {
    r.u.u_z[j] = (I.tFz[j] - 0.5 * o.T * I.Fz[j]) / o.T;
    corr += -I.Ez[j] * r.u.u_z[j];
  }
  r.I = r.S / kTwoPi;
  r.J = (r.S - eps * corr) / kTwoPi;
  return r;
}

}  // namespace sepcross
