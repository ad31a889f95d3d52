#include "sepcross/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <thread>

#include <boost/math/tools/minima.hpp>

#include "sepcross/error.hpp"
#include "sepcross/stats.hpp"

namespace sepcross {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_eta(Ray r) { return r == Ray::eta_plus || r == Ray::eta_minus; }

Domain domain_of(Ray r) {
  if (is_eta(r)) return Domain::G3;
  return r == default_ray(Domain::G1) ? Domain::G1 : Domain::G2;
}

std::string describe(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    return std::string(to_string(err->kind())) + ": " + err->what();
  }
  return e.what();
}

constexpr Ray kRays[4] = {Ray::eta_plus, Ray::eta_minus, Ray::xi_plus, Ray::xi_minus};

}  // namespace

std::vector<double> initial_state(const SystemPtr& sys, const SaddleChart& chart, Domain d,
                                  double h, double phi) {
  FrozenFields ff(sys, chart);
  OrbitOptions oo;
  oo.keep_dense = true;
  const Orbit o = periodic_orbit(ff, chart, d, h, oo);
  double ph = std::fmod(phi, kTwoPi);
  if (ph < 0.0) ph += kTwoPi;
  const Vec2 x = o.point(ph / kTwoPi * o.T);
  std::vector<double> y{x.p, x.q};
  y.insert(y.end(), chart.z.begin(), chart.z.end());
  return y;
}

TrajectoryRecord integrate_full(const SystemPtr& sys, const SaddleChart& chart0,
                                const std::vector<double>& y0, double eps,
                                const SimOptions& opt) {
  const std::size_t k = sys->dim_z();
  if (y0.size() != 2 + k) throw Error(ErrorKind::config, "initial state has the wrong dimension");
  const std::size_t n = 3 + k;
  const std::size_t iH = 2 + k;
  const Box& box = sys->box();
  if (!box.contains(y0[0], y0[1], y0.data() + 2)) {
    throw Error(ErrorKind::out_of_box, "initial state outside the box");
  }

  TrajectoryRecord rec;
  rec.model = sys->name();
  rec.eps = eps;
  rec.y0 = y0;

  auto rhs = [&sys, eps, iH](double, const double* y, double* dy) {
    sys->rhs(y, eps, dy);
    dy[iH] = sys->H(y[0], y[1], y + 2);
  };
  ode::Options oo;
  oo.rtol = opt.rtol;
  oo.atol = opt.atol;
  ode::Dop853 solver(n, rhs, oo);
  std::vector<double> y(n, 0.0);
  std::copy(y0.begin(), y0.end(), y.begin());
  solver.reset(0.0, y, opt.t_end);

  SaddleChart chart = track_saddle(*sys, std::span<const double>(y0.data() + 2, k), chart0);
  const bool moving = eps != 0.0 && k > 0;

  auto g_ray = [&chart](Ray r, const double* yy) {
    const Vec2 d = chart.direction(r);
    return cross(d, Vec2{yy[0] - chart.p_C, yy[1] - chart.q_C});
  };

  // Online capture bookkeeping for the stop rules.
  std::optional<Ray> cand_ray;
  int cand_rounds = 0;

  double next_sample = 0.0;
  std::vector<double> ys(n);
  auto sample_until = [&](double t_hi) {
    if (!(opt.sample_dt > 0.0)) return;
    while (next_sample <= t_hi) {
      solver.dense(next_sample, ys.data());
      const SaddleChart c = moving ? track_saddle(*sys, std::span<const double>(ys.data() + 2, k), chart) : chart;
      std::vector<double> row(ys.begin(), ys.begin() + 2 + k);
      row.push_back(sys->H(ys[0], ys[1], ys.data() + 2) - c.h_C);
      rec.sample_t.push_back(next_sample);
      rec.samples.push_back(std::move(row));
      next_sample += opt.sample_dt;
    }
  };
  if (opt.sample_dt > 0.0) {
    std::vector<double> row(y0.begin(), y0.end());
    row.push_back(sys->H(y0[0], y0[1], y0.data() + 2) - chart.h_C);
    rec.sample_t.push_back(0.0);
    rec.samples.push_back(std::move(row));
    next_sample = opt.sample_dt;
  }

  std::string reason = "t_end";
  bool stop = false;
  while (!stop) {
    const ode::StepStatus st = solver.step();
    ++rec.steps;
    const auto yn = solver.y();
    if (!box.contains(yn[0], yn[1], yn.data() + 2)) {
      throw Error(ErrorKind::out_of_box, "trajectory left the box at t = " + std::to_string(solver.t()));
    }
    if (moving) chart = track_saddle(*sys, std::span<const double>(yn.data() + 2, k), chart);
    sample_until(solver.t());

    std::vector<SectionEvent> found;
    for (Ray r : kRays) {
      const double g_old = g_ray(r, solver.y_old().data());
      const double g_new = g_ray(r, yn.data());
      if (g_old == 0.0 || ((g_old < 0.0) == (g_new < 0.0) && g_new != 0.0)) continue;
      const double tr = ode::locate_root(
          solver, [&](double, const double* yy) { return g_ray(r, yy); }, g_old, g_new);
      solver.dense(tr, ys.data());
      const SaddleChart ce =
          moving ? track_saddle(*sys, std::span<const double>(ys.data() + 2, k), chart) : chart;
      const Vec2 d = ce.direction(r);
      const double s = dot(d, Vec2{ys[0] - ce.p_C, ys[1] - ce.q_C});
      if (!(s > 0.0)) continue;
      if (!is_eta(r)) {
        FrozenFields ff(sys, ce);
        const double E = ff.E(ys[0], ys[1]);
        if (!(E < 0.0)) continue;
        if (!(s < ray_minimum(ff, ce, r).s)) continue;
      }
      SectionEvent ev;
      ev.t = tr;
      ev.ray = r;
      ev.p = ys[0];
      ev.q = ys[1];
      ev.z.assign(ys.begin() + 2, ys.begin() + 2 + k);
      ev.h_C = ce.h_C;
      ev.h = sys->H(ys[0], ys[1], ys.data() + 2) - ce.h_C;
      ev.Hint = ys[iH];
      found.push_back(std::move(ev));
    }
    std::sort(found.begin(), found.end(),
              [](const SectionEvent& a, const SectionEvent& b) { return a.t < b.t; });
    for (auto& ev : found) {
      if (is_eta(ev.ray)) {
        cand_ray.reset();
        cand_rounds = 0;
      } else if (!cand_ray) {
        cand_ray = ev.ray;
        cand_rounds = 0;
      } else if (ev.ray == *cand_ray) {
        ++cand_rounds;
      }
      const bool xi_stop = !is_eta(ev.ray) && opt.stop_h && ev.h <= *opt.stop_h;
      rec.events.push_back(std::move(ev));
      if (xi_stop) {
        reason = "window_end";
        stop = true;
        break;
      }
      if (opt.rounds_after_capture && cand_ray && cand_rounds >= 3 + *opt.rounds_after_capture) {
        reason = "captured";
        stop = true;
        break;
      }
    }
    if (st == ode::StepStatus::finished) break;
  }
  rec.termination = reason;
  rec.t_final = rec.events.empty() || reason == "t_end" ? solver.t() : rec.events.back().t;
  rec.y_final.assign(solver.y().begin(), solver.y().begin() + 2 + k);
  return rec;
}

CrossingRecord extract_crossing(const TrajectoryRecord& traj, const SeparatrixCoefficients& c,
                                double k) {
  const auto& ev = traj.events;
  std::optional<std::size_t> last_eta;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (is_eta(ev[i].ray)) last_eta = i;
  }
  if (!last_eta) throw Error(ErrorKind::not_captured, "no eta crossing recorded");
  std::optional<std::size_t> cand;
  for (std::size_t i = *last_eta + 1; i < ev.size(); ++i) {
    if (!is_eta(ev[i].ray)) {
      cand = i;
      break;
    }
  }
  if (!cand) throw Error(ErrorKind::not_captured, "trajectory did not leave G3");
  std::size_t same = 0;
  for (std::size_t i = *cand + 1; i < ev.size(); ++i) {
    if (ev[i].ray == ev[*cand].ray) ++same;
  }
  if (same < 3) throw Error(ErrorKind::not_captured, "capture not confirmed by three rounds");

  CrossingRecord cr;
  cr.target = domain_of(ev[*cand].ray);
  cr.ambiguous = false;
  for (std::size_t i = 0; i < *last_eta; ++i) {
    if (!is_eta(ev[i].ray)) cr.ambiguous = true;
  }
  const SectionEvent& e0 = ev[*last_eta];
  const SectionEvent& e1 = ev[*cand];
  cr.eta_index = *last_eta;
  cr.xi_index = *cand;
  cr.eta_ray = e0.ray;
  cr.t0 = e0.t;
  cr.h0 = e0.h;
  cr.z0 = e0.z;
  cr.t0p = e1.t;
  cr.h0p = e1.h;
  cr.z0p = e1.z;
  const double eps = traj.eps;
  const std::size_t ti = index_of(cr.target);
  cr.xi3 = cr.h0 / (eps * c.Theta[2]);
  cr.xi_i = -cr.h0p / (eps * c.Theta[ti]);
  const double w = k * std::sqrt(eps);
  cr.valid = cr.h0 > 0.0 && cr.xi3 >= w && cr.xi3 <= c.theta_i3(cr.target) - w;

  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i <= *last_eta; ++i) {
    if (ev[i].ray != Ray::eta_plus) continue;
    if (prev) cr.increments.push_back(ev[*prev].h - ev[i].h);
    prev = i;
  }
  return cr;
}

std::vector<Round> rounds_in_window(const TrajectoryRecord& traj, Ray ray, double h_lo,
                                    double h_hi) {
  std::vector<Round> out;
  const SectionEvent* prev = nullptr;
  for (const auto& e : traj.events) {
    if (e.ray != ray) continue;
    if (prev && prev->h >= h_lo && prev->h <= h_hi && e.h >= h_lo && e.h <= h_hi) {
      Round r;
      r.t_a = prev->t;
      r.t_b = e.t;
      r.h_avg = (e.Hint - prev->Hint) / (e.t - prev->t) - 0.5 * (e.h_C + prev->h_C);
      r.z_avg.resize(e.z.size());
      for (std::size_t j = 0; j < e.z.size(); ++j) r.z_avg[j] = 0.5 * (e.z[j] + prev->z[j]);
      out.push_back(std::move(r));
    }
    prev = &e;
  }
  return out;
}

TimeShift fit_time_shift(const std::vector<Round>& rounds, const AveragedSolution& avg,
                         double eps) {
  if (rounds.size() < 5) {
    throw Error(ErrorKind::window_too_short,
                "time-shift window has " + std::to_string(rounds.size()) + " rounds, need 5");
  }
  const double lo = avg.tau_begin() < avg.tau_end() ? avg.tau_begin() : avg.tau_end();
  const double hi = avg.tau_begin() < avg.tau_end() ? avg.tau_end() : avg.tau_begin();
  auto model = [&](const Round& r, double d) {
    const double a = eps * r.t_a + d, b = eps * r.t_b + d;
    if (a < lo || b > hi) return std::numeric_limits<double>::quiet_NaN();
    return (avg.h_at_tau(a) + 4.0 * avg.h_at_tau(0.5 * (a + b)) + avg.h_at_tau(b)) / 6.0;
  };
  auto cost = [&](double d) {
    double s = 0.0;
    for (const auto& r : rounds) {
      const double m = model(r, d);
      if (std::isnan(m)) return std::numeric_limits<double>::max();
      s += (r.h_avg - m) * (r.h_avg - m);
    }
    return s;
  };
  const Round& mid = rounds[rounds.size() / 2];
  const double d0 = avg.tau_at_h(mid.h_avg) - eps * 0.5 * (mid.t_a + mid.t_b);
  const double span = eps * (rounds.back().t_b - rounds.front().t_a);
  const double w = 0.25 * span + 50.0 * eps;
  auto br = boost::math::tools::brent_find_minima(cost, d0 - w, d0 + w, 40);
  double d = br.first;
  if (cost(d) == std::numeric_limits<double>::max()) {
    throw Error(ErrorKind::no_convergence, "time-shift window outside the averaged solution");
  }
  // Gauss-Newton polish.
  for (int it = 0; it < 4; ++it) {
    const double step = 1e-6;
    double num = 0.0, den = 0.0;
    for (const auto& r : rounds) {
      const double m = model(r, d);
      const double jp = (model(r, d + step) - model(r, d - step)) / (2.0 * step);
      num += jp * (r.h_avg - m);
      den += jp * jp;
    }
    if (den == 0.0) break;
    const double dd = num / den;
    if (std::isnan(dd)) break;
    d += dd;
    if (std::abs(dd) < 1e-13) break;
  }
  TimeShift ts;
  ts.delta = d;
  ts.rounds = rounds.size();
  ts.rms = std::sqrt(cost(d) / static_cast<double>(rounds.size()));
  return ts;
}

InvariantMeasurement measure_invariant(const SystemPtr& sys, const SaddleChart& chart_hint,
                                       const TrajectoryRecord& traj, Ray ray, double h_lo,
                                       double h_hi, double margin) {
  if (sys->mode() == Mode::generic) {
    throw Error(ErrorKind::config, "the improved invariant needs a Hamiltonian mode");
  }
  const auto rounds = rounds_in_window(traj, ray, h_lo, h_hi);
  if (rounds.empty()) throw Error(ErrorKind::window_too_short, "no complete round in the invariant window");
  const Domain dom = domain_of(ray);
  InvariantMeasurement m;
  m.t_a = rounds.front().t_a;
  m.t_b = rounds.back().t_b;
  std::vector<double> J, Iavg;
  SaddleChart chart = chart_hint;
  for (const auto& e : traj.events) {
    if (e.ray != ray || e.t < m.t_a || e.t > m.t_b) continue;
    if (std::abs(e.h) < margin) {
      throw Error(ErrorKind::measurement_suspect, "invariant window touches the separatrix margin");
    }
    chart = track_saddle(*sys, e.z, chart);
    J.push_back(improved_invariant(sys, chart, e.p, e.q, traj.eps).J);
  }
  for (const auto& r : rounds) {
    chart = track_saddle(*sys, r.z_avg, chart);
    FrozenFields ff(sys, chart);
    Iavg.push_back(periodic_orbit(ff, chart, dom, r.h_avg).integrals.area / kTwoPi);
  }
  m.n = J.size();
  m.J = stats::mean(J);
  m.J_scatter = stats::stddev(J);
  m.J_avg = stats::mean(Iavg);
  m.suspect = std::abs(m.J - m.J_avg) > 10.0 * traj.eps * traj.eps;
  return m;
}

std::vector<double> sweep_phases(std::size_t n, std::optional<std::uint64_t> seed) {
  std::vector<double> ph(n);
  if (seed) {
    std::mt19937_64 rng(*seed);
    std::uniform_real_distribution<double> u(0.0, kTwoPi);
    for (auto& p : ph) p = u(rng);
  } else {
    for (std::size_t i = 0; i < n; ++i) ph[i] = kTwoPi * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  }
  return ph;
}

std::vector<double> sweep_layer(std::size_t n, std::optional<std::uint64_t> seed) {
  std::vector<double> u(n);
  if (seed) {
    std::mt19937_64 rng(*seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (auto& x : u) x = d(rng);
  } else {
    const double g = 0.6180339887498949;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = 0.5 + g * static_cast<double>(i);
      u[i] = v - std::floor(v);
    }
  }
  return u;
}

unsigned worker_count() {
  if (const char* s = std::getenv("SEPCROSS_THREADS")) {
    const int v = std::atoi(s);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

SweepContext prepare_sweep(const SweepConfig& cfg) {
  if (!cfg.sys) throw Error(ErrorKind::config, "sweep without a model");
  if (!(cfg.eps > 0.0)) throw Error(ErrorKind::config, "eps must be positive");
  if (cfg.phases == 0) throw Error(ErrorKind::config, "phase grid is empty");
  SweepContext ctx;
  ctx.chart0 = find_saddle(*cfg.sys, cfg.z0, cfg.saddle_seed, cfg.sections);
  FrozenFields ff(cfg.sys, ctx.chart0);
  for (Domain d : {Domain::G1, Domain::G2}) {
    AveragedRequest req;
    req.domain = Domain::G3;
    req.h0 = cfg.h_init;
    req.z0 = cfg.z0;
    req.saddle_seed = cfg.saddle_seed;
    req.sections = cfg.sections;
    req.target = d;
    const double e_min = ray_minimum(ff, ctx.chart0, default_ray(d)).E;
    const double want = 1.2 * cfg.post_hi.value_or(0.05);
    req.h_end = -std::min(want, 0.8 * std::abs(e_min));
    ctx.avg_to[index_of(d)] = solve_averaged(cfg.sys, req);
  }
  if (cfg.energy_layer) {
    ctx.layer_width = cfg.eps * averaged_rhs(cfg.sys, ctx.chart0, Domain::G3, cfg.h_init).Theta;
  }
  ctx.tau_star = ctx.avg_to[1].tau_star();
  ctx.z_star = ctx.avg_to[1].z_star();
  const SaddleChart cs = track_saddle(*cfg.sys, ctx.z_star, ctx.chart0);
  ctx.coeffs = bundle(cfg.sys, cs, cfg.coeff);
  return ctx;
}

SweepRow run_one(const SweepConfig& cfg, const SweepContext& ctx, std::size_t id, double phi,
                 double layer) {
  SweepRow row;
  row.run_id = id;
  row.eps = cfg.eps;
  row.phi0 = phi;
  row.h_init = cfg.h_init + layer * ctx.layer_width;
  try {
    const auto y0 = initial_state(cfg.sys, ctx.chart0, Domain::G3, row.h_init, phi);
    SimOptions so = cfg.sim;
    if (cfg.post_hi) {
      so.stop_h = -*cfg.post_hi;
    } else {
      so.rounds_after_capture = 0;
    }
    const TrajectoryRecord traj = integrate_full(cfg.sys, ctx.chart0, y0, cfg.eps, so);
    const SeparatrixCoefficients& c = ctx.coeffs;
    const CrossingRecord cr = extract_crossing(traj, c, cfg.k_window);
    row.target = to_string(cr.target);
    row.ambiguous = cr.ambiguous;
    row.h0 = cr.h0;
    row.h0p = cr.h0p;
    row.t0 = cr.t0;
    row.t0p = cr.t0p;
    row.z0 = cr.z0;
    row.z0p = cr.z0p;
    row.xi3 = cr.xi3;
    row.xi_i = cr.xi_i;
    row.valid = cr.valid;
    for (std::size_t i = cr.eta_index + 1; i-- > 0;) {
      if (traj.events[i].ray == Ray::eta_plus) {
        row.xi3_eta_plus = traj.events[i].h / (cfg.eps * c.Theta[2]);
        break;
      }
    }
    const std::size_t ti = index_of(cr.target);
    const PseudoPhase pp = pseudo_phase_from_xi(cr.xi_i, cfg.eps, c, cr.target, cfg.k_window);
    const JumpPrediction jp = jump_slow(c, pp, true);
    row.predicted_dtau = jp.dtau.total();
    if (cfg.post_hi && cfg.post_lo) {
      const Ray post_ray = default_ray(cr.target);
      if (cfg.time_shift) {
        const auto pre = rounds_in_window(traj, Ray::eta_plus, cfg.pre_lo, cfg.pre_hi);
        const auto post = rounds_in_window(traj, post_ray, -*cfg.post_hi, -*cfg.post_lo);
        row.delta_minus = fit_time_shift(pre, ctx.avg_to[ti], cfg.eps).delta;
        row.delta_plus = fit_time_shift(post, ctx.avg_to[ti], cfg.eps).delta;
        row.measured_dtau = row.delta_minus - row.delta_plus;
      }
      if (cfg.invariant) {
        const InvariantMode mode = cfg.sys->mode() == Mode::slow_fast ? InvariantMode::slow_fast
                                                                      : InvariantMode::time_dependent;
        const auto jm = measure_invariant(cfg.sys, ctx.chart0, traj, Ray::eta_plus, cfg.pre_lo, cfg.pre_hi);
        const auto jpl = measure_invariant(cfg.sys, ctx.chart0, traj, post_ray, -*cfg.post_hi, -*cfg.post_lo);
        row.J_minus = jm.J;
        row.J_plus = jpl.J;
        const InvariantJump ij = invariant_jump(c, pp, jm.J, mode, true);
        row.predicted_J_plus = ij.two_pi_J_plus / kTwoPi;
        row.baseline_J_plus = ij.S_i_hat / kTwoPi;
      }
    }
  } catch (const std::exception& e) {
    row.error = describe(e);
  }
  return row;
}

SweepResult run_sweep(const SweepConfig& cfg) {
  SweepResult res;
  res.context = prepare_sweep(cfg);
  res.phases = sweep_phases(cfg.phases, cfg.seed);
  if (cfg.energy_layer) res.layer = sweep_layer(cfg.phases, cfg.seed);
  res.rows.resize(res.phases.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < res.phases.size(); i = next++) {
      res.rows[i] = run_one(cfg, res.context, i, res.phases[i], res.layer.empty() ? 0.0 : res.layer[i]);
    }
  };
  const unsigned nt = std::min<unsigned>(worker_count(), static_cast<unsigned>(res.phases.size()));
  if (nt <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nt; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return res;
}

nlohmann::json CaptureStats::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["captured"] = captured;
  j["ambiguous"] = ambiguous;
  j["invalid_window"] = invalid_window;
  j["invalid_window_fraction"] = n ? static_cast<double>(invalid_window) / static_cast<double>(n) : 0.0;
  j["errors"] = errors;
  for (int i = 0; i < 2; ++i) {
    const std::string key = i == 0 ? "G1" : "G2";
    j["domains"][key] = {{"count", count[i]},       {"fraction", fraction[i]},
                         {"ci95", {ci_lo[i], ci_hi[i]}}, {"theta_i3", theta_i3[i]}};
  }
  j["ks"] = {{"D", ks_D}, {"p", ks_p}, {"n", xi3.size()}};
  return j;
}

CaptureStats capture_fractions(const SweepResult& sweep) {
  const auto& c = sweep.context.coeffs;
  if (!(c.Theta[0] > 0.0 && c.Theta[1] > 0.0)) {
    throw Error(ErrorKind::unsupported_regime, "capture statistics need Theta_1, Theta_2 > 0");
  }
  CaptureStats s;
  s.n = sweep.rows.size();
  for (const auto& r : sweep.rows) {
    if (!r.error.empty()) {
      ++s.errors;
      continue;
    }
    if (r.ambiguous) {
      ++s.ambiguous;
      continue;
    }
    ++s.captured;
    if (!r.valid) ++s.invalid_window;
    ++s.count[r.target == "G1" ? 0 : 1];
    if (!std::isnan(r.xi3_eta_plus)) s.xi3.push_back(r.xi3_eta_plus);
  }
  for (int i = 0; i < 2; ++i) {
    s.theta_i3[i] = c.Theta[i] / c.Theta[2];
    if (s.captured) {
      s.fraction[i] = static_cast<double>(s.count[i]) / static_cast<double>(s.captured);
      std::tie(s.ci_lo[i], s.ci_hi[i]) = stats::wilson_interval(s.count[i], s.captured);
    }
  }
  if (!s.xi3.empty()) {
    const auto ks = stats::ks_uniform(s.xi3);
    s.ks_D = ks.D;
    s.ks_p = ks.p;
  }
  return s;
}

}  // namespace sepcross
