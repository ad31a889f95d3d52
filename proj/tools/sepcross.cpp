// sepcross: coefficients, predictions and crossing simulations for model files.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sepcross/averaging.hpp"
#include "sepcross/coeffs.hpp"
#include "sepcross/error.hpp"
#include "sepcross/jump.hpp"
#include "sepcross/model_file.hpp"
#include "sepcross/portrait.hpp"
#include "sepcross/report_io.hpp"
#include "sepcross/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sepcross;

namespace {

struct Args {
  std::string command;
  std::string model;
  std::vector<double> z;
  std::vector<double> eps;
  std::size_t phases = 0;
  std::uint64_t seed = 0;
  std::string out = ".";
  double k_window = 0.0;
  double tol_rel = 0.0, tol_abs = 0.0;
  bool flip = false;
  double rotate_deg = 0.0;
  double h_init = 0.0;
  std::vector<double> pre_window, post_window;
  // predict
  std::vector<double> xi;
  std::vector<double> h0;
  std::string target;
  double J_minus = 0.0;
  // simulate
  double phi = 0.0;
  std::map<std::string, const CLI::Option*> given;

  bool has(const std::string& name) const {
    auto it = given.find(name);
    return it != given.end() && it->second->count() > 0;
  }
};

void add_common(CLI::App* sub, Args& a) {
  auto reg = [&](const std::string& key, CLI::Option* o) { a.given[sub->get_name() + key] = o; };
  sub->add_option("--model", a.model, "model file (TOML)")->required();
  reg("z", sub->add_option("--z", a.z, "slow variables (initial, or z_* for predict)"));
  reg("eps", sub->add_option("--eps", a.eps, "perturbation size, repeatable"));
  reg("k", sub->add_option("--k-window", a.k_window, "pseudo-phase window constant"));
  reg("flip", sub->add_flag("--flip-sections", a.flip, "exchange the roles of the two loops"));
  reg("rotate", sub->add_option("--rotate-sections", a.rotate_deg, "rotate section rays (degrees)"));
  reg("h", sub->add_option("--h-init", a.h_init, "initial energy above the separatrix"));
  sub->add_option("--out", a.out, "output directory")->capture_default_str();
}

void add_sim(CLI::App* sub, Args& a) {
  auto reg = [&](const std::string& key, CLI::Option* o) { a.given[sub->get_name() + key] = o; };
  reg("tr", sub->add_option("--tol-rel", a.tol_rel, "relative integration tolerance"));
  reg("ta", sub->add_option("--tol-abs", a.tol_abs, "absolute integration tolerance"));
  reg("pre", sub->add_option("--pre-window", a.pre_window, "G3 window [h_lo h_hi]")->expected(2));
  reg("post", sub->add_option("--post-window", a.post_window, "target window [-h_hi -h_lo] as positive numbers")->expected(2));
}

void add_sweep(CLI::App* sub, Args& a) {
  auto reg = [&](const std::string& key, CLI::Option* o) { a.given[sub->get_name() + key] = o; };
  reg("phases", sub->add_option("--phases", a.phases, "number of initial phases"));
  reg("seed", sub->add_option("--seed", a.seed, "random phases from this seed"));
}

// Applies command-line overrides to the file's run defaults.
void apply_overrides(const Args& a, ModelFile& mf) {
  const std::string& c = a.command;
  RunDefaults& r = mf.run;
  if (a.has(c + "z")) {
    if (a.z.size() != mf.sys->dim_z()) {
      throw Error(ErrorKind::config, "--z needs " + std::to_string(mf.sys->dim_z()) + " values");
    }
    r.z0 = a.z;
  }
  if (a.has(c + "eps")) r.eps = a.eps;
  for (double e : r.eps) {
    if (!(e > 0.0)) throw Error(ErrorKind::config, "--eps values must be positive");
  }
  if (a.has(c + "k")) r.k_window = a.k_window;
  if (a.has(c + "flip")) mf.sections.flip = a.flip;
  if (a.has(c + "rotate")) mf.sections.rotate_deg = a.rotate_deg;
  if (a.has(c + "h")) {
    if (!(a.h_init > 0.0)) throw Error(ErrorKind::config, "--h-init must be positive");
    r.h_init = a.h_init;
  }
  if (a.has(c + "tr")) r.rtol = a.tol_rel;
  if (a.has(c + "ta")) r.atol = a.tol_abs;
  if (!(r.rtol > 0.0 && r.atol > 0.0)) throw Error(ErrorKind::config, "tolerances must be positive");
  if (a.has(c + "pre")) {
    if (!(a.pre_window[0] >= 0.0 && a.pre_window[0] < a.pre_window[1])) {
      throw Error(ErrorKind::config, "--pre-window needs 0 <= lo < hi");
    }
    r.pre_lo = a.pre_window[0];
    r.pre_hi = a.pre_window[1];
  }
  if (a.has(c + "post")) {
    if (!(a.post_window[0] >= 0.0 && a.post_window[0] < a.post_window[1])) {
      throw Error(ErrorKind::config, "--post-window needs 0 <= lo < hi");
    }
    r.post_lo = a.post_window[0];
    r.post_hi = a.post_window[1];
  }
  if (a.has(c + "phases")) {
    if (a.phases == 0) throw Error(ErrorKind::config, "--phases must be positive");
    r.phases = a.phases;
  }
  if (a.has(c + "seed")) r.seed = a.seed;
}

json header(const Args& a, const ModelFile& mf) {
  json j;
  j["version"] = io::version();
  j["command"] = a.command;
  j["config"] = mf.resolved();
  return j;
}

SimOptions sim_options(const RunDefaults& r) {
  SimOptions so;
  so.rtol = r.rtol;
  so.atol = r.atol;
  so.t_end = r.t_end;
  return so;
}

SweepConfig sweep_config(const ModelFile& mf, double eps) {
  SweepConfig cfg;
  cfg.sys = mf.sys;
  cfg.z0 = mf.run.z0;
  cfg.saddle_seed = mf.saddle_seed;
  cfg.sections = mf.sections;
  cfg.eps = eps;
  cfg.h_init = mf.run.h_init;
  cfg.phases = mf.run.phases;
  cfg.seed = mf.run.seed;
  cfg.k_window = mf.run.k_window;
  cfg.pre_lo = mf.run.pre_lo;
  cfg.pre_hi = mf.run.pre_hi;
  cfg.post_lo = mf.run.post_lo;
  cfg.post_hi = mf.run.post_hi;
  cfg.invariant = mf.sys->mode() != Mode::generic;
  cfg.sim = sim_options(mf.run);
  return cfg;
}

Domain parse_target(const std::string& s) {
  if (s == "G1") return Domain::G1;
  if (s == "G2") return Domain::G2;
  throw Error(ErrorKind::config, "--target must be G1 or G2, got '" + s + "'");
}

void say(const fs::path& p) { std::printf("wrote %s\n", p.string().c_str()); }

int cmd_portrait(const Args& a, const ModelFile& mf) {
  const SaddleChart chart = find_saddle(*mf.sys, mf.run.z0, mf.saddle_seed, mf.sections);
  const SeparatrixGeometry geo = trace_separatrices(mf.sys, chart);
  json j = header(a, mf);
  j["portrait"] = io::portrait_json(geo);
  const fs::path p = fs::path(a.out) / "portrait.json";
  io::write_file(p, io::dump(j));
  say(p);
  return 0;
}

int cmd_coeffs(const Args& a, const ModelFile& mf) {
  const SeparatrixCoefficients c = bundle(mf.sys, mf.run.z0, mf.saddle_seed, mf.sections);
  json j = header(a, mf);
  j["coeffs"] = c.to_json();
  const fs::path p = fs::path(a.out) / "coeffs.json";
  io::write_file(p, io::dump(j));
  say(p);
  return 0;
}

int cmd_predict(const Args& a, const ModelFile& mf) {
  json j = header(a, mf);
  std::vector<double> z_star = mf.run.z0;
  const bool explicit_point = a.has("predictxi") || a.has("predicth0");
  if (!explicit_point) {
    // z is the initial point: carry it to the separatrix first.
    AveragedRequest req;
    req.domain = Domain::G3;
    req.h0 = mf.run.h_init;
    req.z0 = mf.run.z0;
    req.saddle_seed = mf.saddle_seed;
    req.sections = mf.sections;
    const AveragedSolution avg = solve_averaged(mf.sys, req);
    z_star = avg.z_star();
    j["tau_star"] = avg.tau_star();
  }
  j["z_star"] = z_star;
  const SeparatrixCoefficients c = bundle(mf.sys, z_star, mf.saddle_seed, mf.sections);
  j["coeffs"] = {{"a", c.a}, {"b", c.b}, {"Theta", c.Theta}, {"d", c.d}, {"d3_mirror", c.d3_mirror},
                 {"A", c.A}, {"S", c.S}, {"f_zC", c.f_zC}, {"theta_13", c.theta_i3(Domain::G1)},
                 {"theta_23", c.theta_i3(Domain::G2)}};
  std::vector<Domain> targets{Domain::G1, Domain::G2};
  if (!a.target.empty()) targets = {parse_target(a.target)};
  std::vector<double> xis = a.xi;
  if (!explicit_point) {
    for (int k = 1; k <= 9; ++k) xis.push_back(0.1 * k);
  }
  const bool with_J = a.has("predictJ");
  if (with_J && mf.sys->mode() == Mode::generic) {
    throw Error(ErrorKind::config, "--J-minus needs a Hamiltonian or slow-fast model");
  }
  const InvariantMode mode =
      mf.sys->mode() == Mode::slow_fast ? InvariantMode::slow_fast : InvariantMode::time_dependent;
  json preds = json::array();
  for (double eps : mf.run.eps) {
    for (Domain t : targets) {
      std::vector<PseudoPhase> pps;
      for (double xi : xis) pps.push_back(pseudo_phase_from_xi(xi, eps, c, t, mf.run.k_window));
      for (double h0 : a.h0) pps.push_back(pseudo_phase(h0, eps, c, t, mf.run.k_window));
      for (const PseudoPhase& pp : pps) {
        json row;
        row["eps"] = eps;
        row["xi3"] = pp.xi3;
        row["h0"] = pp.h0;
        row["jump"] = jump_slow(c, pp, true).to_json();
        if (with_J) {
          const InvariantJump ij = invariant_jump(c, pp, a.J_minus, mode, true);
          row["invariant"] = {{"J_minus", a.J_minus},
                              {"two_pi_J_plus", ij.two_pi_J_plus},
                              {"S_i_hat", ij.S_i_hat},
                              {"bracket", ij.bracket},
                              {"bracket_term", ij.bracket_term},
                              {"terms", {{"log", ij.terms.log},
                                         {"gamma", ij.terms.gamma},
                                         {"b", ij.terms.b},
                                         {"d", ij.terms.d}}}};
        }
        preds.push_back(row);
      }
    }
  }
  j["predictions"] = preds;
  const fs::path p = fs::path(a.out) / "predict.json";
  io::write_file(p, io::dump(j));
  say(p);
  return 0;
}

int cmd_simulate(const Args& a, const ModelFile& mf) {
  const double eps = mf.run.eps.front();
  const SaddleChart chart = find_saddle(*mf.sys, mf.run.z0, mf.saddle_seed, mf.sections);
  const auto y0 = initial_state(mf.sys, chart, Domain::G3, mf.run.h_init, a.phi);
  SimOptions so = sim_options(mf.run);
  if (mf.run.post_hi) {
    so.stop_h = -*mf.run.post_hi;
  } else {
    so.rounds_after_capture = 3;
  }
  const TrajectoryRecord traj = integrate_full(mf.sys, chart, y0, eps, so);
  json j = header(a, mf);
  j["eps"] = eps;
  j["phi0"] = a.phi;
  j["trajectory"] = io::trajectory_json(traj);
  try {
    AveragedRequest req;
    req.domain = Domain::G3;
    req.h0 = mf.run.h_init;
    req.z0 = mf.run.z0;
    req.saddle_seed = mf.saddle_seed;
    req.sections = mf.sections;
    const AveragedSolution avg = solve_averaged(mf.sys, req);
    const SaddleChart cs = track_saddle(*mf.sys, avg.z_star(), chart);
    const SeparatrixCoefficients c = bundle(mf.sys, cs);
    const CrossingRecord cr = extract_crossing(traj, c, mf.run.k_window);
    j["crossing"] = io::crossing_json(cr);
    const PseudoPhase pp = pseudo_phase_from_xi(cr.xi_i, eps, c, cr.target, mf.run.k_window);
    j["prediction"] = jump_slow(c, pp, true).to_json();
  } catch (const Error& e) {
    j["crossing"] = {{"error", std::string(to_string(e.kind())) + ": " + e.what()}};
  }
  const fs::path pj = fs::path(a.out) / "trajectory.json";
  const fs::path pc = fs::path(a.out) / "events.csv";
  io::write_file(pj, io::dump(j));
  io::write_file(pc, io::events_csv(traj, mf.sys->z_names()));
  say(pj);
  say(pc);
  return 0;
}

int cmd_sweep(const Args& a, const ModelFile& mf, bool capture) {
  json j = header(a, mf);
  std::vector<SweepRow> all;
  json per_eps = json::array();
  for (double eps : mf.run.eps) {
    SweepConfig cfg = sweep_config(mf, eps);
    if (capture) {
      cfg.post_lo.reset();
      cfg.post_hi.reset();
      cfg.time_shift = false;
      cfg.invariant = false;
      cfg.energy_layer = true;
    }
    const SweepResult res = run_sweep(cfg);
    json e;
    e["eps"] = eps;
    e["phases"] = res.phases;
    if (!res.layer.empty()) e["layer"] = res.layer;
    e["context"] = io::sweep_context_json(res.context);
    if (capture) e["statistics"] = capture_fractions(res).to_json();
    per_eps.push_back(e);
    // Run ids continue across eps values.
    for (SweepRow r : res.rows) {
      r.run_id = all.size();
      all.push_back(r);
    }
  }
  j["seed"] = mf.run.seed ? json(*mf.run.seed) : json(nullptr);
  j["columns"] = io::sweep_columns(mf.sys->z_names());
  j["runs"] = per_eps;
  const std::string stem = capture ? "capture" : "sweep";
  const fs::path pc = fs::path(a.out) / (stem + ".csv");
  const fs::path pj = fs::path(a.out) / (stem + ".json");
  io::write_file(pc, io::sweep_csv(all, mf.sys->z_names()));
  io::write_file(pj, io::dump(j));
  say(pc);
  say(pj);
  return 0;
}

int fail(ErrorKind kind, const std::string& msg, int code) {
  std::cerr << io::error_json(kind, msg).dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Separatrix crossing coefficients, predictions and simulations"};
  app.set_version_flag("--version", io::version());
  app.require_subcommand(1);
  Args a;

  auto* portrait = app.add_subcommand("portrait", "saddle chart, loops and areas");
  add_common(portrait, a);

  auto* coeffs = app.add_subcommand("coeffs", "separatrix coefficient bundle");
  add_common(coeffs, a);

  auto* predict = app.add_subcommand("predict", "jump predictions at a crossing");
  add_common(predict, a);
  a.given["predictxi"] = predict->add_option("--xi", a.xi, "target pseudo-phase, repeatable; --z is then z_*");
  a.given["predicth0"] = predict->add_option("--h0", a.h0, "energy at the last G3 section crossing, repeatable");
  predict->add_option("--target", a.target, "G1 or G2 (default both)");
  a.given["predictJ"] = predict->add_option("--J-minus", a.J_minus, "incoming improved invariant");

  auto* simulate = app.add_subcommand("simulate", "one full trajectory through the crossing");
  add_common(simulate, a);
  add_sim(simulate, a);
  simulate->add_option("--phi", a.phi, "initial phase")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "phase sweep with measured and predicted jumps");
  add_common(sweep, a);
  add_sim(sweep, a);
  add_sweep(sweep, a);

  auto* capture = app.add_subcommand("capture", "capture statistics over random phases");
  add_common(capture, a);
  add_sim(capture, a);
  add_sweep(capture, a);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(ErrorKind::config, e.what(), 2);
  }

  for (auto* sub : app.get_subcommands()) a.command = sub->get_name();
  try {
    ModelFile mf = load_model_file(a.model);
    apply_overrides(a, mf);
    if (a.command == "capture" && !mf.run.seed) mf.run.seed = 1;
    if (a.command == "portrait") return cmd_portrait(a, mf);
    if (a.command == "coeffs") return cmd_coeffs(a, mf);
    if (a.command == "predict") return cmd_predict(a, mf);
    if (a.command == "simulate") return cmd_simulate(a, mf);
    if (a.command == "sweep") return cmd_sweep(a, mf, false);
    return cmd_sweep(a, mf, true);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), e.kind() == ErrorKind::config ? 2 : 1);
  } catch (const std::exception& e) {
    return fail(ErrorKind::integration, e.what(), 1);
  }
}
