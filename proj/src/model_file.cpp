#include "sepcross/model_file.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "toml.hpp"

#include "sepcross/error.hpp"

namespace sepcross {

namespace {

[[noreturn]] void fail(const std::string& label, const std::string& msg) {
  throw Error(ErrorKind::config, label + ": " + msg);
}

void reject_unknown(const toml::table& t, const std::set<std::string>& known,
                    const std::string& label, const std::string& where) {
  for (const auto& [k, v] : t) {
    if (!known.count(std::string(k.str()))) {
      fail(label, "unknown key '" + std::string(k.str()) + "' in [" + where + "]");
    }
  }
}

double number(const toml::node& n, const std::string& label, const std::string& key) {
  if (auto v = n.value<double>()) return *v;
  fail(label, "'" + key + "' must be a number");
}

std::vector<double> numbers(const toml::node& n, const std::string& label, const std::string& key) {
  std::vector<double> out;
  if (const auto* a = n.as_array()) {
    for (const auto& e : *a) out.push_back(number(e, label, key));
    return out;
  }
  out.push_back(number(n, label, key));
  return out;
}

std::pair<double, double> interval(const toml::node& n, const std::string& label,
                                   const std::string& key) {
  const auto v = numbers(n, label, key);
  if (v.size() != 2 || !(v[0] < v[1])) fail(label, "'" + key + "' must be [lo, hi] with lo < hi");
  return {v[0], v[1]};
}

std::string text(const toml::node& n, const std::string& label, const std::string& key) {
  if (auto v = n.value<std::string>()) return *v;
  fail(label, "'" + key + "' must be a string");
}

std::vector<std::string> texts(const toml::node& n, const std::string& label, const std::string& key) {
  std::vector<std::string> out;
  if (const auto* a = n.as_array()) {
    for (const auto& e : *a) out.push_back(text(e, label, key));
    return out;
  }
  out.push_back(text(n, label, key));
  return out;
}

const toml::table* subtable(const toml::table& root, const char* name, const std::string& label) {
  const auto* n = root.get(name);
  if (!n) return nullptr;
  const auto* t = n->as_table();
  if (!t) fail(label, std::string("[") + name + "] must be a table");
  return t;
}

}  // namespace

ModelFile parse_model_file(std::string_view src, const std::string& label) {
  toml::table root;
  try {
    root = toml::parse(src, label);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << e.description() << " at line " << e.source().begin.line;
    fail(label, os.str());
  }
  reject_unknown(root, {"model", "params", "box", "saddle", "sections", "run"}, label, "top level");

  ModelFile mf;
  mf.path = label;
  ModelConfig& mc = mf.model;

  const auto* model = subtable(root, "model", label);
  if (!model) fail(label, "missing [model] table");
  reject_unknown(*model, {"name", "catalog", "mode", "z", "H", "f_p", "f_q", "f_z"}, label, "model");
  if (const auto* n = model->get("name")) mc.name = text(*n, label, "name");
  if (const auto* n = model->get("catalog")) mc.catalog = text(*n, label, "catalog");
  if (const auto* n = model->get("mode")) {
    try {
      mc.mode = mode_from_string(text(*n, label, "mode"));
    } catch (const Error& e) {
      fail(label, e.what());
    }
  }
  if (const auto* n = model->get("z")) mc.z_names = texts(*n, label, "z");
  if (const auto* n = model->get("H")) mc.H = text(*n, label, "H");
  if (const auto* n = model->get("f_p")) mc.f_p = text(*n, label, "f_p");
  if (const auto* n = model->get("f_q")) mc.f_q = text(*n, label, "f_q");
  if (const auto* n = model->get("f_z")) mc.f_z = texts(*n, label, "f_z");
  if (mc.catalog.empty() && mc.H.empty()) fail(label, "[model] needs either catalog or H");
  if (!mc.catalog.empty() && !mc.H.empty()) fail(label, "[model] has both catalog and H");

  if (const auto* params = subtable(root, "params", label)) {
    for (const auto& [k, v] : *params) mc.params[std::string(k.str())] = number(v, label, std::string(k.str()));
  }

  if (const auto* box = subtable(root, "box", label)) {
    reject_unknown(*box, {"p", "q", "z"}, label, "box");
    mc.has_box = true;
    if (const auto* n = box->get("p")) std::tie(mc.box.p_lo, mc.box.p_hi) = interval(*n, label, "box.p");
    if (const auto* n = box->get("q")) std::tie(mc.box.q_lo, mc.box.q_hi) = interval(*n, label, "box.q");
    if (const auto* n = box->get("z")) {
      const auto* a = n->as_array();
      if (!a) fail(label, "'box.z' must be an array of [lo, hi] pairs");
      for (const auto& e : *a) mc.box.z.push_back(interval(e, label, "box.z"));
    }
  }

  try {
    if (mc.has_box && mc.box.z.empty()) {
      // z intervals default to the model's own when only p, q are given.
      ModelConfig probe = mc;
      probe.has_box = false;
      const SystemPtr s = build_system(probe);
      mc.box.z = s->box().z;
    }
    mf.sys = build_system(mc);
  } catch (const SyntaxError& e) {
    fail(label, std::string("expression: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::config) throw;
    fail(label, std::string(to_string(e.kind())) + ": " + e.what());
  }

  if (const auto* saddle = subtable(root, "saddle", label)) {
    reject_unknown(*saddle, {"seed"}, label, "saddle");
    if (const auto* n = saddle->get("seed")) {
      const auto v = numbers(*n, label, "saddle.seed");
      if (v.size() != 2) fail(label, "'saddle.seed' must be [p, q]");
      mf.saddle_seed = {v[0], v[1]};
    }
  }
  if (const auto* sec = subtable(root, "sections", label)) {
    reject_unknown(*sec, {"flip", "rotate_deg"}, label, "sections");
    if (const auto* n = sec->get("flip")) {
      auto v = n->value<bool>();
      if (!v) fail(label, "'sections.flip' must be a boolean");
      mf.sections.flip = *v;
    }
    if (const auto* n = sec->get("rotate_deg")) mf.sections.rotate_deg = number(*n, label, "sections.rotate_deg");
  }

  RunDefaults& run = mf.run;
  run.z0.assign(mf.sys->dim_z(), 0.0);
  if (const auto* r = subtable(root, "run", label)) {
    reject_unknown(*r, {"z0", "h_init", "eps", "phases", "seed", "k_window", "pre_window",
                        "post_window", "rtol", "atol", "t_end"},
                   label, "run");
    if (const auto* n = r->get("z0")) run.z0 = numbers(*n, label, "run.z0");
    if (const auto* n = r->get("h_init")) run.h_init = number(*n, label, "run.h_init");
    if (const auto* n = r->get("eps")) run.eps = numbers(*n, label, "run.eps");
    if (const auto* n = r->get("phases")) {
      auto v = n->value<std::int64_t>();
      if (!v || *v <= 0) fail(label, "'run.phases' must be a positive integer");
      run.phases = static_cast<std::size_t>(*v);
    }
    if (const auto* n = r->get("seed")) {
      auto v = n->value<std::int64_t>();
      if (!v || *v < 0) fail(label, "'run.seed' must be a non-negative integer");
      run.seed = static_cast<std::uint64_t>(*v);
    }
    if (const auto* n = r->get("k_window")) run.k_window = number(*n, label, "run.k_window");
    if (const auto* n = r->get("pre_window")) std::tie(run.pre_lo, run.pre_hi) = interval(*n, label, "run.pre_window");
    if (const auto* n = r->get("post_window")) {
      const auto iv = interval(*n, label, "run.post_window");
      run.post_lo = iv.first;
      run.post_hi = iv.second;
    }
    if (const auto* n = r->get("rtol")) run.rtol = number(*n, label, "run.rtol");
    if (const auto* n = r->get("atol")) run.atol = number(*n, label, "run.atol");
    if (const auto* n = r->get("t_end")) run.t_end = number(*n, label, "run.t_end");
  }
  if (run.z0.size() != mf.sys->dim_z()) fail(label, "'run.z0' must have one entry per slow variable");
  if (run.eps.empty()) fail(label, "'run.eps' is empty");
  for (double e : run.eps) {
    if (!(e > 0.0)) fail(label, "'run.eps' values must be positive");
  }
  if (!(run.h_init > 0.0)) fail(label, "'run.h_init' must be positive");
  return mf;
}

ModelFile load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::config, "cannot read model file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model_file(ss.str(), path);
}

nlohmann::json ModelFile::resolved() const {
  nlohmann::json j;
  j["path"] = path;
  j["model"] = sys->describe();
  j["model"]["name"] = sys->name();
  j["model"]["mode"] = to_string(sys->mode());
  j["model"]["z"] = sys->z_names();
  const Box& b = sys->box();
  j["box"] = {{"p", {b.p_lo, b.p_hi}}, {"q", {b.q_lo, b.q_hi}}, {"z", b.z}};
  j["saddle_seed"] = {saddle_seed.p, saddle_seed.q};
  j["sections"] = {{"flip", sections.flip}, {"rotate_deg", sections.rotate_deg}};
  nlohmann::json r;
  r["z0"] = run.z0;
  r["h_init"] = run.h_init;
  r["eps"] = run.eps;
  r["phases"] = run.phases;
  r["seed"] = run.seed ? nlohmann::json(*run.seed) : nlohmann::json(nullptr);
  r["k_window"] = run.k_window;
  r["pre_window"] = {run.pre_lo, run.pre_hi};
  r["post_window"] = run.post_hi ? nlohmann::json({*run.post_lo, *run.post_hi}) : nlohmann::json(nullptr);
  r["rtol"] = run.rtol;
  r["atol"] = run.atol;
  r["t_end"] = run.t_end;
  j["run"] = r;
  return j;
}

}  // namespace sepcross
