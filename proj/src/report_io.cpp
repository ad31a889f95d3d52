#include "sepcross/report_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sepcross::io {

std::string version() { return SEPCROSS_VERSION_STRING; }

std::string format_number(double x) {
  if (std::isnan(x)) return "";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::config, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorKind::config, "write failed for " + path.string());
}

namespace {

nlohmann::json vec(Vec2 v) { return nlohmann::json::array({v.p, v.q}); }

nlohmann::json polyline(const Loop& l, std::size_t max_points) {
  const std::size_t n = l.p.size();
  const std::size_t stride = max_points && n > max_points ? (n + max_points - 1) / max_points : 1;
  nlohmann::json pts = nlohmann::json::array();
  for (std::size_t k = 0; k < n; k += stride) pts.push_back({l.t[k], l.p[k], l.q[k]});
  if (n && (n - 1) % stride) pts.push_back({l.t[n - 1], l.p[n - 1], l.q[n - 1]});
  return pts;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

nlohmann::json chart_json(const SaddleChart& c) {
  return {{"z", c.z},
          {"C", {c.p_C, c.q_C}},
          {"h_C", c.h_C},
          {"lambda", c.lambda},
          {"a", c.a},
          {"v_u", vec(c.v_u)},
          {"v_s", vec(c.v_s)},
          {"e_eta", vec(c.e_eta)},
          {"e_xi", vec(c.e_xi)},
          {"sections", {{"flip", c.sections.flip}, {"rotate_deg", c.sections.rotate_deg}}}};
}

nlohmann::json portrait_json(const SeparatrixGeometry& geo, std::size_t max_points) {
  nlohmann::json j;
  j["chart"] = chart_json(geo.chart);
  j["delta"] = geo.delta;
  j["scale"] = geo.scale;
  j["areas"] = {{"S1", geo.S1}, {"S2", geo.S2}, {"S3", geo.S3}};
  for (Domain d : {Domain::G1, Domain::G2}) {
    const Loop& l = geo.loop(d);
    j["loops"][to_string(d)] = {{"duration", l.duration},
                                {"area", l.area},
                                {"max_abs_E", l.max_abs_E},
                                {"r_exit", vec(l.r_exit)},
                                {"r_entry", vec(l.r_entry)},
                                {"samples", l.p.size()},
                                {"points_tpq", polyline(l, max_points)}};
  }
  return j;
}

std::vector<std::string> sweep_columns(const std::vector<std::string>& z_names) {
  std::vector<std::string> cols{"run_id", "eps", "phi0", "h_init", "target", "valid", "ambiguous",
                                "xi3", "xi_i", "xi3_eta_plus", "h0", "h0p", "t0", "t0p"};
  for (const auto& z : z_names) cols.push_back("z0_" + z);
  for (const auto& z : z_names) cols.push_back("z0p_" + z);
  for (const char* c : {"measured_dtau", "predicted_dtau", "delta_minus", "delta_plus",
                        "measured_J_minus", "measured_J_plus", "predicted_J_plus",
                        "baseline_J_plus", "measured_dJ", "predicted_dJ", "error"}) {
    cols.emplace_back(c);
  }
  return cols;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, const std::vector<std::string>& z_names) {
  std::ostringstream os;
  const auto cols = sweep_columns(z_names);
  for (std::size_t k = 0; k < cols.size(); ++k) os << (k ? "," : "") << cols[k];
  os << "\n";
  const std::size_t nz = z_names.size();
  auto zs = [&](const std::vector<double>& v) {
    for (std::size_t j = 0; j < nz; ++j) os << "," << format_number(j < v.size() ? v[j] : NAN);
  };
  for (const auto& r : rows) {
    os << r.run_id << "," << format_number(r.eps) << "," << format_number(r.phi0) << ","
       << format_number(r.h_init) << "," << r.target << "," << (r.valid ? 1 : 0) << "," << (r.ambiguous ? 1 : 0) << ","
       << format_number(r.xi3) << "," << format_number(r.xi_i) << ","
       << format_number(r.xi3_eta_plus) << "," << format_number(r.h0) << ","
       << format_number(r.h0p) << "," << format_number(r.t0) << "," << format_number(r.t0p);
    zs(r.z0);
    zs(r.z0p);
    for (double x : {r.measured_dtau, r.predicted_dtau, r.delta_minus, r.delta_plus, r.J_minus,
                     r.J_plus, r.predicted_J_plus, r.baseline_J_plus, r.J_plus - r.J_minus,
                     r.predicted_J_plus - r.J_minus}) {
      os << "," << format_number(x);
    }
    os << "," << csv_field(r.error) << "\n";
  }
  return os.str();
}

nlohmann::json sweep_context_json(const SweepContext& ctx) {
  nlohmann::json j;
  j["initial_chart"] = chart_json(ctx.chart0);
  j["layer_width"] = ctx.layer_width;
  j["tau_star"] = ctx.tau_star;
  j["z_star"] = ctx.z_star;
  j["coeffs_at_z_star"] = ctx.coeffs.to_json();
  return j;
}

std::string events_csv(const TrajectoryRecord& traj, const std::vector<std::string>& z_names) {
  std::ostringstream os;
  os << "t,ray,p,q";
  for (const auto& z : z_names) os << "," << z;
  os << ",h,h_C,Hint\n";
  for (const auto& e : traj.events) {
    os << format_number(e.t) << "," << to_string(e.ray) << "," << format_number(e.p) << ","
       << format_number(e.q);
    for (double z : e.z) os << "," << format_number(z);
    os << "," << format_number(e.h) << "," << format_number(e.h_C) << ","
       << format_number(e.Hint) << "\n";
  }
  return os.str();
}

nlohmann::json trajectory_json(const TrajectoryRecord& traj) {
  nlohmann::json j;
  j["model"] = traj.model;
  j["eps"] = traj.eps;
  j["y0"] = traj.y0;
  j["termination"] = traj.termination;
  j["t_final"] = traj.t_final;
  j["y_final"] = traj.y_final;
  j["steps"] = traj.steps;
  j["events"] = traj.events.size();
  return j;
}

nlohmann::json crossing_json(const CrossingRecord& cr) {
  return {{"target", to_string(cr.target)},
          {"ambiguous", cr.ambiguous},
          {"eta_ray", to_string(cr.eta_ray)},
          {"t0", cr.t0},
          {"h0", cr.h0},
          {"z0", cr.z0},
          {"t0p", cr.t0p},
          {"h0p", cr.h0p},
          {"z0p", cr.z0p},
          {"xi3", cr.xi3},
          {"xi_i", cr.xi_i},
          {"valid", cr.valid},
          {"increments", cr.increments}};
}

nlohmann::json error_json(ErrorKind kind, const std::string& message) {
  return {{"error", {{"kind", std::string(to_string(kind))}, {"message", message}}},
          {"version", version()}};
}

}  // namespace sepcross::io
