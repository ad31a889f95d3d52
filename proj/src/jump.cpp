#include "sepcross/jump.hpp"

#include <cmath>
#include <numbers>

#include "sepcross/error.hpp"

namespace sepcross {

namespace {

constexpr double kPi = std::numbers::pi;

// Quantities of one passage with the target loop labelled "i" and the other
// loop "o". For G1 the mirrored eta section supplies d3.
struct Roles {
  std::size_t i, o;
  double th_i, th_o;
  double d3;
};

Roles roles(const SeparatrixCoefficients& c, Domain target) {
  if (target == Domain::G3) throw Error(ErrorKind::config, "target must be G1 or G2");
  Roles r;
  r.i = index_of(target);
  r.o = 1 - r.i;
  r.th_i = c.Theta[r.i] / c.Theta[2];
  r.th_o = c.Theta[r.o] / c.Theta[2];
  r.d3 = target == Domain::G1 ? c.d3_mirror : c.d[2];
  return r;
}

void require_supported(const SeparatrixCoefficients& c) {
  if (!(c.Theta[0] > 0.0 && c.Theta[1] > 0.0)) {
    throw Error(ErrorKind::unsupported_regime, "passage needs Theta_1, Theta_2 > 0");
  }
}

double component(const std::vector<double>& v, std::size_t j) { return v.empty() ? 0.0 : v[j]; }

}  // namespace

double lgamma_pos(double x) {
  if (!(x > 0.0)) {
    throw Error(ErrorKind::domain, "Gamma argument must be positive, got " + std::to_string(x));
  }
  return std::lgamma(x);
}

PseudoPhase pseudo_phase(double h0, double eps, const SeparatrixCoefficients& c, Domain target,
                         double k) {
  if (!(h0 > 0.0)) throw Error(ErrorKind::invalid_pseudo_phase, "h0 must be positive");
  if (!(eps > 0.0)) throw Error(ErrorKind::config, "eps must be positive");
  require_supported(c);
  const Roles r = roles(c, target);
  PseudoPhase pp;
  pp.target = target;
  pp.eps = eps;
  pp.h0 = h0;
  pp.k = k;
  pp.xi3 = h0 / (eps * c.Theta[2]);
  pp.xi_i = 1.0 - pp.xi3 / r.th_i;
  const double w = k * std::sqrt(eps);
  pp.valid = pp.xi3 >= w && pp.xi3 <= r.th_i - w;
  return pp;
}

PseudoPhase pseudo_phase_from_xi(double xi_i, double eps, const SeparatrixCoefficients& c,
                                 Domain target, double k) {
  require_supported(c);
  const Roles r = roles(c, target);
  const double xi3 = r.th_i * (1.0 - xi_i);
  PseudoPhase pp = pseudo_phase(xi3 * eps * c.Theta[2], eps, c, target, k);
  pp.xi3 = xi3;
  pp.xi_i = xi_i;
  return pp;
}

JumpTerms jump_terms(const JumpInputs& in, double xi, double eps) {
  const double th = in.Theta_i / in.Theta3;
  const double m = xi - 0.5;
  const double lg = 1.5 * std::log(2.0 * kPi) - lgamma_pos(xi) - lgamma_pos(th * (1.0 - xi)) -
                    lgamma_pos(1.0 - th * xi);
  JumpTerms t;
  t.log = eps * in.f * in.a * m * (std::log(eps * in.Theta_i) - 2.0 * th * std::log(eps * in.Theta3));
  t.gamma = -eps * in.a * in.f * lg;
  t.b = -eps * in.f * m * (in.b_i - th * in.b3);
  t.A = -eps * m * (in.A_i - th * in.A3);
  t.d = eps * (in.f / in.Theta_i) * (in.d_i - th * in.d3);
  return t;
}

std::vector<double> JumpPrediction::dz_total() const {
  std::vector<double> v;
  for (const auto& t : dz) v.push_back(t.total());
  return v;
}

namespace {
nlohmann::json terms_json(const JumpTerms& t) {
  return {{"log", t.log}, {"gamma", t.gamma}, {"b", t.b}, {"A", t.A}, {"d", t.d},
          {"total", t.total()}};
}
}  // namespace

nlohmann::json JumpPrediction::to_json() const {
  nlohmann::json j;
  j["target"] = to_string(target);
  j["xi_i"] = xi_i;
  j["theta_i3"] = theta_i3;
  j["eps"] = eps;
  j["valid"] = valid;
  j["dtau"] = terms_json(dtau);
  j["dz"] = nlohmann::json::array();
  for (const auto& t : dz) j["dz"].push_back(terms_json(t));
  return j;
}

JumpPrediction jump_slow(const SeparatrixCoefficients& c, const PseudoPhase& pp, bool force) {
  if (!pp.valid && !force) {
    throw Error(ErrorKind::invalid_pseudo_phase,
                "xi3 = " + std::to_string(pp.xi3) + " outside the crossing window");
  }
  require_supported(c);
  const Roles r = roles(c, pp.target);
  JumpPrediction out;
  out.target = pp.target;
  out.xi_i = pp.xi_i;
  out.theta_i3 = r.th_i;
  out.eps = pp.eps;
  out.valid = pp.valid;
  JumpInputs in;
  in.a = c.a;
  in.Theta_i = c.Theta[r.i];
  in.Theta3 = c.Theta[2];
  in.b_i = c.b[r.i];
  in.b3 = c.b[2];
  in.d_i = c.d[r.i];
  in.d3 = r.d3;
  out.dtau = jump_terms(in, pp.xi_i, pp.eps);
  for (std::size_t j = 0; j < c.z.size(); ++j) {
    JumpInputs v = in;
    v.f = c.f_zC[j];
    v.A_i = component(c.A[r.i], j);
    v.A3 = component(c.A[2], j);
    out.dz.push_back(jump_terms(v, pp.xi_i, pp.eps));
  }
  return out;
}

namespace {

// Simplified second form of the approach relation, one component.
double approach_z0(const SeparatrixCoefficients& c, const Roles& r, const PseudoPhase& pp,
                   double z3s, double f, double A_i, double A_o, double A3) {
  const double eps = pp.eps, a = c.a, xi3 = pp.xi3, h0 = pp.h0, T3 = c.Theta[2];
  const double lg = std::log(2.0 * kPi) - lgamma_pos(xi3) - lgamma_pos(xi3 + r.th_o);
  return z3s - f / T3 * (-2.0 * a * h0 * std::log(eps * T3) + c.b[2] * h0) - A3 / T3 * h0 +
         2.0 * eps * a * f * (-0.5 * lg + 0.5 * r.th_i * std::log(xi3)) -
         0.5 * eps * a * f * (r.th_i - r.th_o) * std::log(h0) -
         0.5 * eps * f * ((r.th_o * c.b[r.i] - r.th_i * c.b[r.o]) + 2.0 * r.d3 / T3) +
         0.25 * eps * A3 * (r.th_i - r.th_o) + 0.25 * eps * (A_o - A_i);
}

double round_increment(const SeparatrixCoefficients& c, const Roles& r, const PseudoPhase& pp,
                       double h0p, double f, double A_i) {
  const double eps = pp.eps, a = c.a;
  return eps * f * (-0.5 * a * std::log(pp.h0) - 0.5 * a * std::log(-h0p) + c.b[r.i]) + eps * A_i;
}

double departure_z0p(const SeparatrixCoefficients& c, const Roles& r, const PseudoPhase& pp,
                     double zis, double f, double A_i) {
  const double eps = pp.eps, a = c.a, xi = pp.xi_i, Ti = c.Theta[r.i];
  return zis - eps * f * (a * xi * std::log(eps * Ti) - c.b[r.i] * xi) + eps * A_i * xi -
         eps * a * f * (-(0.5 * std::log(2.0 * kPi) - lgamma_pos(xi)) + 0.5 * std::log(xi)) -
         eps * f / Ti * c.d[r.i];
}

}  // namespace

BoundaryPrediction boundary_from_g3(const SeparatrixCoefficients& c, const PseudoPhase& pp,
                                    const std::vector<double>& z3s, double tau3s) {
  require_supported(c);
  const Roles r = roles(c, pp.target);
  BoundaryPrediction b;
  b.h0 = pp.h0;
  b.h0p = pp.h0 - pp.eps * c.Theta[r.i];
  b.tau0 = approach_z0(c, r, pp, tau3s, 1.0, 0.0, 0.0, 0.0);
  b.tau0p = b.tau0 + round_increment(c, r, pp, b.h0p, 1.0, 0.0);
  for (std::size_t j = 0; j < z3s.size(); ++j) {
    const double f = c.f_zC[j];
    const double Ai = component(c.A[r.i], j), Ao = component(c.A[r.o], j),
                 A3 = component(c.A[2], j);
    const double z0 = approach_z0(c, r, pp, z3s[j], f, Ai, Ao, A3);
    b.z0.push_back(z0);
    b.z0p.push_back(z0 + round_increment(c, r, pp, b.h0p, f, Ai));
  }
  return b;
}

BoundaryPrediction boundary_from_target(const SeparatrixCoefficients& c, const PseudoPhase& pp,
                                        const std::vector<double>& zis, double tauis) {
  require_supported(c);
  const Roles r = roles(c, pp.target);
  BoundaryPrediction b;
  b.h0 = pp.h0;
  b.h0p = -pp.eps * c.Theta[r.i] * pp.xi_i;
  b.tau0p = departure_z0p(c, r, pp, tauis, 1.0, 0.0);
  for (std::size_t j = 0; j < zis.size(); ++j) {
    b.z0p.push_back(departure_z0p(c, r, pp, zis[j], c.f_zC[j], component(c.A[r.i], j)));
  }
  return b;
}

double area_bracket(const SeparatrixCoefficients& c, Domain target) {
  if (c.z.size() != 2) throw Error(ErrorKind::config, "bracket needs z = (y, x)");
  const auto& Si = c.dSdz[index_of(target)];
  const auto& S3 = c.dSdz[2];
  // z = (y, x): index 0 is d/dy, index 1 is d/dx.
  return Si[1] * S3[0] - Si[0] * S3[1];
}

InvariantJump invariant_jump(const SeparatrixCoefficients& c, const PseudoPhase& pp,
                             double J_minus, InvariantMode mode, bool force) {
  const JumpPrediction jp = jump_slow(c, pp, force);
  const Roles r = roles(c, pp.target);
  const double Ti = c.Theta[r.i];
  InvariantJump out;
  out.S_i_hat = c.S[r.i] + r.th_i * (2.0 * kPi * J_minus - c.S[2]);
  // Contributions of the slow-time jump scaled by Theta_i; the d term keeps
  // eps(d_i - theta d3) and the b term carries eps.
  out.terms.log = Ti * jp.dtau.log;
  out.terms.gamma = Ti * jp.dtau.gamma;
  out.terms.b = Ti * jp.dtau.b;
  out.terms.d = Ti * jp.dtau.d;
  if (mode == InvariantMode::slow_fast) {
    out.bracket = area_bracket(c, pp.target);
    out.bracket_term = -pp.eps * r.th_i * (pp.xi_i - 0.5) * out.bracket;
  }
  out.two_pi_J_plus = out.S_i_hat + out.terms.total() + out.bracket_term;
  return out;
}

}  // namespace sepcross
