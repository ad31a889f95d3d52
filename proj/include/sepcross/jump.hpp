#pragma once

// Pseudo-phases and the closed-form jump predictions at a separatrix crossing
// from G3 into G1 or G2.

#include <vector>

#include "json.hpp"

#include "sepcross/coeffs.hpp"

namespace sepcross {

// ln Gamma(x) for x > 0; throws a domain error otherwise.
double lgamma_pos(double x);

struct PseudoPhase {
  Domain target = Domain::G2;
  double xi3 = 0.0;
  double xi_i = 0.0;
  double eps = 0.0;
  double h0 = 0.0;
  double k = 3.0;
  bool valid = false;  // k sqrt(eps) <= xi3 <= theta_i3 - k sqrt(eps)
};

// xi3 = h0 / (eps Theta3), xi_i = 1 - xi3 / theta_i3.
PseudoPhase pseudo_phase(double h0, double eps, const SeparatrixCoefficients& c, Domain target,
                         double k = 3.0);
// Same record from the target pseudo-phase.
PseudoPhase pseudo_phase_from_xi(double xi_i, double eps, const SeparatrixCoefficients& c,
                                 Domain target, double k = 3.0);

struct JumpTerms {
  double log = 0.0, gamma = 0.0, b = 0.0, A = 0.0, d = 0.0;
  double total() const { return log + gamma + b + A + d; }
};

struct JumpPrediction {
  Domain target = Domain::G2;
  double xi_i = 0.0, theta_i3 = 0.0, eps = 0.0;
  bool valid = false;
  std::vector<JumpTerms> dz;  // one per slow variable
  JumpTerms dtau;             // f_zC = 1, A = 0
  std::vector<double> dz_total() const;
  nlohmann::json to_json() const;
};

// Throws invalid_pseudo_phase for an invalid pseudo-phase unless force is set.
JumpPrediction jump_slow(const SeparatrixCoefficients& c, const PseudoPhase& pp,
                         bool force = false);

// Single component of the jump for explicit inputs. Index 3 quantities carry
// the suffix 3; d3 must already be the one matching the target's section.
struct JumpInputs {
  double a = 0.0, f = 1.0, Theta_i = 0.0, Theta3 = 0.0;
  double b_i = 0.0, b3 = 0.0, A_i = 0.0, A3 = 0.0, d_i = 0.0, d3 = 0.0;
};
JumpTerms jump_terms(const JumpInputs& in, double xi_i, double eps);

// Boundary-layer values at the last eta crossing and first xi crossing.
struct BoundaryPrediction {
  double h0 = 0.0, h0p = 0.0;
  std::vector<double> z0, z0p;  // z0p from z0 by the one-round increment
  double tau0 = 0.0, tau0p = 0.0;
};
// Anchored at the G3-side matched values (z3s, tau3s).
BoundaryPrediction boundary_from_g3(const SeparatrixCoefficients& c, const PseudoPhase& pp,
                                    const std::vector<double>& z3s, double tau3s);
// z'0 and t'0-like slow time from the target-side matched values.
BoundaryPrediction boundary_from_target(const SeparatrixCoefficients& c, const PseudoPhase& pp,
                                        const std::vector<double>& zis, double tauis);

enum class InvariantMode { time_dependent, slow_fast };

struct InvariantJump {
  double two_pi_J_plus = 0.0;
  double S_i_hat = 0.0;   // S_i at the G3-side matched point
  double bracket = 0.0;   // {S_i, S3}, slow-fast only
  double bracket_term = 0.0;
  JumpTerms terms;        // contributions scaled to 2 pi J
};

// c must be the bundle at z_*; J_minus is the incoming improved invariant.
InvariantJump invariant_jump(const SeparatrixCoefficients& c, const PseudoPhase& pp,
                             double J_minus, InvariantMode mode, bool force = false);

// {S_i, S3} with z = (y, x) and {a, b} = a_x b_y - a_y b_x.
double area_bracket(const SeparatrixCoefficients& c, Domain target);

}  // namespace sepcross
