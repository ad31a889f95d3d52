#pragma once

// First-order averaged dynamics, glued across the separatrix, and the
// first-order near-identity corrections.

#include <cmath>
#include <optional>
#include <vector>

#include "sepcross/model.hpp"
#include "sepcross/ode.hpp"
#include "sepcross/portrait.hpp"

namespace sepcross {

struct AveragedRhs {
  double T = 0.0;
  double fh = 0.0;              // (1/T) * integral of f_h
  std::vector<double> fz;       // (1/T) * integral of f_z
  double Theta = 0.0;           // -integral of f_h over the orbit
  std::vector<double> Fz_int;   // integral of F_z over the orbit
};

AveragedRhs averaged_rhs(const SystemPtr& sys, const SaddleChart& chart, Domain d, double h);

struct AveragedRequest {
  Domain domain = Domain::G3;
  double h0 = 0.0;
  std::vector<double> z0;
  double tau0 = 0.0;
  std::optional<Domain> target;  // continue into G1/G2 after reaching the separatrix
  std::optional<double> h_end;   // end of the last leg; omitted: stop at the separatrix
  Vec2 saddle_seed;
  SectionConfig sections;
};

struct AveragedOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_tail_rel = 1e-6;  // below |h| = h_tail_rel * S3 the log asymptotics are used
};

// One leg in a single domain, integrated in s = ln|h| between |h| = x_from
// and x_to. Below tail_x the logarithmic period law is used instead:
//   tau(x) = tau_* + kappa I(x) / Theta,  z(x) = z_* + kappa (f_zC I(x) + A x) / Theta
// with I(x) = -a_d (x ln x - x) + b x, kappa = -1 in G3 and +1 in G1, G2.
struct AveragedLeg {
  Domain domain = Domain::G3;
  double x_from = 0.0, x_to = 0.0;
  std::vector<ode::DenseSegment> segments;  // state (tau, z...) in s
  bool has_tail = false;
  double tail_x = 0.0;
  double tail_a = 0.0, tail_b = 0.0, tail_Theta = 0.0;
  std::vector<double> tail_A, tail_fzC;
  double tau_star = 0.0;
  std::vector<double> z_star;

  double kappa() const { return domain == Domain::G3 ? -1.0 : 1.0; }
  void at_x(double x, double& tau, std::vector<double>& z) const;
  double tau_at_x(double x) const;
};

class AveragedSolution {
 public:
  const std::vector<AveragedLeg>& legs() const { return legs_; }
  std::vector<Domain> route() const;
  bool arrived() const { return arrived_; }
  double tau_star() const { return tau_star_; }
  const std::vector<double>& z_star() const { return z_star_; }

  // State on a leg at energy h (sign of the leg's domain).
  void at_h(std::size_t leg, double h, double& tau, std::vector<double>& z) const {
    legs_.at(leg).at_x(std::abs(h), tau, z);
  }
  // State at slow time tau; throws when tau lies outside the solution.
  void at_tau(double tau, double& h, std::vector<double>& z) const;
  double h_at_tau(double tau) const;
  // Slow time at energy h on the first leg whose domain and range contain it.
  double tau_at_h(double h) const;
  // Slow-time span covered.
  double tau_begin() const;
  double tau_end() const;

 private:
  friend AveragedSolution solve_averaged(const SystemPtr&, const AveragedRequest&,
                                         const AveragedOptions&);
  std::vector<AveragedLeg> legs_;
  bool arrived_ = false;
  double tau_star_ = 0.0;
  std::vector<double> z_star_;
};

AveragedSolution solve_averaged(const SystemPtr& sys, const AveragedRequest& req,
                                const AveragedOptions& opt = {});

struct Correction {
  double u_h = 0.0;
  std::vector<double> u_z;
};

// u1 at the orbit point reached after arc-time phi T / (2 pi) from the section.
Correction first_order_correction(const SystemPtr& sys, const SaddleChart& chart, Domain d,
                                  double h, double phi);

// Action and improved invariant at one phase point, frozen at the chart's z.
struct InvariantSample {
  double I = 0.0;  // S / (2 pi)
  double J = 0.0;
  double S = 0.0, T = 0.0;
  Correction u;
};
InvariantSample improved_invariant(const SystemPtr& sys, const SaddleChart& chart, double p,
                                   double q, double eps);

}  // namespace sepcross
