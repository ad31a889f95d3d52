#pragma once

// Saddle chart, separatrix loops and periodic orbits of the frozen system.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "sepcross/model.hpp"
#include "sepcross/ode.hpp"

namespace sepcross {

struct Vec2 {
  double p = 0.0;
  double q = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.p + b.p, a.q + b.q}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.p - b.p, a.q - b.q}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.p, s * a.q}; }
inline Vec2 operator-(Vec2 a) { return {-a.p, -a.q}; }
inline double dot(Vec2 a, Vec2 b) { return a.p * b.p + a.q * b.q; }
inline double cross(Vec2 a, Vec2 b) { return a.p * b.q - a.q * b.p; }
inline double norm(Vec2 a) { return std::hypot(a.p, a.q); }

enum class Domain { G1, G2, G3 };
std::string to_string(Domain d);

// eta_plus / xi_plus are the default sections. The minus rays are their
// mirror images, used for passages into G1.
enum class Ray { eta_plus, eta_minus, xi_plus, xi_minus };
std::string to_string(Ray r);

struct SectionConfig {
  bool flip = false;        // exchange the roles of the two loops
  double rotate_deg = 0.0;  // rotate both section rays about C in the (p, q) plane
};

struct SaddleChart {
  std::vector<double> z;
  double p_C = 0.0, q_C = 0.0;
  double h_C = 0.0;
  double lambda = 0.0;
  double a = 0.0;
  Vec2 v_u, v_s;      // unit eigenvectors; the loop leaving along +v_u bounds G2
  Vec2 e_eta, e_xi;   // unit section directions (after rotation)
  SectionConfig sections;

  Vec2 center() const { return {p_C, q_C}; }
  Vec2 direction(Ray r) const;
};

SaddleChart find_saddle(const SystemDef& sys, std::span<const double> z, Vec2 seed,
                        SectionConfig sections = {});

// Same saddle at a nearby z, warm-started from a previous chart.
SaddleChart track_saddle(const SystemDef& sys, std::span<const double> z, const SaddleChart& prev);

struct Loop {
  Domain domain = Domain::G2;
  std::vector<double> t, p, q;  // samples between ball exit and re-entry
  Vec2 r_exit, r_entry;         // offsets from C where the loop leaves / enters the ball
  double duration = 0.0;
  double area = 0.0;
  double max_abs_E = 0.0;
  // Quadratures outside the ball and linear-tail estimates of the missing parts.
  double fh = 0.0, fh_tail = 0.0;
  std::vector<double> Fz, Fz_tail;
  std::vector<double> Ez, Ez_tail;
};

struct SeparatrixGeometry {
  SaddleChart chart;
  double delta = 0.0;
  double scale = 0.0;
  Loop l1, l2;
  double S1 = 0.0, S2 = 0.0, S3 = 0.0;
  const Loop& loop(Domain d) const { return d == Domain::G1 ? l1 : l2; }
};

// delta_rel is the ball radius relative to the portrait scale.
SeparatrixGeometry trace_separatrices(const SystemPtr& sys, const SaddleChart& chart,
                                      double delta_rel = 1e-4);

struct OrbitIntegrals {
  double T = 0.0;
  double area = 0.0;
  double fh = 0.0, tfh = 0.0;  // integral of f_h and of t f_h over one period
  std::vector<double> Fz, tFz, fz, Ez;
  double H = 0.0;              // integral of E over one period
};

struct OrbitOptions {
  double rtol = 1e-12;
  double atol = 1e-14;
  double t_cap = 1e4;
  bool keep_dense = false;
};

struct Orbit {
  Domain domain = Domain::G3;
  Ray ray = Ray::eta_plus;
  double h = 0.0;
  Vec2 start;
  double T = 0.0;
  OrbitIntegrals integrals;
  // Layout of the dense state: p, q, area, fh, tfh, E, then Fz, tFz, fz, Ez blocks.
  std::vector<ode::DenseSegment> dense;
  std::size_t dim_z = 0;

  // Point and running quadratures at time t in [0, T]; requires keep_dense.
  void state(double t, std::vector<double>& out) const;
  Vec2 point(double t) const;
};

Ray default_ray(Domain d);

// Section point with E = h on the given ray (inner segment for xi rays).
Vec2 section_point(const FrozenFields& ff, const SaddleChart& chart, Ray ray, double h);

// Distance along a xi ray to the minimum of E and the minimum value.
struct RayMinimum {
  double s = 0.0;
  double E = 0.0;
};
RayMinimum ray_minimum(const FrozenFields& ff, const SaddleChart& chart, Ray ray);

// Starts on default_ray(domain) unless another ray is given (eta_minus for
// the mirrored G3 section, xi rays must match the domain's loop).
Orbit periodic_orbit(const FrozenFields& ff, const SaddleChart& chart, Domain domain, double h,
                     const OrbitOptions& opt = {}, std::optional<Ray> ray = std::nullopt);

// Orbit through an arbitrary point, closed by return to the line through it
// normal to the flow.
Orbit orbit_through(const FrozenFields& ff, const SaddleChart& chart, Vec2 x0,
                    const OrbitOptions& opt = {});

struct Classification {
  Domain domain;
  double E;
};
Classification classify(const SystemDef& sys, const SeparatrixGeometry& geo, double p, double q);

}  // namespace sepcross
