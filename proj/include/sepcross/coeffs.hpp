#pragma once

// Separatrix expansion coefficients at a fixed z.
// Index 0, 1, 2 of the arrays below stands for G1, G2, G3.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "sepcross/model.hpp"
#include "sepcross/portrait.hpp"

namespace sepcross {

inline std::size_t index_of(Domain d) {
  return d == Domain::G1 ? 0 : d == Domain::G2 ? 1 : 2;
}

struct FitRecord {
  std::string name;
  std::vector<double> h;  // |h| levels used
  std::size_t order = 0;  // number of basis functions
  double value = 0.0;
  double residual_rms = 0.0;
  double spread = 0.0;    // change of value when the four largest levels are dropped
  std::optional<double> slope, slope_predicted;
};

struct FitDiagnostics {
  std::vector<FitRecord> fits;
  // Linear near-saddle tail estimates, already included in the loop values.
  std::array<double, 2> fh_tail{};
  std::array<std::vector<double>, 2> Fz_tail;
  double loop_max_abs_E = 0.0;
  // Independent estimates of index-3 quantities from G3 orbits.
  double Theta3_orbit = 0.0;
  double S3_orbit = 0.0;
};

struct CoeffOptions {
  double h_max_rel = 3e-3;  // grid top, relative to S3
  double h_min_rel = 4e-9;  // grid bottom, relative to S3
  double ratio = 1.4142135623730951;
  double delta_rel = 1e-4;  // ball radius for loop tracing
  double slope_tol = 0.05;
  double b_residual_tol = 1e-5;
  bool require_supported = true;
};

struct LoopIntegrals {
  std::array<double, 3> Theta{}, S{};
  std::array<std::vector<double>, 3> A, dSdz;
};

struct OrbitSweep {
  std::vector<double> h;  // |h| levels, decreasing
  // G1, G2, G3 on their default rays, then G3 on the mirrored eta ray.
  std::array<std::vector<OrbitIntegrals>, 4> orbits;
};

struct PeriodConstants {
  double a = 0.0;
  std::array<double, 3> b{};
  std::vector<FitRecord> fits;
};

struct WeightedConstants {
  std::array<double, 3> d{};
  std::array<std::vector<double>, 3> g;
  double d3_mirror = 0.0;
  std::vector<double> g3_mirror;
  std::vector<FitRecord> fits;
};

struct SeparatrixCoefficients {
  std::vector<double> z;
  SaddleChart chart;
  double a = 0.0;
  std::array<double, 3> b{}, Theta{}, S{}, d{};
  std::array<std::vector<double>, 3> A, g, dSdz;
  // Versions measured from the mirrored eta ray (passages ending in G1).
  double d3_mirror = 0.0;
  std::vector<double> g3_mirror;
  std::vector<double> f_zC;
  FitDiagnostics diagnostics;

  double theta_i3(Domain d) const { return Theta[index_of(d)] / Theta[2]; }
  nlohmann::json section_metadata() const;
  nlohmann::json to_json() const;
};

// Throws a config error when two bundles were built with different sections.
void require_same_sections(const SeparatrixCoefficients& x, const SeparatrixCoefficients& y);

LoopIntegrals loop_integrals(const SeparatrixGeometry& geo);

OrbitSweep sweep_orbits(const FrozenFields& ff, const SeparatrixGeometry& geo,
                        const CoeffOptions& opt = {});

PeriodConstants period_constants(const SaddleChart& chart, const OrbitSweep& sweep,
                                 const CoeffOptions& opt = {});

WeightedConstants weighted_constants(const SaddleChart& chart, const OrbitSweep& sweep,
                                     const LoopIntegrals& loops, const PeriodConstants& pc,
                                     const CoeffOptions& opt = {});

SeparatrixCoefficients bundle(const SystemPtr& sys, const SaddleChart& chart,
                              const CoeffOptions& opt = {});
SeparatrixCoefficients bundle(const SystemPtr& sys, std::span<const double> z, Vec2 seed,
                              SectionConfig sections = {}, const CoeffOptions& opt = {});

}  // namespace sepcross
