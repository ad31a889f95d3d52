#pragma once

// Augmented state for frozen-flow orbits: the phase point plus running
// quadratures needed by the coefficient and averaging code.

#include <cstddef>

#include "sepcross/model.hpp"
#include "sepcross/ode.hpp"
#include "sepcross/portrait.hpp"

namespace sepcross {

struct OrbitLayout {
  explicit OrbitLayout(std::size_t k) : k(k), Fz(6), tFz(6 + k), fz(6 + 2 * k), Ez(6 + 3 * k) {}
  std::size_t k;
  static constexpr std::size_t area = 2, fh = 3, tfh = 4, Eint = 5;
  std::size_t Fz, tFz, fz, Ez;
  std::size_t size() const { return 6 + 4 * k; }
};

inline ode::Rhs make_orbit_rhs(const FrozenFields& ff, const SaddleChart& chart) {
  const double pc = chart.p_C, qc = chart.q_C;
  return [&ff, pc, qc, s = FieldSample{}](double t, const double* y, double* dy) mutable {
    ff.sample(y[0], y[1], s);
    const std::size_t k = s.F_z.size();
    const OrbitLayout L(k);
    const double pdot = -s.Eq, qdot = s.Ep;
    dy[0] = pdot;
    dy[1] = qdot;
    dy[L.area] = 0.5 * ((y[0] - pc) * qdot - (y[1] - qc) * pdot);
    dy[L.fh] = s.f_h;
    dy[L.tfh] = t * s.f_h;
    dy[L.Eint] = s.E;
    for (std::size_t j = 0; j < k; ++j) {
      dy[L.Fz + j] = s.F_z[j];
      dy[L.tFz + j] = t * s.F_z[j];
      dy[L.fz + j] = s.f_z[j];
      dy[L.Ez + j] = s.Ez[j];
    }
  };
}

}  // namespace sepcross
