#include "sepcross/model.hpp"

#include <array>
#include <cmath>

#include "sepcross/error.hpp"
#include "sepcross/portrait.hpp"

namespace sepcross {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::generic: return "generic";
    case Mode::hamiltonian_time: return "hamiltonian_time";
    case Mode::slow_fast: return "slow_fast";
  }
  return "generic";
}

Mode mode_from_string(const std::string& s) {
  if (s == "generic") return Mode::generic;
  if (s == "hamiltonian_time") return Mode::hamiltonian_time;
  if (s == "slow_fast") return Mode::slow_fast;
  throw Error(ErrorKind::config, "unknown mode '" + s + "'");
}

bool Box::contains(double p, double q, const double* zv) const {
  if (!(p >= p_lo && p <= p_hi && q >= q_lo && q <= q_hi)) return false;
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (!(zv[k] >= z[k].first && zv[k] <= z[k].second)) return false;
  }
  return true;
}

SystemDef::SystemDef(std::string name, Mode mode, std::vector<std::string> z_names)
    : name_(std::move(name)), mode_(mode), z_names_(std::move(z_names)) {
  if (z_names_.empty()) throw Error(ErrorKind::model, "a model needs at least one slow variable");
  if (z_names_.size() > kMaxDimZ) throw Error(ErrorKind::model, "too many slow variables");
  if (mode_ == Mode::hamiltonian_time && z_names_.size() != 1) {
    throw Error(ErrorKind::model, "hamiltonian_time mode requires exactly one slow variable");
  }
  if (mode_ == Mode::slow_fast && z_names_.size() != 2) {
    throw Error(ErrorKind::model, "slow_fast mode requires z = (y, x)");
  }
  box_.z.assign(z_names_.size(), {-1e6, 1e6});
}

void SystemDef::set_box(Box b) {
  if (b.z.size() != dim_z()) throw Error(ErrorKind::model, "box has wrong number of z intervals");
  box_ = std::move(b);
}

void SystemDef::generic_perturbation(double, double, const double*, double, double& fp,
                                     double& fq, double* fz) const {
  fp = fq = 0.0;
  for (std::size_t k = 0; k < dim_z(); ++k) fz[k] = 0.0;
}

void SystemDef::perturbation(double p, double q, const double* z, double eps, double& fp,
                             double& fq, double* fz) const {
  switch (mode_) {
    case Mode::generic:
      generic_perturbation(p, q, z, eps, fp, fq, fz);
      return;
    case Mode::hamiltonian_time:
      fp = fq = 0.0;
      fz[0] = 1.0;
      return;
    case Mode::slow_fast: {
      // z = (y, x):  y' = -eps H_x,  x' = eps H_y
      std::array<double, 2> hz{};
      grad_z(p, q, z, hz.data());
      fp = fq = 0.0;
      fz[0] = -hz[1];
      fz[1] = hz[0];
      return;
    }
  }
}

void SystemDef::rhs(const double* y, double eps, double* dy) const {
  const double p = y[0], q = y[1];
  const double* z = y + 2;
  double Hp, Hq, fp, fq;
  grad_pq(p, q, z, Hp, Hq);
  perturbation(p, q, z, eps, fp, fq, dy + 2);
  dy[0] = -Hq + eps * fp;
  dy[1] = Hp + eps * fq;
  for (std::size_t k = 0; k < dim_z(); ++k) dy[2 + k] *= eps;
}

FrozenFields::FrozenFields(SystemPtr sys, const SaddleChart& chart)
    : sys_(std::move(sys)), z_(chart.z), h_C_(chart.h_C) {
  const std::size_t k = sys_->dim_z();
  Hz_C_.resize(k);
  f_zC_.resize(k);
  sys_->grad_z(chart.p_C, chart.q_C, z_.data(), Hz_C_.data());
  double fp, fq;
  sys_->perturbation(chart.p_C, chart.q_C, z_.data(), 0.0, fp, fq, f_zC_.data());
}

void FrozenFields::sample(double p, double q, FieldSample& out) const {
  const std::size_t k = sys_->dim_z();
  out.H = sys_->H(p, q, z_.data());
  out.h_C = h_C_;
  out.E = out.H - h_C_;
  sys_->grad_pq(p, q, z_.data(), out.Ep, out.Eq);
  out.Ez.resize(k);
  out.F_z.resize(k);
  out.f_z.resize(k);
  out.f_zC = f_zC_;
  sys_->grad_z(p, q, z_.data(), out.Ez.data());
  double fp, fq;
  sys_->perturbation(p, q, z_.data(), 0.0, fp, fq, out.f_z.data());
  // Envelope theorem: d h_C / dz = H_z at the saddle.
  out.f_h = out.Ep * fp + out.Eq * fq;
  for (std::size_t j = 0; j < k; ++j) {
    out.Ez[j] -= Hz_C_[j];
    out.f_h += out.Ez[j] * out.f_z[j];
    out.F_z[j] = out.f_z[j] - f_zC_[j];
  }
}

double FrozenFields::f_h(double p, double q) const {
  const std::size_t k = sys_->dim_z();
  std::array<double, kMaxDimZ> hz{}, fz{};
  double Hp, Hq, fp, fq;
  sys_->grad_pq(p, q, z_.data(), Hp, Hq);
  sys_->grad_z(p, q, z_.data(), hz.data());
  sys_->perturbation(p, q, z_.data(), 0.0, fp, fq, fz.data());
  double v = Hp * fp + Hq * fq;
  for (std::size_t j = 0; j < k; ++j) v += (hz[j] - Hz_C_[j]) * fz[j];
  return v;
}

FieldSample derived_fields(const SystemPtr& sys, const SaddleChart& chart, double p, double q) {
  FrozenFields ff(sys, chart);
  FieldSample out;
  ff.sample(p, q, out);
  return out;
}

}  // namespace sepcross
