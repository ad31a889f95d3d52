#pragma once

// Perturbed one-degree-of-freedom systems
//   q' = H_p + eps f_q,  p' = -H_q + eps f_p,  z' = eps f_z
// and the fields derived from them at a fixed saddle.

#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "sepcross/expr.hpp"

namespace sepcross {

enum class Mode { generic, hamiltonian_time, slow_fast };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct Box {
  double p_lo = -10.0, p_hi = 10.0;
  double q_lo = -10.0, q_hi = 10.0;
  std::vector<std::pair<double, double>> z;  // one interval per slow variable

  bool contains(double p, double q, const double* zv) const;
};

inline constexpr std::size_t kMaxDimZ = 8;

class SystemDef {
 public:
  virtual ~SystemDef() = default;

  const std::string& name() const { return name_; }
  Mode mode() const { return mode_; }
  std::size_t dim_z() const { return z_names_.size(); }
  const std::vector<std::string>& z_names() const { return z_names_; }
  const Box& box() const { return box_; }
  void set_box(Box b);

  virtual double H(double p, double q, const double* z) const = 0;
  virtual void grad_pq(double p, double q, const double* z, double& Hp, double& Hq) const = 0;
  virtual void hess_pq(double p, double q, const double* z, double& Hpp, double& Hpq,
                       double& Hqq) const = 0;
  virtual void grad_z(double p, double q, const double* z, double* Hz) const = 0;

  // Perturbation (f_p, f_q, f_z) at the given eps. Modes other than generic
  // fix it from H.
  void perturbation(double p, double q, const double* z, double eps, double& fp, double& fq,
                    double* fz) const;

  // Full right-hand side; y = (p, q, z...), dy likewise.
  void rhs(const double* y, double eps, double* dy) const;

  // Parameters and definitions echoed into outputs.
  virtual nlohmann::json describe() const = 0;

 protected:
  SystemDef(std::string name, Mode mode, std::vector<std::string> z_names);
  virtual void generic_perturbation(double p, double q, const double* z, double eps, double& fp,
                                    double& fq, double* fz) const;

 private:
  std::string name_;
  Mode mode_;
  std::vector<std::string> z_names_;
  Box box_;
};

using SystemPtr = std::shared_ptr<const SystemDef>;

// Model description: either a catalog name with parameters or expression strings.
struct ModelConfig {
  std::string name;
  std::string catalog;  // empty for expression models
  std::map<std::string, double, std::less<>> params;
  Mode mode = Mode::generic;
  std::vector<std::string> z_names;
  std::string H, f_p, f_q;
  std::vector<std::string> f_z;
  Box box;
  bool has_box = false;
};

SystemPtr build_system(const ModelConfig& cfg);
SystemPtr catalog_system(const std::string& name,
                         const std::map<std::string, double, std::less<>>& params = {});
std::vector<std::string> catalog_names();

struct SaddleChart;

struct FieldSample {
  double H = 0.0, h_C = 0.0, E = 0.0;
  double Ep = 0.0, Eq = 0.0;
  std::vector<double> Ez;
  double f_h = 0.0;
  std::vector<double> F_z;
  std::vector<double> f_zC;
  std::vector<double> f_z;
};

// Field evaluator frozen at one saddle chart; perturbations taken at eps = 0.
class FrozenFields {
 public:
  FrozenFields(SystemPtr sys, const SaddleChart& chart);

  const SystemDef& system() const { return *sys_; }
  const std::vector<double>& z() const { return z_; }
  double h_C() const { return h_C_; }
  const std::vector<double>& f_zC() const { return f_zC_; }

  double E(double p, double q) const { return sys_->H(p, q, z_.data()) - h_C_; }
  void sample(double p, double q, FieldSample& out) const;
  // f_h only; avoids the vector fields.
  double f_h(double p, double q) const;

 private:
  SystemPtr sys_;
  std::vector<double> z_;
  double h_C_;
  std::vector<double> Hz_C_;
  std::vector<double> f_zC_;
};

FieldSample derived_fields(const SystemPtr& sys, const SaddleChart& chart, double p, double q);

}  // namespace sepcross
