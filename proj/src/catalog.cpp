#include <algorithm>
#include <array>
#include <cmath>

#include "sepcross/error.hpp"
#include "sepcross/model.hpp"

namespace sepcross {

namespace {

using Params = std::map<std::string, double, std::less<>>;

double param(const Params& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

void reject_unknown(const Params& p, std::initializer_list<std::string_view> known,
                    const std::string& model) {
  for (const auto& [k, v] : p) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw Error(ErrorKind::model, "model '" + model + "' has no parameter '" + k + "'");
    }
  }
}

// H = p^2/2 - q^2/2 + q^4/4, f_p = -gamma p, z = (tau), f_z = 1.
class DuffingDissipative final : public SystemDef {
 public:
  explicit DuffingDissipative(double gamma)
      : SystemDef("duffing_dissipative", Mode::generic, {"tau"}), gamma_(gamma) {}

  double H(double p, double q, const double*) const override {
    return 0.5 * p * p - 0.5 * q * q + 0.25 * q * q * q * q;
  }
  void grad_pq(double p, double q, const double*, double& Hp, double& Hq) const override {
    Hp = p;
    Hq = -q + q * q * q;
  }
  void hess_pq(double, double q, const double*, double& Hpp, double& Hpq,
               double& Hqq) const override {
    Hpp = 1.0;
    Hpq = 0.0;
    Hqq = -1.0 + 3.0 * q * q;
  }
  void grad_z(double, double, const double*, double* Hz) const override { Hz[0] = 0.0; }
  nlohmann::json describe() const override {
    return {{"catalog", name()}, {"params", {{"gamma", gamma_}}}};
  }

 protected:
  void generic_perturbation(double p, double, const double*, double, double& fp, double& fq,
                            double* fz) const override {
    fp = -gamma_ * p;
    fq = 0.0;
    fz[0] = 1.0;
  }

 private:
  double gamma_;
};

// H = p^2/2 + zeta(tau) (-q^2/2 + c q^3/3 + q^4/4), zeta = 1 + rate tau.
class DuffingBreathingAsym final : public SystemDef {
 public:
  DuffingBreathingAsym(double c, double rate)
      : SystemDef("duffing_breathing_asym", Mode::hamiltonian_time, {"tau"}), c_(c), rate_(rate) {}

  double V(double q) const { return -0.5 * q * q + c_ * q * q * q / 3.0 + 0.25 * q * q * q * q; }
  double zeta(const double* z) const { return 1.0 + rate_ * z[0]; }

  double H(double p, double q, const double* z) const override {
    return 0.5 * p * p + zeta(z) * V(q);
  }
  void grad_pq(double p, double q, const double* z, double& Hp, double& Hq) const override {
    Hp = p;
    Hq = zeta(z) * q * (-1.0 + c_ * q + q * q);
  }
  void hess_pq(double, double q, const double* z, double& Hpp, double& Hpq,
               double& Hqq) const override {
    Hpp = 1.0;
    Hpq = 0.0;
    Hqq = zeta(z) * (-1.0 + 2.0 * c_ * q + 3.0 * q * q);
  }
  void grad_z(double, double q, const double*, double* Hz) const override { Hz[0] = rate_ * V(q); }
  nlohmann::json describe() const override {
    return {{"catalog", name()}, {"params", {{"c", c_}, {"rate", rate_}}}};
  }

 private:
  double c_, rate_;
};

// H = p^2/2 - q^2/2 + q^4/4 + x q + y^2/2, z = (y, x).
class DuffingSlowFast final : public SystemDef {
 public:
  DuffingSlowFast() : SystemDef("duffing_slowfast", Mode::slow_fast, {"y", "x"}) {}

  double H(double p, double q, const double* z) const override {
    return 0.5 * p * p - 0.5 * q * q + 0.25 * q * q * q * q + z[1] * q + 0.5 * z[0] * z[0];
  }
  void grad_pq(double p, double q, const double* z, double& Hp, double& Hq) const override {
    Hp = p;
    Hq = -q + q * q * q + z[1];
  }
  void hess_pq(double, double q, const double*, double& Hpp, double& Hpq,
               double& Hqq) const override {
    Hpp = 1.0;
    Hpq = 0.0;
    Hqq = -1.0 + 3.0 * q * q;
  }
  void grad_z(double, double q, const double* z, double* Hz) const override {
    Hz[0] = z[0];
    Hz[1] = q;
  }
  nlohmann::json describe() const override { return {{"catalog", name()}, {"params", nlohmann::json::object()}}; }
};

// H = p^2/2 + (1 + x)(-q^2/2 + q^4/4) + c y q^3/3 + y^2/2, z = (y, x).
// Saddle pinned at the origin with h_C = y^2/2; the loops grow with x and the
// y-dependent cubic makes them unequal.
class DuffingSlowFastBreathing final : public SystemDef {
 public:
  explicit DuffingSlowFastBreathing(double c)
      : SystemDef("duffing_slowfast_breathing", Mode::slow_fast, {"y", "x"}), c_(c) {}

  double H(double p, double q, const double* z) const override {
    const double q2 = q * q;
    return 0.5 * p * p + (1.0 + z[1]) * (-0.5 * q2 + 0.25 * q2 * q2) + c_ * z[0] * q2 * q / 3.0 +
           0.5 * z[0] * z[0];
  }
  void grad_pq(double p, double q, const double* z, double& Hp, double& Hq) const override {
    Hp = p;
    Hq = (1.0 + z[1]) * (-q + q * q * q) + c_ * z[0] * q * q;
  }
  void hess_pq(double, double q, const double* z, double& Hpp, double& Hpq,
               double& Hqq) const override {
    Hpp = 1.0;
    Hpq = 0.0;
    Hqq = (1.0 + z[1]) * (-1.0 + 3.0 * q * q) + 2.0 * c_ * z[0] * q;
  }
  void grad_z(double, double q, const double* z, double* Hz) const override {
    const double q2 = q * q;
    Hz[0] = c_ * q2 * q / 3.0 + z[0];
    Hz[1] = -0.5 * q2 + 0.25 * q2 * q2;
  }
  nlohmann::json describe() const override {
    return {{"catalog", name()}, {"params", {{"c", c_}}}};
  }

 private:
  double c_;
};

// Expression-defined model; all partials by symbolic differentiation.
class ExprSystem final : public SystemDef {
 public:
  explicit ExprSystem(const ModelConfig& cfg)
      : SystemDef(cfg.name.empty() ? "expression" : cfg.name, cfg.mode, cfg.z_names),
        cfg_(cfg) {
    vars_ = {"p", "q"};
    for (const auto& z : cfg.z_names) {
      if (z == "p" || z == "q" || z == "eps") {
        throw Error(ErrorKind::model, "slow variable may not be named '" + z + "'");
      }
      vars_.push_back(z);
    }
    vars_.push_back("eps");
    expr::Constants constants(cfg.params.begin(), cfg.params.end());
    if (cfg.H.empty()) throw Error(ErrorKind::model, "expression model needs H");
    H_ = expr::parse(cfg.H, vars_, constants);
    Hp_ = expr::differentiate(H_, "p");
    Hq_ = expr::differentiate(H_, "q");
    Hpp_ = expr::differentiate(Hp_, "p");
    Hpq_ = expr::differentiate(Hp_, "q");
    Hqq_ = expr::differentiate(Hq_, "q");
    for (const auto& z : cfg.z_names) Hz_.push_back(expr::differentiate(H_, z));
    if (cfg.mode == Mode::generic) {
      if (cfg.f_z.size() != cfg.z_names.size()) {
        throw Error(ErrorKind::model, "f_z has " + std::to_string(cfg.f_z.size()) +
                                          " components but z has " +
                                          std::to_string(cfg.z_names.size()));
      }
      fp_ = expr::parse(cfg.f_p.empty() ? "0" : cfg.f_p, vars_, constants);
      fq_ = expr::parse(cfg.f_q.empty() ? "0" : cfg.f_q, vars_, constants);
      for (const auto& s : cfg.f_z) fz_.push_back(expr::parse(s, vars_, constants));
    } else if (!cfg.f_p.empty() || !cfg.f_q.empty() || !cfg.f_z.empty()) {
      throw Error(ErrorKind::model, "mode " + to_string(cfg.mode) +
                                        " derives the perturbation from H; remove f_p/f_q/f_z");
    }
  }

  double H(double p, double q, const double* z) const override { return eval(H_, p, q, z, 0.0); }
  void grad_pq(double p, double q, const double* z, double& Hp, double& Hq) const override {
    Hp = eval(Hp_, p, q, z, 0.0);
    Hq = eval(Hq_, p, q, z, 0.0);
  }
  void hess_pq(double p, double q, const double* z, double& Hpp, double& Hpq,
               double& Hqq) const override {
    Hpp = eval(Hpp_, p, q, z, 0.0);
    Hpq = eval(Hpq_, p, q, z, 0.0);
    Hqq = eval(Hqq_, p, q, z, 0.0);
  }
  void grad_z(double p, double q, const double* z, double* Hz) const override {
    for (std::size_t k = 0; k < Hz_.size(); ++k) Hz[k] = eval(Hz_[k], p, q, z, 0.0);
  }
  nlohmann::json describe() const override {
    nlohmann::json j{{"H", cfg_.H}, {"mode", to_string(cfg_.mode)}, {"z", cfg_.z_names}};
    if (cfg_.mode == Mode::generic) {
      j["f_p"] = cfg_.f_p.empty() ? "0" : cfg_.f_p;
      j["f_q"] = cfg_.f_q.empty() ? "0" : cfg_.f_q;
      j["f_z"] = cfg_.f_z;
    }
    j["params"] = nlohmann::json(cfg_.params);
    return j;
  }

 protected:
  void generic_perturbation(double p, double q, const double* z, double eps, double& fp, double& fq,
                            double* fz) const override {
    fp = eval(fp_, p, q, z, eps);
    fq = eval(fq_, p, q, z, eps);
    for (std::size_t k = 0; k < fz_.size(); ++k) fz[k] = eval(fz_[k], p, q, z, eps);
  }

 private:
  double eval(const expr::Expr& e, double p, double q, const double* z, double eps) const {
    std::array<double, kMaxDimZ + 3> v{};
    v[0] = p;
    v[1] = q;
    const std::size_t k = dim_z();
    for (std::size_t j = 0; j < k; ++j) v[2 + j] = z[j];
    v[2 + k] = eps;
    return e.evaluate(std::span<const double>(v.data(), k + 3));
  }

  ModelConfig cfg_;
  std::vector<std::string> vars_;
  expr::Expr H_, Hp_, Hq_, Hpp_, Hpq_, Hqq_, fp_, fq_;
  std::vector<expr::Expr> Hz_, fz_;
};

}  // namespace

std::vector<std::string> catalog_names() {
  return {"duffing_dissipative", "duffing_breathing_asym", "duffing_slowfast",
          "duffing_slowfast_breathing"};
}

SystemPtr catalog_system(const std::string& name, const Params& params) {
  if (name == "duffing_dissipative") {
    reject_unknown(params, {"gamma"}, name);
    return std::make_shared<DuffingDissipative>(param(params, "gamma", 1.0));
  }
  if (name == "duffing_breathing_asym") {
    reject_unknown(params, {"c", "rate"}, name);
    return std::make_shared<DuffingBreathingAsym>(param(params, "c", 0.2), param(params, "rate", 0.5));
  }
  if (name == "duffing_slowfast") {
    reject_unknown(params, {}, name);
    return std::make_shared<DuffingSlowFast>();
  }
  if (name == "duffing_slowfast_breathing") {
    reject_unknown(params, {"c"}, name);
    return std::make_shared<DuffingSlowFastBreathing>(param(params, "c", 0.3));
  }
  throw Error(ErrorKind::model, "unknown catalog model '" + name + "'");
}

SystemPtr build_system(const ModelConfig& cfg) {
  std::shared_ptr<SystemDef> sys;
  if (!cfg.catalog.empty() && cfg.H.empty()) {
    auto base = catalog_system(cfg.catalog, cfg.params);
    sys = std::const_pointer_cast<SystemDef>(base);
  } else {
    sys = std::make_shared<ExprSystem>(cfg);
  }
  if (cfg.has_box) sys->set_box(cfg.box);
  return sys;
}

}  // namespace sepcross
