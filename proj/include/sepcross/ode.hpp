#pragma once

// Explicit Dormand-Prince 8(5,3) integrator with continuous extension of order 7,
// plus a root locator for switching functions evaluated on the dense output.

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace sepcross::ode {

using Rhs = std::function<void(double t, const double* y, double* dydt)>;

struct Options {
  double rtol = 1e-12;
  double atol = 1e-14;
  double first_step = 0.0;  // 0 selects automatically
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 50'000'000;
};

// Polynomial for a single accepted step.
struct DenseSegment {
  double t_old = 0.0;
  double h = 0.0;
  std::vector<double> y_old;
  std::vector<double> coef;  // 7 rows of length n

  std::size_t dim() const { return y_old.size(); }
  double t_new() const { return t_old + h; }
  void eval(double t, double* out) const;
  double eval(double t, std::size_t component) const;
};

enum class StepStatus { running, finished };

class Dop853 {
 public:
  Dop853(std::size_t n, Rhs f, Options opt = {});

  // The integration direction follows the sign of t_bound - t0.
  void reset(double t0, std::span<const double> y0, double t_bound);

  // One accepted step. Throws Error(integration) on step-size collapse.
  StepStatus step();

  double t() const { return t_; }
  double t_old() const { return t_old_; }
  std::span<const double> y() const { return y_; }
  std::span<const double> y_old() const { return y_old_; }
  std::span<const double> f() const { return f_; }
  std::size_t dim() const { return n_; }
  std::size_t nfev() const { return nfev_; }
  std::size_t steps() const { return steps_; }
  const Options& options() const { return opt_; }

  // Dense output inside the last step [t_old, t]. Extra stages are computed
  // on first use after each step.
  void dense(double t, double* out);
  const DenseSegment& segment();

 private:
  double initial_step() const;
  void prepare_dense();

  std::size_t n_;
  Rhs f_rhs_;
  Options opt_;
  double t_ = 0.0, t_old_ = 0.0, t_bound_ = 0.0, dir_ = 1.0;
  double h_abs_ = 0.0, h_prev_ = 0.0;
  std::vector<double> y_, y_old_, f_, f_old_;
  std::vector<double> k_;    // 16 x n stage derivatives
  std::vector<double> tmp_, ynew_, fnew_;
  DenseSegment seg_;
  bool dense_ready_ = false;
  std::size_t nfev_ = 0, steps_ = 0;
};

// Root of g on the last step of s, given g at both ends with opposite signs
// (or g_new == 0). Tolerance in t is a few ulps of max(1, |t|).
double locate_root(Dop853& s, const std::function<double(double, const double*)>& g, double g_old,
                   double g_new);

}  // namespace sepcross::ode
