#include "sepcross/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "dop853_tableau.hpp"
#include "sepcross/error.hpp"

namespace sepcross::ode {

namespace {

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;
constexpr double kErrorExponent = -1.0 / 8.0;
constexpr int kPower = 7;

double rms(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

void DenseSegment::eval(double t, double* out) const {
  const std::size_t n = dim();
  const double x = h == 0.0 ? 0.0 : (t - t_old) / h;
  for (std::size_t j = 0; j < n; ++j) {
    double y = 0.0;
    for (int i = 0; i < kPower; ++i) {
      y += coef[static_cast<std::size_t>(kPower - 1 - i) * n + j];
      y *= (i % 2 == 0) ? x : (1.0 - x);
    }
    out[j] = y + y_old[j];
  }
}

double DenseSegment::eval(double t, std::size_t component) const {
  const std::size_t n = dim();
  const double x = h == 0.0 ? 0.0 : (t - t_old) / h;
  double y = 0.0;
  for (int i = 0; i < kPower; ++i) {
    y += coef[static_cast<std::size_t>(kPower - 1 - i) * n + component];
    y *= (i % 2 == 0) ? x : (1.0 - x);
  }
  return y + y_old[component];
}

Dop853::Dop853(std::size_t n, Rhs f, Options opt)
    : n_(n),
      f_rhs_(std::move(f)),
      opt_(opt),
      y_(n),
      y_old_(n),
      f_(n),
      f_old_(n),
      k_(16 * n),
      tmp_(n),
      ynew_(n),
      fnew_(n) {
  seg_.y_old.resize(n);
  seg_.coef.resize(kPower * n);
}

void Dop853::reset(double t0, std::span<const double> y0, double t_bound) {
  if (y0.size() != n_) throw Error(ErrorKind::integration, "state dimension mismatch");
  t_ = t_old_ = t0;
  t_bound_ = t_bound;
  dir_ = t_bound >= t0 ? 1.0 : -1.0;
  std::copy(y0.begin(), y0.end(), y_.begin());
  f_rhs_(t_, y_.data(), f_.data());
  ++nfev_;
  h_abs_ = opt_.first_step > 0.0 ? opt_.first_step : initial_step();
  h_abs_ = std::min(h_abs_, opt_.max_step);
  h_prev_ = 0.0;
  dense_ready_ = false;
  steps_ = 0;
}

double Dop853::initial_step() const {
  if (t_bound_ == t_) return 0.0;
  std::vector<double> s0(n_), s1(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    const double scale = opt_.atol + std::abs(y_[i]) * opt_.rtol;
    s0[i] = y_[i] / scale;
    s1[i] = f_[i] / scale;
  }
  const double d0 = rms(s0), d1 = rms(s1);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, std::abs(t_bound_ - t_));
  std::vector<double> y1(n_), f1(n_);
  for (std::size_t i = 0; i < n_; ++i) y1[i] = y_[i] + h0 * dir_ * f_[i];
  f_rhs_(t_ + h0 * dir_, y1.data(), f1.data());
  for (std::size_t i = 0; i < n_; ++i) {
    const double scale = opt_.atol + std::abs(y_[i]) * opt_.rtol;
    s0[i] = (f1[i] - f_[i]) / scale;
  }
  const double d2 = rms(s0) / h0;
  double h1;
  if (d1 <= 1e-15 && d2 <= 1e-15) {
    h1 = std::max(1e-6, h0 * 1e-3);
  } else {
    h1 = std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
  }
  return std::min({100.0 * h0, h1, std::abs(t_bound_ - t_)});
}

StepStatus Dop853::step() {
  using namespace dop853;
  if (t_ == t_bound_) return StepStatus::finished;
  if (steps_ >= opt_.max_steps) throw Error(ErrorKind::integration, "step budget exhausted");

  const double min_step = 10.0 * std::abs(std::nextafter(t_, dir_ * INFINITY) - t_);
  double h_abs = std::clamp(h_abs_, min_step, opt_.max_step);
  bool rejected = false;

  for (;;) {
    if (h_abs < min_step) {
      throw Error(ErrorKind::integration, "step size collapsed at t = " + std::to_string(t_));
    }
    double h = h_abs * dir_;
    double t_new = t_ + h;
    if (dir_ * (t_new - t_bound_) > 0.0) t_new = t_bound_;
    h = t_new - t_;
    h_abs = std::abs(h);

    std::copy(f_.begin(), f_.end(), k_.begin());
    for (int s = 1; s < kStages; ++s) {
      for (std::size_t j = 0; j < n_; ++j) {
        double acc = 0.0;
        for (int r = 0; r < s; ++r) acc += A[s][r] * k_[static_cast<std::size_t>(r) * n_ + j];
        tmp_[j] = y_[j] + h * acc;
      }
      f_rhs_(t_ + C[s] * h, tmp_.data(), k_.data() + static_cast<std::size_t>(s) * n_);
    }
    for (std::size_t j = 0; j < n_; ++j) {
      double acc = 0.0;
      for (int r = 0; r < kStages; ++r) acc += B[r] * k_[static_cast<std::size_t>(r) * n_ + j];
      ynew_[j] = y_[j] + h * acc;
    }
    f_rhs_(t_new, ynew_.data(), fnew_.data());
    std::copy(fnew_.begin(), fnew_.end(), k_.begin() + static_cast<std::ptrdiff_t>(kStages * n_));
    nfev_ += kStages;

    double e5 = 0.0, e3 = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      const double scale = opt_.atol + std::max(std::abs(y_[j]), std::abs(ynew_[j])) * opt_.rtol;
      double a5 = 0.0, a3 = 0.0;
      for (int r = 0; r <= kStages; ++r) {
        a5 += E5[r] * k_[static_cast<std::size_t>(r) * n_ + j];
        a3 += E3[r] * k_[static_cast<std::size_t>(r) * n_ + j];
      }
      e5 += (a5 / scale) * (a5 / scale);
      e3 += (a3 / scale) * (a3 / scale);
    }
    double err = 0.0;
    if (e5 > 0.0 || e3 > 0.0) {
      err = h_abs * e5 / std::sqrt((e5 + 0.01 * e3) * static_cast<double>(n_));
    }
    if (!std::isfinite(err)) err = 1e10;

    if (err < 1.0) {
      double factor = err == 0.0 ? kMaxFactor
                                 : std::min(kMaxFactor, kSafety * std::pow(err, kErrorExponent));
      if (rejected) factor = std::min(1.0, factor);
      h_abs_ = h_abs * factor;
      h_prev_ = h;
      t_old_ = t_;
      t_ = t_new;
      y_old_.swap(y_);
      y_.swap(ynew_);
      f_old_.swap(f_);
      f_.swap(fnew_);
      dense_ready_ = false;
      ++steps_;
      return t_ == t_bound_ ? StepStatus::finished : StepStatus::running;
    }
    h_abs *= std::max(kMinFactor, kSafety * std::pow(err, kErrorExponent));
    rejected = true;
  }
}

void Dop853::prepare_dense() {
  using namespace dop853;
  if (dense_ready_) return;
  const double h = h_prev_;
  for (int s = kStages + 1; s < kExtraStages; ++s) {
    for (std::size_t j = 0; j < n_; ++j) {
      double acc = 0.0;
      for (int r = 0; r < s; ++r) acc += A[s][r] * k_[static_cast<std::size_t>(r) * n_ + j];
      tmp_[j] = y_old_[j] + h * acc;
    }
    f_rhs_(t_old_ + C[s] * h, tmp_.data(), k_.data() + static_cast<std::size_t>(s) * n_);
  }
  nfev_ += kExtraStages - kStages - 1;
  seg_.t_old = t_old_;
  seg_.h = h;
  std::copy(y_old_.begin(), y_old_.end(), seg_.y_old.begin());
  for (std::size_t j = 0; j < n_; ++j) {
    const double dy = y_[j] - y_old_[j];
    seg_.coef[0 * n_ + j] = dy;
    seg_.coef[1 * n_ + j] = h * f_old_[j] - dy;
    seg_.coef[2 * n_ + j] = 2.0 * dy - h * (f_[j] + f_old_[j]);
    for (int r = 0; r < 4; ++r) {
      double acc = 0.0;
      for (int s = 0; s < kExtraStages; ++s) acc += D[r][s] * k_[static_cast<std::size_t>(s) * n_ + j];
      seg_.coef[static_cast<std::size_t>(3 + r) * n_ + j] = h * acc;
    }
  }
  dense_ready_ = true;
}

void Dop853::dense(double t, double* out) {
  prepare_dense();
  seg_.eval(t, out);
}

const DenseSegment& Dop853::segment() {
  prepare_dense();
  return seg_;
}

double locate_root(Dop853& s, const std::function<double(double, const double*)>& g, double g_old,
                   double g_new) {
  if (g_new == 0.0) return s.t();
  if (g_old == 0.0) return s.t_old();
  const DenseSegment& seg = s.segment();
  std::vector<double> y(s.dim());
  auto fn = [&](double t) {
    seg.eval(t, y.data());
    return g(t, y.data());
  };
  double a = s.t_old(), b = s.t();
  double fa = g_old, fb = g_new;
  if (a > b) {
    std::swap(a, b);
    std::swap(fa, fb);
  }
  std::uintmax_t iters = 200;
  auto r = boost::math::tools::toms748_solve(fn, a, b, fa, fb,
                                             boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (r.first + r.second);
}

}  // namespace sepcross::ode
