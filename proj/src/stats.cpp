#include "sepcross/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sepcross/error.hpp"

namespace sepcross::stats {

namespace {
void require_nonempty(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorKind::domain, "statistic of an empty sample");
}
}  // namespace

double mean(std::span<const double> x) {
  require_nonempty(x);
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double median(std::span<const double> x) {
  require_nonempty(x);
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double rms(std::span<const double> x) {
  require_nonempty(x);
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

double stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n), p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * nn)) / (1.0 + z2 / nn);
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / (1.0 + z2 / nn);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

KsResult ks_uniform(std::span<const double> x) {
  require_nonempty(x);
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double D = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double F = std::clamp(v[i], 0.0, 1.0);
    D = std::max({D, (static_cast<double>(i) + 1.0) / n - F, F - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  const double lam = (sn + 0.12 + 0.11 / sn) * D;
  double p = 0.0;
  if (lam < 0.2) {
    p = 1.0;
  } else {
    for (int k = 1; k <= 100; ++k) {
      const double term = std::exp(-2.0 * k * k * lam * lam);
      p += (k % 2 ? 2.0 : -2.0) * term;
      if (term < 1e-16) break;
    }
    p = std::clamp(p, 0.0, 1.0);
  }
  return {D, p};
}

LineFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorKind::domain, "line fit needs two or more paired points");
  }
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorKind::domain, "line fit with constant abscissa");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      ss += r * r;
    }
    f.slope_se = std::sqrt(ss / static_cast<double>(x.size() - 2) / sxx);
  }
  return f;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error(ErrorKind::domain, "log-log fit needs positive data");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return linear_fit(lx, ly).slope;
}

}  // namespace sepcross::stats
