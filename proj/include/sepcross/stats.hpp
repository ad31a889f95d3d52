#pragma once

// Small statistics helpers used by the sweep drivers and acceptance checks.

#include <span>
#include <utility>

namespace sepcross::stats {

double mean(std::span<const double> x);
double median(std::span<const double> x);
double rms(std::span<const double> x);
double stddev(std::span<const double> x);

// Wilson score interval for k successes in n trials at z standard deviations.
std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z = 1.96);

struct KsResult {
  double D = 0.0;
  double p = 1.0;
};
// One-sample Kolmogorov-Smirnov test against U(0, 1), asymptotic p-value
// with the Stephens small-sample correction.
KsResult ks_uniform(std::span<const double> x);

struct LineFit {
  double slope = 0.0, intercept = 0.0;
  double slope_se = 0.0;
};
LineFit linear_fit(std::span<const double> x, std::span<const double> y);
// Slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace sepcross::stats
