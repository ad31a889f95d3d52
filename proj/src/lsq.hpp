#pragma once

// Small dense least-squares fits with column scaling.

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace sepcross::lsq {

struct Fit {
  std::vector<double> coef;
  double residual_rms = 0.0;
};

// Fits y ~ sum_j c_j basis_j(x_i).
inline Fit fit(const std::vector<double>& x, const std::vector<double>& y,
               const std::vector<std::function<double(double)>>& basis) {
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  const Eigen::Index m = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd A(n, m);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) A(i, j) = basis[j](x[i]);
    b(i) = y[i];
  }
  Eigen::VectorXd scale = A.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < m; ++j) {
    if (scale(j) == 0.0) scale(j) = 1.0;
    A.col(j) /= scale(j);
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  Fit out;
  out.coef.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) out.coef[j] = c(j) / scale(j);
  out.residual_rms = std::sqrt((A * c - b).squaredNorm() / static_cast<double>(n));
  return out;
}

}  // namespace sepcross::lsq
