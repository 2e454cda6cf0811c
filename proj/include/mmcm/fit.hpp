#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include <Eigen/Dense>

namespace mmcm {

/// Least-squares slope of log|y| against log|x|.
template <typename Scalar>
Scalar loglog_slope(std::span<const Scalar> xs, std::span<const Scalar> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("loglog_slope: size mismatch");
  if (xs.size() < 2) throw std::invalid_argument("loglog_slope: need at least two points");
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 2> design(n, 2);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rhs(n);
  using std::abs;
  using std::log;
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = log(abs(xs[static_cast<std::size_t>(i)]));
    design(i, 1) = 1;
    rhs(i) = log(abs(ys[static_cast<std::size_t>(i)]));
  }
  const Eigen::Matrix<Scalar, 2, 1> coef = design.colPivHouseholderQr().solve(rhs);
  return coef(0);
}

}  // namespace mmcm
