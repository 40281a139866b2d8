#pragma once

#include <Eigen/Core>

#include <cmath>

namespace hdrpoly {

// Coefficients c_0..c_N in increasing power order.
using Coefficients = Eigen::VectorXd;

// sum_n c_n x^n by Horner's scheme.
template <typename Derived, typename Scalar>
Scalar horner(const Eigen::DenseBase<Derived>& coeffs, Scalar x) {
  const Eigen::Index n = coeffs.size();
  if (n == 0) return Scalar(0);
  Scalar acc = static_cast<Scalar>(coeffs[n - 1]);
  for (Eigen::Index k = n - 2; k >= 0; --k) {
    acc = acc * x + static_cast<Scalar>(coeffs[k]);
  }
  return acc;
}

// Same polynomial, summed term by term. Only used as a cross-check of horner().
template <typename Derived, typename Scalar>
Scalar power_sum(const Eigen::DenseBase<Derived>& coeffs, Scalar x) {
  Scalar sum(0);
  for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
    sum += static_cast<Scalar>(coeffs[k]) * std::pow(x, Scalar(k));
  }
  return sum;
}

}  // namespace hdrpoly
