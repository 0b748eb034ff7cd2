// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <limits>

#include <Eigen/Dense>

namespace hbf {

template <typename Real>
using CMat = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using CVec = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using RVec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

using ComplexMatrix = CMat<double>;
using ComplexVector = CVec<double>;
using RealVector = RVec<double>;

using Index = Eigen::Index;

/// Relative tolerances are written for double; narrower types scale them by
/// the ratio of machine epsilons.
template <typename Real>
constexpr Real scaled_tol(double tol_for_double) {
  return static_cast<Real>(tol_for_double * (static_cast<double>(std::numeric_limits<Real>::epsilon()) /
                                             std::numeric_limits<double>::epsilon()));
}

template <typename Real>
CMat<Real> identity(Index n) {
  return CMat<Real>::Identity(n, n);
}

}  // namespace hbf
