// SPDX-License-Identifier: Apache-2.0
//
// Dense complex kernels shared by every design algorithm: Hermitian square
// roots, truncated eigenbases, orthogonal projectors and the Procrustes
// unitary. All functions are pure and accept any Eigen expression.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "hbf/error.hpp"
#include "hbf/types.hpp"

namespace hbf {

template <typename Derived>
using RealOf = typename Eigen::NumTraits<typename Derived::Scalar>::Real;

template <typename Derived>
auto hermitian_defect(const Eigen::MatrixBase<Derived>& m) {
  using Real = RealOf<Derived>;
  const Real norm = m.norm();
  if (norm == Real(0)) return Real(0);
  return Real((m - m.adjoint()).norm() / norm);
}

/// Throws NotHermitian unless ||M - M*||_F <= tol * ||M||_F, then returns (M + M*)/2.
template <typename Derived>
CMat<RealOf<Derived>> hermitize(const Eigen::MatrixBase<Derived>& m, double tol = 1e-9) {
  using Real = RealOf<Derived>;
  if (m.rows() != m.cols()) fail(ErrorCode::NotSquare, "Hermitian input must be square");
  CMat<Real> mm = m;
  if (hermitian_defect(mm) > scaled_tol<Real>(tol)) fail(ErrorCode::NotHermitian, "matrix is not Hermitian within tolerance");
  return (mm + mm.adjoint()) / Real(2);
}

template <typename Real>
struct HermitianFactor {
  CMat<Real> base;
  CMat<Real> sqrt;
  std::optional<CMat<Real>> inv_sqrt;
};

/// Principal PSD square root through an eigendecomposition. Small negative
/// eigenvalues (above -1e-12 of the spectral radius) are clamped to zero; the
/// inverse root, when requested, needs every eigenvalue above that same cut.
template <typename Derived>
HermitianFactor<RealOf<Derived>> hermitian_sqrt(const Eigen::MatrixBase<Derived>& m, bool need_inverse) {
  using Real = RealOf<Derived>;
  HermitianFactor<Real> out;
  out.base = hermitize(m);
  Eigen::SelfAdjointEigenSolver<CMat<Real>> es(out.base);
  const RVec<Real>& lambda = es.eigenvalues();
  const Real scale = lambda.cwiseAbs().maxCoeff();
  const Real cut = scaled_tol<Real>(1e-12) * scale;
  if (lambda.minCoeff() < -cut) fail(ErrorCode::NotPSD, "eigenvalue below the PSD tolerance");

  const RVec<Real> root = lambda.cwiseMax(Real(0)).cwiseSqrt();
  const CMat<Real>& vecs = es.eigenvectors();
  out.sqrt = vecs * root.template cast<std::complex<Real>>().asDiagonal() * vecs.adjoint();
  if (need_inverse) {
    if (scale == Real(0) || lambda.minCoeff() <= cut)
      fail(ErrorCode::SingularForInverse, "inverse square root of a singular matrix");
    const RVec<Real> inv_root = root.cwiseInverse();
    out.inv_sqrt = vecs * inv_root.template cast<std::complex<Real>>().asDiagonal() * vecs.adjoint();
  }
  return out;
}

template <typename Real>
struct EigenBasis {
  CMat<Real> vectors;  // orthonormal columns, descending eigenvalue order
  RVec<Real> values;
};

/// Rotates every column so its first entry with magnitude above 1e-9 is real
/// and nonnegative.
template <typename Real>
void fix_column_phases(CMat<Real>& v) {
  const Real floor = scaled_tol<Real>(1e-9);
  for (Index j = 0; j < v.cols(); ++j) {
    for (Index i = 0; i < v.rows(); ++i) {
      const Real mag = std::abs(v(i, j));
      if (mag > floor) {
        v.col(j) *= std::conj(v(i, j)) / mag;
        v(i, j) = std::complex<Real>(mag, Real(0));
        break;
      }
    }
  }
}

/// Eigenvectors of the k largest eigenvalues of a Hermitian matrix.
template <typename Derived>
EigenBasis<RealOf<Derived>> top_eigvecs(const Eigen::MatrixBase<Derived>& m, Index k) {
  using Real = RealOf<Derived>;
  const CMat<Real> h = hermitize(m);
  const Index n = h.rows();
  if (k < 1 || k > n) fail(ErrorCode::KOutOfRange, "k must lie in [1, dim]");
  Eigen::SelfAdjointEigenSolver<CMat<Real>> es(h);
  const RVec<Real>& lambda = es.eigenvalues();  // ascending

  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = n - 1 - i;
  // Within a near-degenerate cluster fall back to the solver's own index order.
  const Real gap = scaled_tol<Real>(1e-10) * lambda.cwiseAbs().maxCoeff();
  std::size_t begin = 0;
  while (begin < order.size()) {
    std::size_t end = begin + 1;
    while (end < order.size() && lambda(order[end - 1]) - lambda(order[end]) < gap) ++end;
    std::sort(order.begin() + static_cast<std::ptrdiff_t>(begin), order.begin() + static_cast<std::ptrdiff_t>(end));
    begin = end;
  }

  EigenBasis<Real> out;
  out.vectors.resize(n, k);
  out.values.resize(k);
  for (Index j = 0; j < k; ++j) {
    out.vectors.col(j) = es.eigenvectors().col(order[static_cast<std::size_t>(j)]);
    out.values(j) = lambda(order[static_cast<std::size_t>(j)]);
  }
  fix_column_phases(out.vectors);
  return out;
}

/// Orthonormal basis of range(X); singular values at or below 1e-12 of the
/// largest are treated as zero.
template <typename Derived>
CMat<RealOf<Derived>> orth_basis(const Eigen::MatrixBase<Derived>& x) {
  using Real = RealOf<Derived>;
  const CMat<Real> xx = x;
  if (xx.size() == 0 || xx.cwiseAbs().maxCoeff() == Real(0)) fail(ErrorCode::ZeroMatrix, "range of a zero matrix");
  Eigen::JacobiSVD<CMat<Real>> svd(xx, Eigen::ComputeThinU);
  const RVec<Real>& s = svd.singularValues();
  const Real cut = scaled_tol<Real>(1e-12) * s(0);
  Index rank = 0;
  while (rank < s.size() && s(rank) > cut) ++rank;
  return svd.matrixU().leftCols(rank);
}

template <typename Derived>
CMat<RealOf<Derived>> orth_projector(const Eigen::MatrixBase<Derived>& x) {
  const auto q = orth_basis(x);
  return q * q.adjoint();
}

/// Unitary T maximising Re tr(M T): with M = U S V*, T = V U*.
template <typename Derived>
CMat<RealOf<Derived>> procrustes_unitary(const Eigen::MatrixBase<Derived>& m) {
  using Real = RealOf<Derived>;
  if (m.rows() != m.cols()) fail(ErrorCode::NotSquare, "Procrustes needs a square matrix");
  Eigen::JacobiSVD<CMat<Real>> svd(CMat<Real>(m), Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixV() * svd.matrixU().adjoint();
}

template <typename Derived>
RealOf<Derived> nuclear_norm(const Eigen::MatrixBase<Derived>& m) {
  using Real = RealOf<Derived>;
  Eigen::JacobiSVD<CMat<Real>> svd{CMat<Real>(m)};
  return svd.singularValues().sum();
}

/// Smallest over largest singular value; 0 for a zero matrix.
template <typename Derived>
RealOf<Derived> column_rank_ratio(const Eigen::MatrixBase<Derived>& m) {
  using Real = RealOf<Derived>;
  Eigen::JacobiSVD<CMat<Real>> svd{CMat<Real>(m)};
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == Real(0) || m.cols() > m.rows()) return Real(0);
  return s(s.size() - 1) / s(0);
}

/// Solves the Hermitian positive-definite system G X = R; throws `code` when
/// G's smallest eigenvalue is at or below `rel_cut` times its largest.
template <typename Real>
CMat<Real> hpd_solve(const CMat<Real>& g, const CMat<Real>& rhs, double rel_cut, ErrorCode code) {
  const CMat<Real> h = (g + g.adjoint()) / Real(2);
  Eigen::SelfAdjointEigenSolver<CMat<Real>> es(h, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const Real top = ev.cwiseAbs().maxCoeff();
  if (!(top > Real(0)) || ev(0) <= scaled_tol<Real>(rel_cut) * top) fail(code, "Gram matrix is singular");
  return h.ldlt().solve(rhs);
}

}  // namespace hbf
