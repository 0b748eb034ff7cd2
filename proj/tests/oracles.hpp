// SPDX-License-Identifier: Apache-2.0
//
// Independent reference computations for the tests. Nothing here calls the
// library's solvers: inverses go through Eigen's generic LU, projections are
// enumerated and unitaries come from QR of Gaussian matrices.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& g) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = cd(n(g), n(g));
  return m;
}

/// Haar-ish unitary: Q of a Gaussian matrix with R's diagonal phases removed.
inline Mat random_unitary(Eigen::Index n, std::mt19937_64& g) {
  const Mat x = gaussian(n, n, g);
  Eigen::HouseholderQR<Mat> qr(x);
  Mat q = qr.householderQ();
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = std::abs(r(i, i));
    if (a > 0) q.col(i) *= r(i, i) / a;
  }
  return q;
}

/// Hermitian PD matrix with prescribed condition number.
inline Mat random_pd(Eigen::Index n, double cond, std::mt19937_64& g) {
  const Mat u = random_unitary(n, g);
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i)
    d(i) = n == 1 ? 1.0 : std::pow(cond, -static_cast<double>(i) / static_cast<double>(n - 1));
  return u * d.cast<cd>().asDiagonal() * u.adjoint();
}

inline double ratio_trace(const Mat& w, const Mat& a, const Mat& b) {
  const Mat gram = w.adjoint() * b * w;
  return (w.adjoint() * a * w * gram.fullPivLu().inverse()).trace().real();
}

inline double singular_sum(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m.adjoint() * m);
  double s = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) s += std::sqrt(std::max(0.0, es.eigenvalues()(i)));
  return s;
}

inline std::vector<cd> phase_grid(int points) {
  std::vector<cd> out;
  for (int k = 0; k < points; ++k) out.push_back(std::polar(1.0, 2 * M_PI * k / points));
  return out;
}

/// min over grid phases of |a - w|^2, optionally allowing w = 0.
inline double entry_cost(cd a, const std::vector<cd>& grid, bool allow_zero) {
  double best = allow_zero ? std::norm(a) : std::numeric_limits<double>::infinity();
  for (cd w : grid) best = std::min(best, std::norm(a - w));
  return best;
}

/// All size-k subsets of {0..n-1} in lexicographic order.
inline std::vector<std::vector<int>> subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int start) -> void {
    if (static_cast<int>(cur.size()) == k) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i < n; ++i) {
      cur.push_back(i);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

/// Grid-searched cost of the best unit-modulus column supported on `support`.
inline double support_cost(const Vec& a, const std::vector<int>& support, const std::vector<cd>& grid) {
  double cost = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const bool on = std::find(support.begin(), support.end(), static_cast<int>(i)) != support.end();
    cost += on ? entry_cost(a(i), grid, false) : std::norm(a(i));
  }
  return cost;
}

/// Cost of a unit-modulus column on `support` with the best free phase on
/// each entry (no grid).
inline double support_cost_exact(const Vec& a, const std::vector<int>& support) {
  double cost = a.squaredNorm();
  for (int i : support) cost += 1.0 - 2.0 * std::abs(a(i));
  return cost;
}

/// Exhaustive best ordered pair of dictionary columns for the ratio trace.
inline double best_pair(const Mat& dict, const Mat& a, const Mat& b) {
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < dict.cols(); ++i) {
    for (Eigen::Index j = 0; j < dict.cols(); ++j) {
      if (i == j) continue;
      Mat w(dict.rows(), 2);
      w << dict.col(i), dict.col(j);
      Eigen::SelfAdjointEigenSolver<Mat> es(Mat(w.adjoint() * b * w));
      if (es.eigenvalues()(0) <= 1e-10 * es.eigenvalues()(1)) continue;
      best = std::max(best, ratio_trace(w, a, b));
    }
  }
  return best;
}

}  // namespace oracle
