// SPDX-License-Identifier: Apache-2.0
//
// Analog hardware schemes S1-S5: feasibility predicates, the projection onto
// each feasible set, dictionary generators and component counts.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "hbf/channel.hpp"
#include "hbf/error.hpp"
#include "hbf/random.hpp"
#include "hbf/types.hpp"

namespace hbf {

enum class SchemeKind {
  S1_FullPSandSwitches,  // |w| in {0, 1}
  S2_FullPS,             // |w| = 1
  S3_Switching,          // one 1 per column
  S4_FixedSubarrays,     // |w| = 1 on S_j, 0 elsewhere
  S5_FlexibleSubarrays,  // exactly G unit-modulus entries per column
};

struct HardwareScheme {
  SchemeKind kind = SchemeKind::S2_FullPS;
  Index g = 0;
  // S4 only: one index set per output column. Empty means the default layout
  // of evenly spaced contiguous blocks (see subarray_layout).
  std::vector<std::vector<Index>> subarrays;

  static HardwareScheme s1() { return {SchemeKind::S1_FullPSandSwitches, 0, {}}; }
  static HardwareScheme s2() { return {SchemeKind::S2_FullPS, 0, {}}; }
  static HardwareScheme s3() { return {SchemeKind::S3_Switching, 0, {}}; }
  static HardwareScheme s4(Index g, std::vector<std::vector<Index>> sets = {}) {
    return {SchemeKind::S4_FixedSubarrays, g, std::move(sets)};
  }
  static HardwareScheme s5(Index g) { return {SchemeKind::S5_FlexibleSubarrays, g, {}}; }

  bool has_connectivity() const {
    return kind == SchemeKind::S4_FixedSubarrays || kind == SchemeKind::S5_FlexibleSubarrays;
  }

  std::string name() const {
    switch (kind) {
      case SchemeKind::S1_FullPSandSwitches: return "S1";
      case SchemeKind::S2_FullPS: return "S2";
      case SchemeKind::S3_Switching: return "S3";
      case SchemeKind::S4_FixedSubarrays: return "S4-G" + std::to_string(g);
      case SchemeKind::S5_FlexibleSubarrays: return "S5-G" + std::to_string(g);
    }
    return "?";
  }
};

/// Index sets S_j for an n x cols analog matrix under S4. Without explicit
/// sets, column j gets the contiguous block starting at round(j (n - G) / (cols - 1)).
inline std::vector<std::vector<Index>> subarray_layout(const HardwareScheme& s, Index n, Index cols) {
  if (s.kind != SchemeKind::S4_FixedSubarrays) fail(ErrorCode::InvalidParameter, "sub-array layout is S4 only");
  if (s.g < 1 || s.g > n) fail(ErrorCode::DimensionMismatch, "S4 connectivity G must lie in [1, N]");
  if (!s.subarrays.empty()) {
    if (static_cast<Index>(s.subarrays.size()) < cols)
      fail(ErrorCode::DimensionMismatch, "S4 needs one sub-array per column");
    std::vector<std::vector<Index>> sets(s.subarrays.begin(), s.subarrays.begin() + cols);
    for (auto& set : sets) {
      std::sort(set.begin(), set.end());
      if (static_cast<Index>(set.size()) != s.g || std::adjacent_find(set.begin(), set.end()) != set.end())
        fail(ErrorCode::DimensionMismatch, "S4 sub-arrays must hold G distinct indices");
      if (set.front() < 0 || set.back() >= n) fail(ErrorCode::DimensionMismatch, "S4 sub-array index out of range");
    }
    return sets;
  }
  std::vector<std::vector<Index>> sets(static_cast<std::size_t>(cols));
  for (Index j = 0; j < cols; ++j) {
    const Index start = cols == 1 ? 0 : static_cast<Index>(std::lround(static_cast<double>(j * (n - s.g)) / static_cast<double>(cols - 1)));
    auto& set = sets[static_cast<std::size_t>(j)];
    set.resize(static_cast<std::size_t>(s.g));
    std::iota(set.begin(), set.end(), start);
  }
  return sets;
}

namespace detail {

/// Nearest unit-modulus value; zero maps to 1 and values already on the unit
/// circle (to a few ulps) are returned untouched so projection is idempotent.
template <typename Real>
std::complex<Real> unit_phase(std::complex<Real> a) {
  const Real mag = std::abs(a);
  if (mag == Real(0)) return {Real(1), Real(0)};
  if (std::abs(mag - Real(1)) <= Real(4) * std::numeric_limits<Real>::epsilon()) return a;
  return a / mag;
}

/// Indices of the k largest magnitudes; ties go to the lower row index.
template <typename Real>
std::vector<Index> top_magnitudes(const CVec<Real>& col, Index k) {
  std::vector<Index> idx(static_cast<std::size_t>(col.size()));
  std::iota(idx.begin(), idx.end(), Index(0));
  std::stable_sort(idx.begin(), idx.end(), [&col](Index a, Index b) { return std::abs(col(a)) > std::abs(col(b)); });
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

template <typename Real>
CVec<Real> project_on_support(const CVec<Real>& a, const std::vector<Index>& support) {
  CVec<Real> w = CVec<Real>::Zero(a.size());
  for (Index i : support) w(i) = unit_phase(a(i));
  return w;
}

template <typename Real>
bool near(Real x, Real target, Real tol) {
  return std::abs(x - target) <= tol;
}

}  // namespace detail

template <typename Real>
void check_scheme_dims(const HardwareScheme& s, Index rows) {
  if (rows < 1) fail(ErrorCode::DimensionMismatch, "analog matrix needs rows");
  if (s.has_connectivity() && (s.g < 1 || s.g > rows))
    fail(ErrorCode::DimensionMismatch, "connectivity G must lie in [1, N]");
}

/// Membership test for one column; `slot` is the output column position,
/// which only matters for S4.
template <typename Real>
bool feasible_column(const HardwareScheme& s, const CVec<Real>& w, Index slot, Index cols, Real tol) {
  const Index n = w.size();
  auto is_unit = [tol](std::complex<Real> v) { return detail::near(std::abs(v), Real(1), tol); };
  auto is_zero = [tol](std::complex<Real> v) { return std::abs(v) <= tol; };
  switch (s.kind) {
    case SchemeKind::S1_FullPSandSwitches:
      for (Index i = 0; i < n; ++i)
        if (!is_unit(w(i)) && !is_zero(w(i))) return false;
      return true;
    case SchemeKind::S2_FullPS:
      for (Index i = 0; i < n; ++i)
        if (!is_unit(w(i))) return false;
      return true;
    case SchemeKind::S3_Switching: {
      Index ones = 0;
      for (Index i = 0; i < n; ++i) {
        if (detail::near(w(i).real(), Real(1), tol) && std::abs(w(i).imag()) <= tol) ++ones;
        else if (!is_zero(w(i))) return false;
      }
      return ones == 1;
    }
    case SchemeKind::S4_FixedSubarrays: {
      const auto sets = subarray_layout(s, n, cols);
      const auto& set = sets[static_cast<std::size_t>(slot)];
      std::vector<bool> on(static_cast<std::size_t>(n), false);
      for (Index i : set) on[static_cast<std::size_t>(i)] = true;
      for (Index i = 0; i < n; ++i)
        if (on[static_cast<std::size_t>(i)] ? !is_unit(w(i)) : !is_zero(w(i))) return false;
      return true;
    }
    case SchemeKind::S5_FlexibleSubarrays: {
      Index units = 0;
      for (Index i = 0; i < n; ++i) {
        if (is_unit(w(i))) ++units;
        else if (!is_zero(w(i))) return false;
      }
      return units == s.g;
    }
  }
  return false;
}

template <typename Real>
bool feasible(const HardwareScheme& s, const CMat<Real>& m, Real tol = scaled_tol<Real>(1e-9)) {
  check_scheme_dims<Real>(s, m.rows());
  if (s.kind == SchemeKind::S4_FixedSubarrays) (void)subarray_layout(s, m.rows(), m.cols());
  for (Index j = 0; j < m.cols(); ++j)
    if (!feasible_column<Real>(s, m.col(j), j, m.cols(), tol)) return false;
  return true;
}

/// Projection of a single column placed at position `slot` of an n x cols matrix.
template <typename Real>
CVec<Real> project_column(const HardwareScheme& s, const CVec<Real>& a, Index slot, Index cols) {
  const Index n = a.size();
  CVec<Real> w(n);
  switch (s.kind) {
    case SchemeKind::S1_FullPSandSwitches:
      for (Index i = 0; i < n; ++i) w(i) = std::abs(a(i)) >= Real(0.5) ? detail::unit_phase(a(i)) : std::complex<Real>(0);
      return w;
    case SchemeKind::S2_FullPS:
      for (Index i = 0; i < n; ++i) w(i) = detail::unit_phase(a(i));
      return w;
    case SchemeKind::S3_Switching: {
      const auto top = detail::top_magnitudes<Real>(a, 1);
      w.setZero();
      w(top.front()) = Real(1);
      return w;
    }
    case SchemeKind::S4_FixedSubarrays: {
      const auto sets = subarray_layout(s, n, cols);
      return detail::project_on_support<Real>(a, sets[static_cast<std::size_t>(slot)]);
    }
    case SchemeKind::S5_FlexibleSubarrays:
      return detail::project_on_support<Real>(a, detail::top_magnitudes<Real>(a, s.g));
  }
  return w;
}

/// Columnwise projection onto the scheme's feasible set.
template <typename Derived>
CMat<typename Eigen::NumTraits<typename Derived::Scalar>::Real> project(const HardwareScheme& s,
                                                                         const Eigen::MatrixBase<Derived>& a) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  const CMat<Real> aa = a;
  check_scheme_dims<Real>(s, aa.rows());
  CMat<Real> w(aa.rows(), aa.cols());
  for (Index j = 0; j < aa.cols(); ++j) w.col(j) = project_column<Real>(s, aa.col(j), j, aa.cols());
  return w;
}

/// Candidate analog columns. `slot[q]` is the output position atom q is
/// restricted to (S4), or -1 when it may fill any position.
template <typename Real>
struct Dictionary {
  CMat<Real> columns;
  std::vector<Index> slot;
  bool uniqueness_violation = false;

  Index size() const { return columns.cols(); }
  bool allowed_at(Index q, Index position) const {
    const Index s = slot[static_cast<std::size_t>(q)];
    return s < 0 || s == position;
  }
};

/// Columns drawn from CN(0, W W*), scaled to unit RMS and projected onto the
/// scheme. The scaling only matters for S1, whose switch-off threshold would
/// otherwise depend on the arbitrary scale of W. Exact duplicates are redrawn
/// up to 100 times before being kept and flagged.
/// For S4, atom q is built for output position q mod W.cols().
template <typename Real>
Dictionary<Real> gaussian_dictionary(const HardwareScheme& s, const CMat<Real>& w_opt, Index size, Rng& rng) {
  if (size < 1) fail(ErrorCode::InvalidSize, "dictionary size must be positive");
  if (w_opt.cols() < 1) fail(ErrorCode::InvalidSize, "W_opt needs at least one column");
  const Index n = w_opt.rows();
  const Index cols = w_opt.cols();
  check_scheme_dims<Real>(s, n);
  const bool slotted = s.kind == SchemeKind::S4_FixedSubarrays;

  Dictionary<Real> d;
  d.columns.resize(n, size);
  d.slot.assign(static_cast<std::size_t>(size), -1);
  constexpr int kMaxAttempts = 100;
  for (Index q = 0; q < size; ++q) {
    const Index position = slotted ? q % cols : 0;
    CVec<Real> atom;
    bool unique = false;
    for (int attempt = 0; attempt < kMaxAttempts && !unique; ++attempt) {
      CVec<Real> x = w_opt * complex_normal_matrix<Real>(cols, 1, rng);
      const Real norm = x.norm();
      if (norm > Real(0)) x *= std::sqrt(static_cast<Real>(n)) / norm;
      atom = project_column<Real>(s, x, position, cols);
      unique = true;
      for (Index p = 0; p < q && unique; ++p) unique = !(d.columns.col(p) == atom);
    }
    if (!unique) d.uniqueness_violation = true;
    d.columns.col(q) = atom;
    if (slotted) d.slot[static_cast<std::size_t>(q)] = position;
  }
  return d;
}

/// Unit-modulus steering atoms sqrt(N) a(2 pi q / size), q = 1..size.
template <typename Real = double>
Dictionary<Real> steering_dictionary(Index n, Index size, Real d_over_lambda = Real(0.5)) {
  if (size < 1) fail(ErrorCode::InvalidSize, "dictionary size must be positive");
  Dictionary<Real> d;
  d.columns.resize(n, size);
  d.slot.assign(static_cast<std::size_t>(size), -1);
  const Real scale = std::sqrt(static_cast<Real>(n));
  for (Index q = 1; q <= size; ++q) {
    const Real phi = Real(2 * M_PI) * static_cast<Real>(q) / static_cast<Real>(size);
    d.columns.col(q - 1) = scale * steering_vector<Real>(n, phi, d_over_lambda);
  }
  return d;
}

struct ComponentCounts {
  Index phase_shifters = 0;
  Index switches = 0;
  bool operator==(const ComponentCounts&) const = default;
};

inline ComponentCounts component_counts(const HardwareScheme& s, Index n, Index n_rf) {
  switch (s.kind) {
    case SchemeKind::S1_FullPSandSwitches: return {n * n_rf, n * n_rf};
    case SchemeKind::S2_FullPS: return {n * n_rf, 0};
    case SchemeKind::S3_Switching: return {0, n_rf};
    case SchemeKind::S4_FixedSubarrays: return {s.g * n_rf, 0};
    case SchemeKind::S5_FlexibleSubarrays: return {s.g * n_rf, s.g * n_rf};
  }
  return {};
}

}  // namespace hbf
