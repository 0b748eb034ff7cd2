// SPDX-License-Identifier: Apache-2.0
//
// Hybrid combiners: iterative quantization of the ratio-trace optimum, greedy
// ratio-trace maximisation over a dictionary, weighted SOMP and the analog
// design for Kronecker-correlated channel estimation.

#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "hbf/beamform.hpp"
#include "hbf/error.hpp"
#include "hbf/hardware.hpp"
#include "hbf/matcore.hpp"
#include "hbf/parallel.hpp"
#include "hbf/precoder.hpp"
#include "hbf/types.hpp"

namespace hbf {

template <typename Real>
struct CombinerResult {
  HybridCombiner<Real> combiner;
  SolverTrace<Real> trace;
};

/// Quantizes B^-1/2 U S over unitary S, then the MMSE digital stage.
template <typename Real>
CombinerResult<Real> magiq_combiner(const CMat<Real>& h_bar, const CMat<Real>& r_z, const HardwareScheme& s,
                                    Index n_rf_r, const SolverControls& ctl = SolverControls{}) {
  const CMat<Real> x = optimal_digital_combiner<Real>(h_bar, r_z, n_rf_r).w_opt;
  auto run = [&](const CMat<Real>& source, bool perturbed) {
    auto q = magiq_quantize(source, s, ctl);
    CombinerResult<Real> r;
    r.combiner.scheme = s;
    r.combiner.w_rf = q.analog;
    r.combiner.w_bb = mmse_digital_combiner<Real>(h_bar, r_z, q.analog);
    r.trace = std::move(q.trace);
    r.trace.perturbed = perturbed;
    r.trace.final_state.f_bb = r.combiner.w_bb;
    return r;
  };
  try {
    return run(x, false);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::RankDeficientAnalog) throw;
  }
  return run(detail::perturbed_target(x, ctl.perturb_seed), true);
}

template <typename Real>
struct Prop2Matrices {
  CMat<Real> c;
  CMat<Real> d;
  Real gamma = 0;
  CMat<Real> g;
};

/// C, D, gamma and G for the partial analog matrix W (K = W.cols() may be 0).
template <typename Real>
Prop2Matrices<Real> prop2_matrices(const CMat<Real>& w, const CMat<Real>& a, const CMat<Real>& b) {
  const Index n = b.rows();
  require<Real>(a.rows() == n && a.cols() == n && b.cols() == n && w.rows() == n, ErrorCode::DimensionMismatch,
                "W, A and B sizes disagree");
  HermitianFactor<Real> bf;
  try {
    bf = hermitian_sqrt(b, true);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SingularForInverse || e.code() == ErrorCode::NotPSD) fail(ErrorCode::SingularB, e.what());
    throw;
  }
  const CMat<Real> a_half = hermitian_sqrt(a, false).sqrt;
  const CMat<Real>& b_half = bf.sqrt;
  const CMat<Real>& b_ihalf = *bf.inv_sqrt;

  CMat<Real> p = CMat<Real>::Zero(n, n);
  if (w.cols() > 0) {
    const CMat<Real> bw = b_half * w;
    p = bw * hpd_solve<Real>(CMat<Real>(bw.adjoint() * bw), CMat<Real>(bw.adjoint()), 1e-12, ErrorCode::SingularGram);
  }
  Prop2Matrices<Real> out;
  out.d = b_half * (identity<Real>(n) - p) * b_half;
  out.gamma = (p * b_ihalf * a_half * b_ihalf).trace().real();
  out.g = b_half * p * b_ihalf * a_half - a_half;
  out.c = out.gamma * out.d + out.g * out.g.adjoint();
  return out;
}

namespace detail {

// Everything the rank-one append needs about the current partial matrix.
template <typename Real>
struct AppendContext {
  CMat<Real> w;
  CMat<Real> q;    // (W* B W)^-1
  CMat<Real> m11;  // W* A W
  Real f_old = 0;
  Real trace_d = 0;  // tr(B) - tr(Q W* B^2 W)
};

template <typename Real>
AppendContext<Real> append_context(const CMat<Real>& w, const CMat<Real>& a, const CMat<Real>& b) {
  AppendContext<Real> ctx;
  ctx.w = w;
  ctx.trace_d = b.trace().real();
  if (w.cols() == 0) return ctx;
  const CMat<Real> bw = b * w;
  const CMat<Real> gram = w.adjoint() * bw;
  ctx.q = hpd_solve<Real>(gram, identity<Real>(w.cols()), 1e-12, ErrorCode::SingularGram);
  ctx.m11 = w.adjoint() * a * w;
  ctx.f_old = (ctx.m11 * ctx.q).trace().real();
  ctx.trace_d -= (ctx.q * bw.adjoint() * bw).trace().real();
  return ctx;
}

struct AppendScore {
  double value = 0;
  bool in_range = false;
};

// Objective after appending w, given B w and A w.
template <typename Real>
AppendScore append_score(const AppendContext<Real>& ctx, const CVec<Real>& w, const CVec<Real>& bw,
                         const CVec<Real>& aw) {
  const Index n = w.size();
  const Real beta = w.dot(bw).real();
  const Real mu = w.dot(aw).real();
  Real schur = beta;
  Real num = mu;
  if (ctx.w.cols() > 0) {
    const CVec<Real> b = ctx.w.adjoint() * bw;
    const CVec<Real> m = ctx.w.adjoint() * aw;
    const CVec<Real> q = ctx.q * b;
    schur -= b.dot(q).real();
    num += q.dot(ctx.m11 * q).real() - Real(2) * m.dot(q).real();
  }
  const Real guard = scaled_tol<Real>(1e-10) * ctx.trace_d / static_cast<Real>(n) * w.squaredNorm();
  if (!(schur > guard)) return {0, true};
  return {static_cast<double>(ctx.f_old + num / schur), false};
}

}  // namespace detail

/// tr(W~* A W~ [W~* B W~]^-1) for W~ = [W w] through the block-inverse update.
template <typename Real>
Real trace_objective_append(const CMat<Real>& w_partial, const CVec<Real>& w, const CMat<Real>& a, const CMat<Real>& b) {
  require<Real>(w.size() == b.rows() && w_partial.rows() == b.rows() && a.rows() == b.rows(),
                ErrorCode::DimensionMismatch, "sizes disagree");
  const auto ctx = detail::append_context<Real>(w_partial, a, b);
  const auto s = detail::append_score<Real>(ctx, w, CVec<Real>(b * w), CVec<Real>(a * w));
  if (s.in_range) fail(ErrorCode::InRangeSpace, "candidate lies in the range of the partial matrix");
  return static_cast<Real>(s.value);
}

struct GrtmOptions {
  bool cross_check = true;  // also score with w* C w / w* D w when B is invertible
  std::size_t workers = 1;
};

template <typename Real>
struct GrtmResult {
  CMat<Real> w_rf;
  std::vector<Index> indices;
  std::vector<Real> objective;  // after each appended column
  Index rounds_compared = 0;
  Index rounds_agreed = 0;  // rounds where the C/D ratio picked the same atom
};

/// Greedy column selection maximising the trace ratio for (A, B).
template <typename Real>
GrtmResult<Real> grtm(const CMat<Real>& a, const CMat<Real>& b, const Dictionary<Real>& dict, Index n_rf,
                      const GrtmOptions& opt = GrtmOptions{}) {
  if (dict.size() == 0) fail(ErrorCode::EmptyDictionary, "dictionary is empty");
  const Index n = b.rows();
  require<Real>(a.rows() == n && a.cols() == n && b.cols() == n && dict.columns.rows() == n,
                ErrorCode::DimensionMismatch, "A, B and dictionary sizes disagree");
  require<Real>(n_rf >= 1, ErrorCode::InvalidParameter, "need at least one RF chain");

  const CMat<Real> bd = b * dict.columns;
  const CMat<Real> ad = a * dict.columns;
  const auto count = static_cast<std::size_t>(dict.size());
  std::vector<bool> used(count, false);

  bool b_invertible = opt.cross_check;
  if (b_invertible) {
    try {
      hermitian_sqrt(b, true);
    } catch (const Error&) {
      b_invertible = false;
    }
  }

  GrtmResult<Real> out;
  out.w_rf.resize(n, 0);
  std::vector<detail::AppendScore> scores(count);
  for (Index k = 0; k < n_rf; ++k) {
    const auto ctx = detail::append_context<Real>(out.w_rf, a, b);
    parallel_for(count, opt.workers, [&](std::size_t q) {
      const auto qi = static_cast<Index>(q);
      if (used[q] || !dict.allowed_at(qi, k)) {
        scores[q] = {0, true};
        return;
      }
      scores[q] = detail::append_score<Real>(ctx, dict.columns.col(qi), bd.col(qi), ad.col(qi));
    });
    Index best = -1;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < count; ++q) {
      if (scores[q].in_range) continue;
      if (scores[q].value > best_value) {
        best_value = scores[q].value;
        best = static_cast<Index>(q);
      }
    }
    if (best < 0) fail(ErrorCode::DictionaryExhausted, "fewer admissible atoms than RF chains");

    if (b_invertible) {
      const auto p2 = prop2_matrices<Real>(out.w_rf, a, b);
      const CMat<Real> cd = p2.c * dict.columns;
      const CMat<Real> dd = p2.d * dict.columns;
      Index alt = -1;
      Real alt_value = -std::numeric_limits<Real>::infinity();
      for (std::size_t q = 0; q < count; ++q) {
        if (scores[q].in_range) continue;
        const auto qi = static_cast<Index>(q);
        const Real ratio = dict.columns.col(qi).dot(cd.col(qi)).real() / dict.columns.col(qi).dot(dd.col(qi)).real();
        if (ratio > alt_value) {
          alt_value = ratio;
          alt = qi;
        }
      }
      ++out.rounds_compared;
      if (alt == best) ++out.rounds_agreed;
    }

    used[static_cast<std::size_t>(best)] = true;
    out.indices.push_back(best);
    out.w_rf.conservativeResize(n, k + 1);
    out.w_rf.col(k) = dict.columns.col(best);
    out.objective.push_back(static_cast<Real>(best_value));
  }
  return out;
}

template <typename Real>
struct GrtmCombinerResult {
  HybridCombiner<Real> combiner;
  GrtmResult<Real> selection;
};

/// GRTM with A = H H*, B = H H* + R_z, then the MMSE digital stage.
template <typename Real>
GrtmCombinerResult<Real> grtm_combiner(const CMat<Real>& h_bar, const CMat<Real>& r_z, const HardwareScheme& s,
                                       const Dictionary<Real>& dict, Index n_rf_r,
                                       const GrtmOptions& opt = GrtmOptions{}) {
  require<Real>(r_z.rows() == h_bar.rows() && r_z.cols() == h_bar.rows(), ErrorCode::DimensionMismatch,
                "R_z must be N_r x N_r");
  const CMat<Real> a = h_bar * h_bar.adjoint();
  GrtmCombinerResult<Real> out;
  out.selection = grtm<Real>(a, CMat<Real>(a + r_z), dict, n_rf_r, opt);
  out.combiner.scheme = s;
  out.combiner.w_rf = out.selection.w_rf;
  out.combiner.w_bb = mmse_digital_combiner<Real>(h_bar, r_z, out.combiner.w_rf);
  return out;
}

template <typename Real>
struct WeightedSompResult {
  CMat<Real> w_rf;
  CMat<Real> w_bb;  // weighted least-squares coefficients
  std::vector<Index> indices;
};

/// SOMP on B^1/2 W_mmse with atoms B^1/2 d; W_RF keeps the raw atoms.
template <typename Real>
WeightedSompResult<Real> somp_weighted_combiner(const CMat<Real>& w_mmse, const CMat<Real>& b,
                                                const Dictionary<Real>& dict, Index n_rf_r) {
  if (dict.size() == 0) fail(ErrorCode::EmptyDictionary, "dictionary is empty");
  require<Real>(b.rows() == w_mmse.rows() && dict.columns.rows() == b.rows(), ErrorCode::DimensionMismatch,
                "B, W and dictionary rows disagree");
  const CMat<Real> b_half = hermitian_sqrt(b, false).sqrt;
  Dictionary<Real> weighted{b_half * dict.columns, dict.slot, dict.uniqueness_violation};
  auto sel = somp_select<Real>(CMat<Real>(b_half * w_mmse), weighted, n_rf_r);
  WeightedSompResult<Real> out;
  out.w_rf.resize(b.rows(), n_rf_r);
  for (Index j = 0; j < n_rf_r; ++j) out.w_rf.col(j) = dict.columns.col(sel.indices[static_cast<std::size_t>(j)]);
  out.w_bb = std::move(sel.f_bb);
  out.indices = std::move(sel.indices);
  return out;
}

/// Weighted SOMP for the MMSE target with the exact MMSE digital stage.
template <typename Real>
HybridCombiner<Real> somp_combiner(const CMat<Real>& h_bar, const CMat<Real>& r_z, const HardwareScheme& s,
                                   const Dictionary<Real>& dict, Index n_rf_r) {
  const CMat<Real> w_mmse = mmse_full_combiner<Real>(h_bar, r_z);
  const CMat<Real> b = h_bar * h_bar.adjoint() + r_z;
  auto sel = somp_weighted_combiner<Real>(w_mmse, b, dict, n_rf_r);
  return {sel.w_rf, mmse_digital_combiner<Real>(h_bar, r_z, sel.w_rf), s};
}

template <typename Real>
struct KroneckerDesign {
  CMat<Real> w_rf;
  Real mu = 0;  // tr(W* R^2 W [W* R W]^-1); estimation MSE falls as mu grows
  GrtmResult<Real> selection;
};

/// Analog combiner for channel estimation: GRTM with A = R_r^2, B = R_r.
template <typename Real>
KroneckerDesign<Real> kronecker_combiner(const CMat<Real>& r_r, const Dictionary<Real>& dict, Index n_rf,
                                         const GrtmOptions& opt = GrtmOptions{}) {
  const auto rf = hermitian_sqrt(r_r, false);
  Eigen::SelfAdjointEigenSolver<CMat<Real>> es(rf.base, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const Real cut = scaled_tol<Real>(1e-12) * ev.cwiseAbs().maxCoeff();
  Index positive = 0;
  for (Index i = 0; i < ev.size(); ++i) positive += ev(i) > cut ? 1 : 0;
  if (positive < n_rf) fail(ErrorCode::RankTooLow, "R_r has fewer positive eigenvalues than RF chains");

  KroneckerDesign<Real> out;
  const CMat<Real> a = rf.base * rf.base;
  out.selection = grtm<Real>(a, rf.base, dict, n_rf, opt);
  out.w_rf = out.selection.w_rf;
  out.mu = trace_objective<Real>(out.w_rf, a, rf.base);
  return out;
}

}  // namespace hbf
