// SPDX-License-Identifier: Apache-2.0
//
// Hybrid precoders: the alternating gap minimiser with pluggable inner
// solvers, its iterative-quantization special case, the phase-extraction
// baseline and simultaneous OMP.

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/QR>

#include "hbf/beamform.hpp"
#include "hbf/error.hpp"
#include "hbf/hardware.hpp"
#include "hbf/matcore.hpp"
#include "hbf/random.hpp"
#include "hbf/types.hpp"

namespace hbf {

struct SolverControls {
  double threshold = 1e-6;
  int max_iters = 500;
  double stall_tol = 1e-10;
  std::uint64_t perturb_seed = 0x9e3779b97f4a7c15ull;

  void validate() const {
    if (!(threshold >= 0)) fail(ErrorCode::InvalidParameter, "threshold must be nonnegative");
    if (max_iters < 1) fail(ErrorCode::InvalidParameter, "max_iters must be at least 1");
    if (!(stall_tol >= 0)) fail(ErrorCode::InvalidParameter, "stall_tol must be nonnegative");
  }
};

enum class StopReason { Threshold, Stall, FixedPoint, MaxIters, Rejected };

template <typename Real>
struct AltMagState {
  CMat<Real> t;     // unitary
  CMat<Real> f_rf;
  CMat<Real> f_bb;
  Real gap = 0;
  Index iteration = 0;
};

template <typename Real>
struct SolverTrace {
  std::vector<Real> gaps;             // one entry per analog update
  std::vector<Real> procrustes_slack;  // ||M||_* - Re tr(M T) after each unitary update
  Index iterations = 0;
  StopReason stop = StopReason::MaxIters;
  bool perturbed = false;
  AltMagState<Real> final_state;
};

/// F_BB = (F_RF* F_RF)^-1 F_RF* X.
template <typename Real>
CMat<Real> ls_digital_precoder(const CMat<Real>& f_rf, const CMat<Real>& target) {
  require<Real>(f_rf.rows() == target.rows(), ErrorCode::DimensionMismatch, "F_RF and target rows differ");
  require<Real>(column_rank_ratio(f_rf) > scaled_tol<Real>(1e-10), ErrorCode::RankDeficientAnalog,
                "analog matrix is rank deficient");
  return hpd_solve<Real>(CMat<Real>(f_rf.adjoint() * f_rf), CMat<Real>(f_rf.adjoint() * target), 1e-20,
                         ErrorCode::RankDeficientAnalog);
}

namespace detail {

// S3 leaves phases to the digital stage, so inside the loop the switch pattern
// carries the phase of the selected entry; finalize_analog strips it.
template <typename Real>
CMat<Real> loop_project(const HardwareScheme& s, const CMat<Real>& a) {
  if (s.kind == SchemeKind::S3_Switching) return project(HardwareScheme::s5(1), a);
  return project(s, a);
}

template <typename Real>
CMat<Real> finalize_analog(const HardwareScheme& s, const CMat<Real>& f) {
  if (s.kind == SchemeKind::S3_Switching) return project(s, f);
  return f;
}

// Diagonal D with loop_matrix = analog * D.
template <typename Real>
CMat<Real> carried_phases(const CMat<Real>& loop_matrix, const CMat<Real>& analog) {
  CMat<Real> d = identity<Real>(analog.cols());
  for (Index j = 0; j < analog.cols(); ++j) {
    Index i = 0;
    analog.col(j).cwiseAbs().maxCoeff(&i);
    if (std::abs(analog(i, j)) > Real(0)) d(j, j) = loop_matrix(i, j) / analog(i, j);
  }
  return d;
}

// Makes the target's entries unit RMS so the S1 threshold sees a meaningful
// scale; every other projection is scale invariant.
template <typename Real>
Real rms_scale(const CMat<Real>& x) {
  const Real n = x.norm();
  if (!(n > Real(0))) return Real(1);
  return std::sqrt(static_cast<Real>(x.size())) / n;
}

template <typename Real>
Real procrustes_slack(const CMat<Real>& m, const CMat<Real>& t) {
  return nuclear_norm(m) - (m * t).trace().real();
}

template <typename Real>
CMat<Real> perturbed_target(const CMat<Real>& x, std::uint64_t seed) {
  Rng rng = substream(seed, {0x70657274ull});
  const Real rms = x.norm() / std::sqrt(static_cast<Real>(std::max<Index>(1, x.size())));
  return x + Real(1e-8) * rms * complex_normal_matrix<Real>(x.rows(), x.cols(), rng);
}

}  // namespace detail

template <typename Real>
struct QuantizeResult {
  CMat<Real> analog;  // feasible
  CMat<Real> t;       // unitary; includes phases the digital stage must carry
  Real scale = 1;     // target was multiplied by this before quantizing
  SolverTrace<Real> trace;
};

/// Alternates F = P(c X T) and the unitary step on F* X, starting from T = I.
/// The gap is ||c X T - F||_F^2 with c the unit-RMS scale of X.
template <typename Real>
QuantizeResult<Real> magiq_quantize(const CMat<Real>& x, const HardwareScheme& s,
                                    const SolverControls& ctl = SolverControls{}) {
  ctl.validate();
  const Index k = x.cols();
  QuantizeResult<Real> out;
  out.scale = detail::rms_scale(x);
  const CMat<Real> xs = out.scale * x;
  CMat<Real> t = identity<Real>(k);
  CMat<Real> f;
  auto& tr = out.trace;
  const Real fixed_tol = scaled_tol<Real>(1e-12) * std::sqrt(static_cast<Real>(k));
  for (int it = 1;; ++it) {
    const CMat<Real> target = xs * t;
    f = detail::loop_project(s, target);
    const Real gap = (target - f).squaredNorm();
    tr.gaps.push_back(gap);
    tr.iterations = it;
    if (gap < static_cast<Real>(ctl.threshold)) {
      tr.stop = StopReason::Threshold;
      break;
    }
    if (tr.gaps.size() > 1 && tr.gaps[tr.gaps.size() - 2] - gap < static_cast<Real>(ctl.stall_tol)) {
      tr.stop = StopReason::Stall;
      break;
    }
    if (it >= ctl.max_iters) {
      tr.stop = StopReason::MaxIters;
      break;
    }
    const CMat<Real> m = f.adjoint() * xs;
    const CMat<Real> t_new = procrustes_unitary(m);
    tr.procrustes_slack.push_back(detail::procrustes_slack(m, t_new));
    const bool fixed = (t_new - t).norm() <= fixed_tol;
    t = t_new;
    if (fixed) {
      tr.stop = StopReason::FixedPoint;
      break;
    }
  }
  out.analog = detail::finalize_analog(s, f);
  out.t = detail::carried_phases(f, out.analog).adjoint() * t;
  tr.final_state = {t, out.analog, identity<Real>(k), tr.gaps.back(), tr.iterations};
  return out;
}

template <typename Real>
struct PrecoderResult {
  HybridPrecoder<Real> precoder;
  SolverTrace<Real> trace;
};

namespace detail {

// Runs the quantization loop and hands (analog, T) to `digital`; on a rank
// deficient analog matrix retries once from a slightly perturbed target.
template <typename Real, typename Digital>
PrecoderResult<Real> quantize_then(const CMat<Real>& x, const HardwareScheme& s, const SolverControls& ctl,
                                   Digital digital) {
  auto run = [&](const CMat<Real>& source, bool perturbed) {
    auto q = magiq_quantize(source, s, ctl);
    PrecoderResult<Real> r;
    r.precoder.scheme = s;
    r.precoder.f_rf = q.analog;
    r.precoder.f_bb = digital(q.analog, q.t);
    r.trace = std::move(q.trace);
    r.trace.perturbed = perturbed;
    r.trace.final_state.f_bb = r.precoder.f_bb;
    return r;
  };
  try {
    return run(x, false);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::RankDeficientAnalog) throw;
  }
  return run(perturbed_target(x, ctl.perturb_seed), true);
}

}  // namespace detail

/// Iterative quantization of V Phi followed by the least-squares digital stage.
template <typename Real>
PrecoderResult<Real> magiq_precoder(const DigitalPrecoderOpt<Real>& opt, const HardwareScheme& s,
                                    const SolverControls& ctl = SolverControls{}) {
  const CMat<Real> x = opt.v_phi();
  return detail::quantize_then<Real>(x, s, ctl, [&x](const CMat<Real>& f_rf, const CMat<Real>& t) {
    return ls_digital_precoder<Real>(f_rf, CMat<Real>(x * t));
  });
}

/// Same loop, digital stage restricted to a scaled unitary meeting the power
/// budget with equality.
template <typename Real>
PrecoderResult<Real> pe_altmin_precoder(const DigitalPrecoderOpt<Real>& opt, const HardwareScheme& s, Index n_s,
                                        const SolverControls& ctl = SolverControls{}) {
  require<Real>(n_s >= 1, ErrorCode::InvalidParameter, "N_s must be positive");
  const CMat<Real> x = opt.v_phi();
  return detail::quantize_then<Real>(x, s, ctl, [n_s](const CMat<Real>& f_rf, const CMat<Real>& t) {
    const Real norm = (f_rf * t).norm();
    require<Real>(norm > Real(0), ErrorCode::RankDeficientAnalog, "analog matrix is zero");
    return CMat<Real>(std::sqrt(static_cast<Real>(n_s)) / norm * t);
  });
}

template <typename Real>
struct SompSelection {
  CMat<Real> f_rf;
  CMat<Real> f_bb;  // least squares over the selected atoms
  std::vector<Index> indices;
  Real residual = 0;  // ||target - F_RF F_BB||_F
};

/// Simultaneous OMP: each round takes the admissible atom with the largest
/// normalised correlation energy ||d* R||^2 / ||d||^2 against the residual.
/// Ties go to the lowest index.
template <typename Real>
SompSelection<Real> somp_select(const CMat<Real>& target, const Dictionary<Real>& dict, Index n_rf) {
  if (dict.size() == 0) fail(ErrorCode::EmptyDictionary, "dictionary is empty");
  require<Real>(dict.columns.rows() == target.rows(), ErrorCode::DimensionMismatch, "atoms and target rows differ");
  require<Real>(n_rf >= 1, ErrorCode::InvalidParameter, "need at least one RF chain");
  if (n_rf > dict.size()) fail(ErrorCode::RepeatSelectionExhausted, "more RF chains than dictionary atoms");

  const RVec<Real> norms = dict.columns.colwise().squaredNorm().transpose();
  std::vector<bool> used(static_cast<std::size_t>(dict.size()), false);
  SompSelection<Real> out;
  CMat<Real> residual = target;
  for (Index r = 0; r < n_rf; ++r) {
    const CMat<Real> psi = dict.columns.adjoint() * residual;
    Index best = -1;
    Real best_energy = -1;
    for (Index q = 0; q < dict.size(); ++q) {
      if (used[static_cast<std::size_t>(q)] || !(norms(q) > Real(0)) || !dict.allowed_at(q, r)) continue;
      const Real energy = psi.row(q).squaredNorm() / norms(q);
      if (energy > best_energy) {
        best_energy = energy;
        best = q;
      }
    }
    if (best < 0) fail(ErrorCode::RepeatSelectionExhausted, "no admissible atom left");
    used[static_cast<std::size_t>(best)] = true;
    out.indices.push_back(best);

    out.f_rf.resize(target.rows(), r + 1);
    for (Index j = 0; j <= r; ++j) out.f_rf.col(j) = dict.columns.col(out.indices[static_cast<std::size_t>(j)]);
    out.f_bb = out.f_rf.colPivHouseholderQr().solve(target);
    residual = target - out.f_rf * out.f_bb;
  }
  out.residual = residual.norm();
  return out;
}

/// SOMP approximation of `target`, rescaled to total power N_s.
template <typename Real>
HybridPrecoder<Real> somp_precoder(const CMat<Real>& target, const Dictionary<Real>& dict, const HardwareScheme& s,
                                   Index n_rf, Index n_s) {
  auto sel = somp_select(target, dict, n_rf);
  HybridPrecoder<Real> out{std::move(sel.f_rf), std::move(sel.f_bb), s};
  const Real norm = (out.f_rf * out.f_bb).norm();
  if (norm > Real(0)) out.f_bb *= std::sqrt(static_cast<Real>(n_s)) / norm;
  return out;
}

/// Maps (target, scheme) to an (F_RF, F_BB) pair approximating the target.
template <typename Real>
using InnerSolver = std::function<std::pair<CMat<Real>, CMat<Real>>(const CMat<Real>&, const HardwareScheme&)>;

/// One quantization of the target followed by least squares.
template <typename Real>
InnerSolver<Real> quantize_ls_inner() {
  return [](const CMat<Real>& target, const HardwareScheme& s) {
    const CMat<Real> f = detail::loop_project(s, CMat<Real>(detail::rms_scale(target) * target));
    CMat<Real> analog = detail::finalize_analog(s, f);
    CMat<Real> digital = ls_digital_precoder<Real>(analog, target);
    return std::make_pair(std::move(analog), std::move(digital));
  };
}

/// SOMP without power normalisation.
template <typename Real>
InnerSolver<Real> somp_inner(Dictionary<Real> dict, Index n_rf) {
  return [dict = std::move(dict), n_rf](const CMat<Real>& target, const HardwareScheme&) {
    auto sel = somp_select(target, dict, n_rf);
    return std::make_pair(std::move(sel.f_rf), std::move(sel.f_bb));
  };
}

/// Alternates the inner solver on V Phi T and the unitary step on
/// F_BB* F_RF* V Phi. An inner step that would raise the gap is discarded
/// and the loop ends on the previous analog/digital pair.
template <typename Real>
PrecoderResult<Real> alt_mag(const DigitalPrecoderOpt<Real>& opt, const HardwareScheme& s, const InnerSolver<Real>& inner,
                             Index n_s, const SolverControls& ctl = SolverControls{}) {
  ctl.validate();
  const CMat<Real> x = opt.v_phi();
  const Index k = x.cols();
  auto call = [&](const CMat<Real>& target) {
    try {
      auto r = inner(target, s);
      require<Real>(r.first.rows() == x.rows() && r.first.cols() == r.second.rows() && r.second.cols() == k,
                    ErrorCode::InnerSolverFailure, "inner solver returned mismatched shapes");
      return r;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::InnerSolverFailure) throw;
      fail(ErrorCode::InnerSolverFailure, std::string("inner solver failed: ") + e.what());
    }
  };

  PrecoderResult<Real> out;
  auto& tr = out.trace;
  CMat<Real> t = identity<Real>(k);
  auto [f_rf, f_bb] = call(x);
  Real gap = (x - f_rf * f_bb).squaredNorm();
  tr.gaps.push_back(gap);
  tr.iterations = 1;
  const Real slack = scaled_tol<Real>(1e-12) * std::max(Real(1), x.squaredNorm());
  for (;;) {
    if (gap < static_cast<Real>(ctl.threshold)) {
      tr.stop = StopReason::Threshold;
      break;
    }
    if (tr.iterations >= ctl.max_iters) {
      tr.stop = StopReason::MaxIters;
      break;
    }
    const CMat<Real> m = f_bb.adjoint() * f_rf.adjoint() * x;
    const CMat<Real> t_new = procrustes_unitary(m);
    tr.procrustes_slack.push_back(detail::procrustes_slack(m, t_new));
    const Real gap_t = (x * t_new - f_rf * f_bb).squaredNorm();
    t = t_new;
    auto [f2, b2] = call(CMat<Real>(x * t));
    const Real gap_new = (x * t - f2 * b2).squaredNorm();
    ++tr.iterations;
    if (gap_new > gap_t + slack) {
      gap = gap_t;
      tr.gaps.push_back(gap);
      tr.stop = StopReason::Rejected;
      break;
    }
    f_rf = std::move(f2);
    f_bb = std::move(b2);
    const bool stalled = gap - gap_new < static_cast<Real>(ctl.stall_tol);
    gap = gap_new;
    tr.gaps.push_back(gap);
    if (stalled) {
      tr.stop = StopReason::Stall;
      break;
    }
  }
  const Real power = (f_rf * f_bb).squaredNorm();
  if (power > static_cast<Real>(n_s)) f_bb *= std::sqrt(static_cast<Real>(n_s) / power);
  out.precoder = {f_rf, f_bb, s};
  tr.final_state = {t, f_rf, f_bb, gap, tr.iterations};
  return out;
}

}  // namespace hbf
