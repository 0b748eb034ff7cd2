// SPDX-License-Identifier: Apache-2.0
//
// Fully-digital reference solutions, the MMSE digital stages and the MSE
// measures every hybrid design is scored against.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Cholesky>

#include "hbf/error.hpp"
#include "hbf/hardware.hpp"
#include "hbf/matcore.hpp"
#include "hbf/parallel.hpp"
#include "hbf/random.hpp"
#include "hbf/types.hpp"

namespace hbf {

struct SystemDims {
  Index n_t = 10;
  Index n_r = 15;
  Index n_s = 1;
  Index n_rf_t = 1;
  Index n_rf_r = 1;

  /// N_RF_t = N_RF_r = N_s.
  static SystemDims minimal(Index n_t, Index n_r, Index n_s) { return {n_t, n_r, n_s, n_s, n_s}; }

  void validate() const {
    if (n_s < 1 || n_s > n_rf_t || n_rf_t > n_t) fail(ErrorCode::InvalidParameter, "need N_s <= N_RF_t <= N_t");
    if (n_s > n_rf_r || n_rf_r > n_r) fail(ErrorCode::InvalidParameter, "need N_s <= N_RF_r <= N_r");
  }
};

template <typename Real>
struct HybridPrecoder {
  CMat<Real> f_rf;
  CMat<Real> f_bb;
  HardwareScheme scheme;

  CMat<Real> product() const { return f_rf * f_bb; }
  Real power() const { return product().squaredNorm(); }
};

template <typename Real>
struct HybridCombiner {
  CMat<Real> w_rf;
  CMat<Real> w_bb;
  HardwareScheme scheme;

  CMat<Real> product() const { return w_rf * w_bb; }
};

/// Diagonal weights of Phi. Uniform gives sqrt(N_s / N_RF_t) on every stream.
struct PowerAllocation {
  enum class Kind { Uniform, Custom };
  Kind kind = Kind::Uniform;
  std::vector<double> weights;

  static PowerAllocation uniform() { return {}; }
  static PowerAllocation custom(std::vector<double> w) { return {Kind::Custom, std::move(w)}; }
};

template <typename Real>
struct DigitalPrecoderOpt {
  CMat<Real> v;    // N_t x N_RF_t, orthonormal columns
  RVec<Real> phi;  // diagonal of Phi
  PowerAllocation::Kind allocation = PowerAllocation::Kind::Uniform;

  CMat<Real> v_phi() const { return v * phi.template cast<std::complex<Real>>().asDiagonal(); }
};

template <typename Real>
void require(bool ok, ErrorCode code, const char* what) {
  if (!ok) fail(code, what);
}

/// V: top N_RF_t eigenvectors of H~* R~^-1 H~; Phi from the allocation.
template <typename Real>
DigitalPrecoderOpt<Real> optimal_digital_precoder(const CMat<Real>& h_tilde, const CMat<Real>& r_tilde,
                                                  const SystemDims& dims,
                                                  const PowerAllocation& alloc = PowerAllocation::uniform()) {
  dims.validate();
  require<Real>(r_tilde.rows() == r_tilde.cols() && r_tilde.rows() == h_tilde.rows(), ErrorCode::DimensionMismatch,
                "R~ must be square with the rows of H~");
  require<Real>(h_tilde.cols() == dims.n_t, ErrorCode::DimensionMismatch, "H~ must have N_t columns");
  const CMat<Real> rinv_h = hpd_solve<Real>(r_tilde, h_tilde, 1e-12, ErrorCode::SingularInterference);
  const CMat<Real> gram = h_tilde.adjoint() * rinv_h;

  DigitalPrecoderOpt<Real> out;
  out.v = top_eigvecs(gram, dims.n_rf_t).vectors;
  out.allocation = alloc.kind;
  if (alloc.kind == PowerAllocation::Kind::Uniform) {
    out.phi = RVec<Real>::Constant(dims.n_rf_t, std::sqrt(static_cast<Real>(dims.n_s) / static_cast<Real>(dims.n_rf_t)));
  } else {
    require<Real>(static_cast<Index>(alloc.weights.size()) == dims.n_rf_t, ErrorCode::DimensionMismatch,
                  "one power weight per RF chain");
    out.phi.resize(dims.n_rf_t);
    Real total = 0;
    for (Index i = 0; i < dims.n_rf_t; ++i) {
      const double w = alloc.weights[static_cast<std::size_t>(i)];
      require<Real>(w >= 0, ErrorCode::InvalidParameter, "power weights must be nonnegative");
      out.phi(i) = static_cast<Real>(w);
      total += out.phi(i) * out.phi(i);
    }
    require<Real>(total <= static_cast<Real>(dims.n_s) + scaled_tol<Real>(1e-9), ErrorCode::InvalidParameter,
                  "power weights exceed the N_s budget");
  }
  return out;
}

namespace detail {

template <typename Real>
void check_combiner_inputs(const CMat<Real>& h_bar, const CMat<Real>& r_z, const CMat<Real>& w_rf) {
  require<Real>(r_z.rows() == r_z.cols() && r_z.rows() == h_bar.rows(), ErrorCode::DimensionMismatch,
                "R_z must be N_r x N_r");
  require<Real>(w_rf.rows() == h_bar.rows(), ErrorCode::DimensionMismatch, "W_RF must have N_r rows");
  require<Real>(column_rank_ratio(w_rf) > scaled_tol<Real>(1e-10), ErrorCode::RankDeficientAnalog,
                "analog combiner is rank deficient");
}

/// [W* (H H* + R) W]^-1 W* H
template <typename Real>
CMat<Real> mmse_stage(const CMat<Real>& h_bar, const CMat<Real>& r_z, const CMat<Real>& w_rf) {
  check_combiner_inputs(h_bar, r_z, w_rf);
  const CMat<Real> wh = w_rf.adjoint() * h_bar;
  const CMat<Real> inner = wh * wh.adjoint() + w_rf.adjoint() * r_z * w_rf;
  return hpd_solve<Real>(inner, wh, 1e-12, ErrorCode::SingularInner);
}

}  // namespace detail

/// W_BB with W_BB* = H* W_RF [W_RF* (H H* + R_z) W_RF]^-1.
template <typename Real>
CMat<Real> mmse_digital_combiner(const CMat<Real>& h_bar, const CMat<Real>& r_z, const CMat<Real>& w_rf) {
  return detail::mmse_stage(h_bar, r_z, w_rf);
}

/// Total MSE N_s - tr(H* W [W* B W]^-1 W* H), clamped into [0, N_s].
template <typename Real>
Real analytic_mse(const CMat<Real>& h_bar, const CMat<Real>& r_z, const CMat<Real>& w_rf, Index n_s) {
  require<Real>(h_bar.cols() == n_s, ErrorCode::DimensionMismatch, "H_bar must have N_s columns");
  const CMat<Real> w_bb = detail::mmse_stage(h_bar, r_z, w_rf);
  const Real explained = (h_bar.adjoint() * w_rf * w_bb).trace().real();
  return std::clamp(static_cast<Real>(n_s) - explained, Real(0), static_cast<Real>(n_s));
}

/// Unconstrained MMSE estimator B^-1 H with B = H H* + R_z.
template <typename Real>
CMat<Real> mmse_full_combiner(const CMat<Real>& h_bar, const CMat<Real>& r_z) {
  require<Real>(r_z.rows() == r_z.cols() && r_z.rows() == h_bar.rows(), ErrorCode::DimensionMismatch,
                "R_z must be N_r x N_r");
  const CMat<Real> b = h_bar * h_bar.adjoint() + r_z;
  return hpd_solve<Real>(b, h_bar, 1e-12, ErrorCode::SingularB);
}

template <typename Real>
struct RatioTraceOptimum {
  CMat<Real> w_opt;       // B^-1/2 U
  CMat<Real> u;           // top eigenvectors of B^-1/2 A B^-1/2
  RVec<Real> values;      // matching eigenvalues; their sum is the optimum
  CMat<Real> b_inv_sqrt;
};

/// Maximiser of tr(W* A W [W* B W]^-1) over unconstrained N x k matrices.
template <typename Real>
RatioTraceOptimum<Real> ratio_trace_optimum(const CMat<Real>& a, const CMat<Real>& b, Index k) {
  require<Real>(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::DimensionMismatch, "A and B must match");
  HermitianFactor<Real> bf;
  try {
    bf = hermitian_sqrt(b, true);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SingularForInverse) fail(ErrorCode::SingularB, "B is singular");
    throw;
  }
  const CMat<Real>& bis = *bf.inv_sqrt;
  auto basis = top_eigvecs(CMat<Real>(bis * a * bis), k);
  RatioTraceOptimum<Real> out;
  out.w_opt = bis * basis.vectors;
  out.u = std::move(basis.vectors);
  out.values = std::move(basis.values);
  out.b_inv_sqrt = bis;
  return out;
}

/// Fully-digital N_RF_r-column combiner B^-1/2 U S with S = I.
template <typename Real>
RatioTraceOptimum<Real> optimal_digital_combiner(const CMat<Real>& h_bar, const CMat<Real>& r_z, Index n_rf_r) {
  require<Real>(r_z.rows() == r_z.cols() && r_z.rows() == h_bar.rows(), ErrorCode::DimensionMismatch,
                "R_z must be N_r x N_r");
  const CMat<Real> a = h_bar * h_bar.adjoint();
  return ratio_trace_optimum<Real>(a, CMat<Real>(a + r_z), n_rf_r);
}

/// tr(W* A W [W* B W]^-1).
template <typename Real>
Real trace_objective(const CMat<Real>& w, const CMat<Real>& a, const CMat<Real>& b) {
  require<Real>(w.rows() == a.rows() && a.rows() == b.rows(), ErrorCode::DimensionMismatch, "W, A, B rows differ");
  const CMat<Real> gram = w.adjoint() * b * w;
  const CMat<Real> num = w.adjoint() * a * w;
  return hpd_solve<Real>(gram, num, 1e-12, ErrorCode::SingularGram).trace().real();
}

template <typename Real>
struct ChannelRealization {
  CMat<Real> h;    // N_r x N_t
  CMat<Real> r_z;  // N_r x N_r, Hermitian PD
  Real p_r = 1;
};

template <typename Real>
struct MonteCarloEstimate {
  Real mse = 0;     // per-stream average over trials
  Real std_error = 0;  // standard error of that average
};

/// Per-stream empirical MSE of s_hat = W* (sqrt(p_r) H F s + z). Trial q
/// draws s then z from substream (seed, q).
template <typename Real>
MonteCarloEstimate<Real> monte_carlo_mse(const HybridPrecoder<Real>& pre, const HybridCombiner<Real>& comb,
                                         const ChannelRealization<Real>& ch, Index trials, std::uint64_t seed,
                                         std::size_t workers = 1) {
  const CMat<Real> f = pre.product();
  const CMat<Real> w = comb.product();
  const Index n_s = f.cols();
  const Index n_r = ch.h.rows();
  require<Real>(ch.h.cols() == f.rows() && w.rows() == n_r && w.cols() == n_s, ErrorCode::DimensionMismatch,
                "precoder, channel and combiner shapes disagree");
  require<Real>(ch.r_z.rows() == n_r && ch.r_z.cols() == n_r, ErrorCode::DimensionMismatch, "R_z must be N_r x N_r");
  require<Real>(trials >= 1, ErrorCode::InvalidSize, "need at least one trial");

  Eigen::LLT<CMat<Real>> llt(ch.r_z);
  require<Real>(llt.info() == Eigen::Success, ErrorCode::SingularInterference, "R_z is not positive definite");
  const CMat<Real> l = llt.matrixL();
  const CMat<Real> signal = std::sqrt(ch.p_r) * w.adjoint() * ch.h * f;  // N_s x N_s
  const CMat<Real> noise = w.adjoint() * l;                              // N_s x N_r

  std::vector<Real> err(static_cast<std::size_t>(trials));
  parallel_for(err.size(), workers, [&](std::size_t q) {
    Rng rng = substream(seed, {static_cast<std::uint64_t>(q)});
    const CVec<Real> s = complex_normal_matrix<Real>(n_s, 1, rng);
    const CVec<Real> g = complex_normal_matrix<Real>(n_r, 1, rng);
    err[q] = (signal * s + noise * g - s).squaredNorm() / static_cast<Real>(n_s);
  });

  Real sum = 0;
  for (Real e : err) sum += e;
  const Real mean = sum / static_cast<Real>(trials);
  Real var = 0;
  for (Real e : err) var += (e - mean) * (e - mean);
  var /= static_cast<Real>(std::max<Index>(1, trials - 1));
  return {mean, std::sqrt(var / static_cast<Real>(trials))};
}

}  // namespace hbf
