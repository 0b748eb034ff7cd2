// SPDX-License-Identifier: Apache-2.0
//
// Channel and interference generators: ULA steering vectors, the clustered
// mmWave channel, DFT (circulant) channels, i.i.d. Gaussian channels, white
// and coloured interference covariances and receive correlation matrices.

#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "hbf/error.hpp"
#include "hbf/random.hpp"
#include "hbf/types.hpp"

namespace hbf {

/// ULA response: entry n is exp(j 2 pi d n sin(phi)) / sqrt(N).
template <typename Real = double>
CVec<Real> steering_vector(Index n, Real phi, Real d_over_lambda = Real(0.5)) {
  if (n < 1) fail(ErrorCode::InvalidSize, "steering vector needs N >= 1");
  CVec<Real> a(n);
  const Real step = Real(2 * M_PI) * d_over_lambda * std::sin(phi);
  const Real norm = Real(1) / std::sqrt(static_cast<Real>(n));
  for (Index i = 0; i < n; ++i) a(i) = std::polar(norm, step * static_cast<Real>(i));
  return a;
}

struct MmWaveParams {
  Index n_t = 10;
  Index n_r = 15;
  Index n_cl = 6;
  Index n_ray = 1;
  double d_over_lambda = 0.5;

  void validate() const {
    if (n_t < 1 || n_r < 1) fail(ErrorCode::InvalidParameter, "antenna counts must be positive");
    if (n_cl < 1 || n_ray < 1) fail(ErrorCode::InvalidParameter, "cluster and ray counts must be positive");
    if (!(d_over_lambda > 0)) fail(ErrorCode::InvalidParameter, "antenna spacing must be positive");
  }
};

template <typename Real>
struct Ray {
  Index cluster;
  Index ray;
  std::complex<Real> gain;
  Real phi_t;
  Real phi_r;
};

template <typename Real>
struct MmWaveChannel {
  CMat<Real> h;  // n_r x n_t
  std::vector<Ray<Real>> rays;
};

/// Clustered narrowband channel. Draw order per (cluster, ray): gain, then
/// departure angle, then arrival angle.
template <typename Real = double>
MmWaveChannel<Real> mmwave_channel(const MmWaveParams& p, Rng& rng) {
  p.validate();
  MmWaveChannel<Real> out;
  out.h = CMat<Real>::Zero(p.n_r, p.n_t);
  const Real d = static_cast<Real>(p.d_over_lambda);
  for (Index i = 0; i < p.n_cl; ++i) {
    for (Index l = 0; l < p.n_ray; ++l) {
      Ray<Real> r{i, l, complex_normal<Real>(rng), Real(0), Real(0)};
      r.phi_t = uniform_angle<Real>(rng);
      r.phi_r = uniform_angle<Real>(rng);
      out.h.noalias() += r.gain * steering_vector<Real>(p.n_r, r.phi_r, d) * steering_vector<Real>(p.n_t, r.phi_t, d).adjoint();
      out.rays.push_back(r);
    }
  }
  out.h *= std::sqrt(static_cast<Real>(p.n_t * p.n_r) / static_cast<Real>(p.n_cl * p.n_ray));
  return out;
}

/// Columns 0..l-1 of the unitary DFT matrix, entries exp(-j 2 pi k n / N) / sqrt(N).
template <typename Real = double>
CMat<Real> dft_columns(Index n, Index l) {
  CMat<Real> a(n, l);
  const Real norm = Real(1) / std::sqrt(static_cast<Real>(n));
  for (Index k = 0; k < l; ++k)
    for (Index i = 0; i < n; ++i)
      a(i, k) = std::polar(norm, -Real(2 * M_PI) * static_cast<Real>(k * i % n) / static_cast<Real>(n));
  return a;
}

/// H = A_r diag(gains) A_t* with DFT steering matrices.
template <typename Real = double>
CMat<Real> circulant_channel(const std::vector<std::complex<Real>>& gains, Index n_t, Index n_r) {
  const auto l = static_cast<Index>(gains.size());
  if (l < 1) fail(ErrorCode::InvalidSize, "need at least one gain");
  if (l > std::min(n_t, n_r)) fail(ErrorCode::TooManyGains, "more gains than min(N_t, N_r)");
  CVec<Real> g(l);
  for (Index i = 0; i < l; ++i) g(i) = gains[static_cast<std::size_t>(i)];
  return dft_columns<Real>(n_r, l) * g.asDiagonal() * dft_columns<Real>(n_t, l).adjoint();
}

template <typename Real = double>
CMat<Real> gaussian_channel(Index n_t, Index n_r, Rng& rng) {
  if (n_t < 1 || n_r < 1) fail(ErrorCode::InvalidSize, "antenna counts must be positive");
  return complex_normal_matrix<Real>(n_r, n_t, rng);
}

struct InterferenceSpec {
  enum class Kind { White, Colored };
  Kind kind = Kind::White;
  double sigma2 = 1.0;
  double condition_target = 10.0;  // coloured only

  static InterferenceSpec white(double sigma2) { return {Kind::White, sigma2, 1.0}; }
  static InterferenceSpec colored(double condition, double sigma2 = 1.0) { return {Kind::Colored, sigma2, condition}; }
};

/// White: sigma2 I. Coloured: L L* + eps I with L Gaussian and eps set so the
/// condition number lands near the target, then rescaled to trace N * sigma2.
template <typename Real = double>
CMat<Real> interference_cov(const InterferenceSpec& spec, Index n_r, Rng* rng = nullptr) {
  if (!(spec.sigma2 > 0)) fail(ErrorCode::InvalidSigma, "noise variance must be positive");
  if (n_r < 1) fail(ErrorCode::InvalidSize, "N_r must be positive");
  const Real sigma2 = static_cast<Real>(spec.sigma2);
  if (spec.kind == InterferenceSpec::Kind::White) return sigma2 * identity<Real>(n_r);

  if (rng == nullptr) fail(ErrorCode::InvalidParameter, "coloured interference needs a random stream");
  if (!(spec.condition_target > 1)) fail(ErrorCode::InvalidParameter, "condition target must exceed 1");
  const CMat<Real> l = complex_normal_matrix<Real>(n_r, n_r, *rng);
  CMat<Real> r = l * l.adjoint();
  r = (r + r.adjoint()) / Real(2);
  Eigen::SelfAdjointEigenSolver<CMat<Real>> es(r, Eigen::EigenvaluesOnly);
  const Real lo = es.eigenvalues()(0);
  const Real hi = es.eigenvalues()(n_r - 1);
  Real eps = hi / static_cast<Real>(spec.condition_target) - lo;
  if (!(eps > Real(0))) eps = scaled_tol<Real>(1e-12) * hi;
  r += eps * identity<Real>(n_r);
  r *= sigma2 * static_cast<Real>(n_r) / r.trace().real();
  return r;
}

/// Receive correlation with entries rho^(i-j) below the diagonal (conjugated
/// above); PSD for |rho| < 1.
template <typename Real = double>
CMat<Real> exponential_correlation(Index n, std::complex<Real> rho) {
  if (n < 1) fail(ErrorCode::InvalidSize, "N must be positive");
  if (!(std::abs(rho) < Real(1))) fail(ErrorCode::InvalidParameter, "|rho| must be below 1");
  CMat<Real> r(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      r(i, j) = i >= j ? std::pow(rho, static_cast<Real>(i - j)) : std::conj(std::pow(rho, static_cast<Real>(j - i)));
  return r;
}

/// Kronecker-model metadata; the analog design objective only reads r_r.
template <typename Real = double>
struct KroneckerParams {
  CMat<Real> r_r;
  Index users = 1;
  Index pilot_length = 1;
};

/// Debug dump: cluster,ray,re_alpha,im_alpha,phi_t,phi_r
template <typename Real>
void write_rays_csv(const std::vector<Ray<Real>>& rays, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path);
  out << "cluster,ray,re_alpha,im_alpha,phi_t,phi_r\n";
  out << std::setprecision(10);
  for (const auto& r : rays)
    out << r.cluster << ',' << r.ray << ',' << r.gain.real() << ',' << r.gain.imag() << ',' << r.phi_t << ',' << r.phi_r << '\n';
  if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace hbf
