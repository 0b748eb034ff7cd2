// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "hbf/types.hpp"

namespace hbf {

using Rng = std::mt19937_64;

/// Independent stream for a (seed, index...) tuple. Streams depend only on
/// the tuple, so work split across any number of threads sees the same draws.
inline Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (path.size() + 1));
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto v : path) push(v);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

/// Standard circularly-symmetric complex Gaussian, E|z|^2 = 1.
template <typename Real>
std::complex<Real> complex_normal(Rng& rng) {
  std::normal_distribution<Real> normal(Real(0), std::sqrt(Real(0.5)));
  const Real re = normal(rng);
  const Real im = normal(rng);
  return {re, im};
}

template <typename Real>
CMat<Real> complex_normal_matrix(Index rows, Index cols, Rng& rng) {
  CMat<Real> out(rows, cols);
  // column-major fill order is part of the reproducibility contract
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = complex_normal<Real>(rng);
  return out;
}

template <typename Real>
Real uniform_angle(Rng& rng) {
  std::uniform_real_distribution<Real> uni(Real(0), Real(2 * M_PI));
  Real phi = uni(rng);
  // libstdc++ can round up to the upper bound for float
  if (phi >= Real(2 * M_PI)) phi = Real(0);
  return phi;
}

}  // namespace hbf
