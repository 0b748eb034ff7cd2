// SPDX-License-Identifier: Apache-2.0

#include <set>

#include <doctest.h>

#include "hbf/channel.hpp"
#include "hbf/precoder.hpp"
#include "oracles.hpp"

using namespace hbf;
using oracle::cd;
using oracle::Mat;

namespace {

std::vector<HardwareScheme> all_schemes(Index g) {
  return {HardwareScheme::s1(), HardwareScheme::s2(), HardwareScheme::s3(), HardwareScheme::s4(g),
          HardwareScheme::s5(g)};
}

DigitalPrecoderOpt<double> random_opt(Index n_t, Index n_rf, std::mt19937_64& g) {
  DigitalPrecoderOpt<double> opt;
  opt.v = oracle::random_unitary(n_t, g).leftCols(n_rf);
  opt.phi = Eigen::VectorXd::Ones(n_rf);
  return opt;
}

DigitalPrecoderOpt<double> mmwave_opt(std::uint64_t seed, Index n_rf) {
  Rng rng = substream(seed, {});
  const auto ch = mmwave_channel<double>(MmWaveParams{}, rng);
  return optimal_digital_precoder<double>(ch.h, Mat(Mat::Identity(15, 15)), SystemDims::minimal(10, 15, n_rf));
}

// S3 may select one antenna for two streams; the solver then reports a
// rank-deficient analog matrix and nothing else is acceptable.
template <typename F>
bool run_or_s3_collision(const HardwareScheme& s, F f) {
  try {
    f();
    return true;
  } catch (const Error& e) {
    const bool expected = s.kind == SchemeKind::S3_Switching &&
                          (e.code() == ErrorCode::RankDeficientAnalog || e.code() == ErrorCode::InnerSolverFailure);
    CHECK(expected);
    return false;
  }
}

bool non_increasing(const std::vector<double>& gaps) {
  for (std::size_t k = 1; k < gaps.size(); ++k)
    if (gaps[k] > gaps[k - 1] + 1e-12 * std::max(1.0, gaps[k - 1])) return false;
  return true;
}

}  // namespace

TEST_CASE("ls_digital_precoder") {
  std::mt19937_64 g(1);
  const Mat q = oracle::random_unitary(5, g).leftCols(2);
  const Mat coeff = oracle::gaussian(2, 2, g);
  CHECK((q * ls_digital_precoder<double>(q, Mat(q * coeff)) - q * coeff).norm() < 1e-12);

  const Mat two = 2.0 * Mat::Identity(3, 3);
  const Mat target = oracle::gaussian(3, 2, g);
  CHECK((ls_digital_precoder<double>(two, target) - target / 2.0).norm() < 1e-14);

  const Mat f = oracle::gaussian(6, 3, g);
  const Mat x = oracle::gaussian(6, 3, g);
  const Mat bb = ls_digital_precoder<double>(f, x);
  const double best = (f * bb - x).norm();
  CHECK((f * bb).squaredNorm() <= x.squaredNorm());
  for (int k = 0; k < 1000; ++k) REQUIRE((f * (bb + 0.05 * oracle::gaussian(3, 3, g)) - x).norm() >= best);

  Mat dup(4, 2);
  dup << 1, 1, 1, 1, 1, 1, 1, 1;
  try {
    ls_digital_precoder<double>(dup, Mat(Mat::Ones(4, 2)));
    FAIL("expected RankDeficientAnalog");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficientAnalog);
  }
}

TEST_CASE("MaGiQ on a unimodular orthogonal target converges in one step") {
  DigitalPrecoderOpt<double> opt;
  opt.v.resize(2, 2);
  opt.v << 1, 1, 1, -1;
  opt.v /= std::sqrt(2.0);
  opt.phi = Eigen::VectorXd::Ones(2);
  const auto r = magiq_precoder(opt, HardwareScheme::s2());
  Mat f_rf(2, 2);
  f_rf << 1, 1, 1, -1;
  CHECK((r.precoder.f_rf - f_rf).norm() < 1e-14);
  CHECK((r.precoder.f_bb - Mat::Identity(2, 2) / std::sqrt(2.0)).norm() < 1e-14);
  CHECK((r.precoder.product() - opt.v_phi()).norm() < 1e-14);
  CHECK(r.trace.iterations == 1);
  CHECK(r.trace.stop == StopReason::Threshold);

  const auto pe = pe_altmin_precoder(opt, HardwareScheme::s2(), 2);
  CHECK((pe.precoder.f_bb - std::sqrt(2.0) / f_rf.norm() * Mat::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("MaGiQ is exact on circulant channels") {
  for (Index l : {1, 2, 4}) {
    Rng rng = substream(100, {static_cast<std::uint64_t>(l)});
    std::vector<cd> gains;
    for (Index i = 0; i < l; ++i) gains.push_back(complex_normal<double>(rng));
    const Mat h = circulant_channel<double>(gains, 8, 8);
    const auto opt = optimal_digital_precoder<double>(h, Mat(Mat::Identity(8, 8)), SystemDims::minimal(8, 8, l));
    const auto r = magiq_precoder(opt, HardwareScheme::s2());
    CHECK((r.precoder.product() - opt.v_phi()).norm() <= 1e-10);
    CHECK(r.trace.iterations == 1);
  }
}

TEST_CASE("MaGiQ: monotone gap, optimal unitary steps, feasible and within power") {
  std::mt19937_64 g(2);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n_rf = 1 + trial % 4;
    const auto opt = random_opt(8, n_rf, g);
    for (const auto& s : all_schemes(3)) {
      PrecoderResult<double> r;
      if (!run_or_s3_collision(s, [&] { r = magiq_precoder(opt, s); })) continue;
      CHECK(non_increasing(r.trace.gaps));
      for (double slack : r.trace.procrustes_slack) CHECK(std::abs(slack) <= 1e-9 * 8 * n_rf);
      const Mat& t = r.trace.final_state.t;
      CHECK((t * t.adjoint() - Mat::Identity(n_rf, n_rf)).norm() < 1e-10);
      CHECK(feasible(s, r.precoder.f_rf));
      CHECK(r.precoder.power() <= static_cast<double>(n_rf) + 1e-9);
    }
  }
}

TEST_CASE("MaGiQ stops on the iteration cap and reports it") {
  const auto opt = mmwave_opt(3, 3);
  SolverControls ctl;
  ctl.max_iters = 1;
  const auto r = magiq_precoder(opt, HardwareScheme::s2(), ctl);
  CHECK(r.trace.iterations == 1);
  CHECK(r.trace.stop == StopReason::MaxIters);
  ctl.max_iters = 0;
  CHECK_THROWS_AS(magiq_precoder(opt, HardwareScheme::s2(), ctl), Error);
}

TEST_CASE("rank-deficient quantizations surface after the retry") {
  DigitalPrecoderOpt<double> opt;
  std::mt19937_64 g(4);
  const Mat v = oracle::gaussian(6, 1, g).normalized();
  opt.v.resize(6, 2);
  opt.v << v, v;  // both streams share one direction, every quantization has rank one
  opt.phi = Eigen::VectorXd::Ones(2);
  try {
    magiq_precoder(opt, HardwareScheme::s2());
    FAIL("expected RankDeficientAnalog");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficientAnalog);
  }
}

TEST_CASE("PE-AltMin meets the power budget with equality") {
  std::mt19937_64 g(5);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n_rf = 1 + trial % 4;
    auto opt = random_opt(8, n_rf, g);
    for (const auto& s : all_schemes(3)) {
      const auto r = pe_altmin_precoder(opt, s, n_rf);
      CHECK(std::abs(r.precoder.power() - static_cast<double>(n_rf)) <= 1e-9);
      CHECK(feasible(s, r.precoder.f_rf));
    }
  }
  // non-uniform power: a scaled unitary cannot reproduce V Phi
  DigitalPrecoderOpt<double> uneven;
  uneven.v = dft_columns<double>(4, 2);
  uneven.phi = Eigen::Vector2d(1.2, 0.6);
  const auto pe = pe_altmin_precoder(uneven, HardwareScheme::s2(), 2);
  CHECK((pe.precoder.product() - uneven.v_phi()).norm() > 1e-3);
}

TEST_CASE("MaGiQ's least-squares stage beats the scaled unitary on average") {
  double magiq = 0, pe = 0;
  const Mat eye = Mat::Identity(15, 15);
  for (std::uint64_t q = 0; q < 200; ++q) {
    const Index n_rf = 2 + static_cast<Index>(q % 5);
    Rng rng = substream(2024, {q});
    const Mat h = mmwave_channel<double>(MmWaveParams{}, rng).h;
    const auto opt = optimal_digital_precoder<double>(h, eye, SystemDims::minimal(10, 15, n_rf));
    const auto a = magiq_precoder(opt, HardwareScheme::s2()).precoder;
    const auto b = pe_altmin_precoder(opt, HardwareScheme::s2(), n_rf).precoder;
    magiq += analytic_mse<double>(Mat(h * a.product()), eye, eye, n_rf) / static_cast<double>(n_rf);
    pe += analytic_mse<double>(Mat(h * b.product()), eye, eye, n_rf) / static_cast<double>(n_rf);
  }
  CHECK(magiq <= pe);
}

TEST_CASE("SOMP selection") {
  std::mt19937_64 g(6);
  Dictionary<double> dict{oracle::gaussian(6, 12, g), std::vector<Index>(12, -1), false};

  const auto one = somp_select<double>(Mat(dict.columns.col(7)), dict, 1);
  CHECK(one.indices == std::vector<Index>{7});
  CHECK(one.residual < 1e-12);

  // two orthogonal atoms
  Mat q = oracle::random_unitary(6, g);
  Dictionary<double> orth{q, std::vector<Index>(6, -1), false};
  const Mat target = 1.5 * q.col(2) + cd(0, 0.8) * q.col(4);
  const auto two = somp_select<double>(target, orth, 2);
  CHECK(std::set<Index>(two.indices.begin(), two.indices.end()) == std::set<Index>{2, 4});
  CHECK(two.residual < 1e-12);

  const auto many = somp_select<double>(oracle::gaussian(6, 3, g), dict, 6);
  CHECK(std::set<Index>(many.indices.begin(), many.indices.end()).size() == 6);

  const auto pre = somp_precoder<double>(oracle::gaussian(6, 2, g), dict, HardwareScheme::s2(), 3, 2);
  CHECK(pre.power() == doctest::Approx(2.0).epsilon(1e-12));

  Dictionary<double> empty{Mat(6, 0), {}, false};
  try {
    somp_select<double>(target, empty, 1);
    FAIL("expected EmptyDictionary");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDictionary);
  }
  try {
    somp_select<double>(target, orth, 7);
    FAIL("expected RepeatSelectionExhausted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RepeatSelectionExhausted);
  }
}

TEST_CASE("SOMP respects S4 slots") {
  Rng rng = substream(8, {});
  std::mt19937_64 g(8);
  const Mat w = oracle::random_unitary(9, g).leftCols(3);
  const auto dict = gaussian_dictionary(HardwareScheme::s4(3), w, 30, rng);
  const auto sel = somp_select<double>(w, dict, 3);
  for (Index k = 0; k < 3; ++k) CHECK(dict.allowed_at(sel.indices[static_cast<std::size_t>(k)], k));
  CHECK(feasible(HardwareScheme::s4(3), sel.f_rf));
}

TEST_CASE("Alt-MaG with the quantize inner solver") {
  std::mt19937_64 g(9);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n_rf = 1 + trial % 3;
    const auto opt = random_opt(8, n_rf, g);
    for (const auto& s : all_schemes(3)) {
      PrecoderResult<double> r;
      if (!run_or_s3_collision(s, [&] { r = alt_mag<double>(opt, s, quantize_ls_inner<double>(), n_rf); })) continue;
      CHECK(non_increasing(r.trace.gaps));
      CHECK(feasible(s, r.precoder.f_rf));
      CHECK(r.precoder.power() <= static_cast<double>(n_rf) + 1e-9);
      const Mat& t = r.trace.final_state.t;
      CHECK((t * t.adjoint() - Mat::Identity(n_rf, n_rf)).norm() < 1e-10);
      for (double slack : r.trace.procrustes_slack) CHECK(std::abs(slack) <= 1e-9 * 8 * n_rf);
    }
  }
}

TEST_CASE("Alt-MaG over SOMP never loses to one-shot SOMP") {
  const auto dict = steering_dictionary<double>(10, 1000);
  for (std::uint64_t q = 0; q < 100; ++q) {
    const Index n_rf = 1 + static_cast<Index>(q % 4);
    const auto opt = mmwave_opt(500 + q, n_rf);
    const Mat x = opt.v_phi();
    const auto once = somp_select<double>(x, dict, n_rf);
    const double base = std::pow(once.residual, 2);
    const auto r = alt_mag<double>(opt, HardwareScheme::s2(), somp_inner<double>(dict, n_rf), n_rf);
    CHECK(r.trace.gaps.front() == doctest::Approx(base).epsilon(1e-10));
    CHECK(r.trace.final_state.gap <= base + 1e-12);
    CHECK(non_increasing(r.trace.gaps));
  }
}

TEST_CASE("Alt-MaG rejects an inner step that raises the gap") {
  std::mt19937_64 g(10);
  const auto opt = random_opt(8, 2, g);
  int calls = 0;
  InnerSolver<double> flaky = [&calls](const Mat& target, const HardwareScheme& s) {
    auto good = quantize_ls_inner<double>()(target, s);
    if (calls++ > 0) good.second *= 0.0;
    return good;
  };
  const auto r = alt_mag<double>(opt, HardwareScheme::s2(), flaky, 2);
  CHECK(r.trace.stop == StopReason::Rejected);
  CHECK(non_increasing(r.trace.gaps));
  CHECK(r.precoder.f_bb.norm() > 0);

  InnerSolver<double> broken = [](const Mat&, const HardwareScheme&) -> std::pair<Mat, Mat> {
    fail(ErrorCode::RankDeficientAnalog, "inner blew up");
  };
  try {
    alt_mag<double>(opt, HardwareScheme::s2(), broken, 2);
    FAIL("expected InnerSolverFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InnerSolverFailure);
  }
}

TEST_CASE("precoders instantiate for float") {
  DigitalPrecoderOpt<float> opt;
  opt.v = CMat<float>::Identity(4, 2);
  opt.phi = RVec<float>::Ones(2);
  const auto r = magiq_precoder(opt, HardwareScheme::s5(2));
  CHECK(feasible(HardwareScheme::s5(2), r.precoder.f_rf));
}
