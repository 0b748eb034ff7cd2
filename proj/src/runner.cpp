// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "hbf/combiner.hpp"
#include "hbf/harness.hpp"
#include "hbf/parallel.hpp"

namespace hbf {

namespace {

using Mat = ComplexMatrix;

struct Outcome {
  bool ok = false;
  double mse = 0;
  double ms = 0;
  std::string error;
};

struct Point {
  Index n_rf;
  double snr_db;
};

std::vector<Point> sweep_points(const ExperimentConfig& c) {
  std::vector<Point> pts;
  for (double v : c.sweep.values) {
    if (c.sweep.axis == SweepSpec::Axis::NRf) pts.push_back({static_cast<Index>(v), c.sweep.snr_db});
    else pts.push_back({c.sweep.n_rf, v});
  }
  return pts;
}

struct Draw {
  Mat h;
  Mat r_z;
  Mat r_r;
};

Draw draw_trial(const ExperimentConfig& c, Index q) {
  Rng rng = substream(c.seed, {0, static_cast<std::uint64_t>(q)});
  Draw d;
  if (c.side == Side::Kronecker) {
    const double phase = uniform_angle<double>(rng);
    d.r_r = exponential_correlation<double>(c.n_r, std::polar(c.kron_rho, phase));
    return d;
  }
  switch (c.channel.kind) {
    case ChannelSpec::Kind::MmWave: {
      MmWaveParams p{c.n_t, c.n_r, c.channel.n_cl, c.channel.n_ray, c.channel.d_over_lambda};
      d.h = mmwave_channel<double>(p, rng).h;
      break;
    }
    case ChannelSpec::Kind::Circulant: {
      const Index l = c.channel.paths > 0 ? c.channel.paths : std::min(c.n_t, c.n_r);
      std::vector<std::complex<double>> gains;
      for (Index i = 0; i < l; ++i) gains.push_back(c.channel.gain_scale * complex_normal<double>(rng));
      d.h = circulant_channel<double>(gains, c.n_t, c.n_r);
      break;
    }
    case ChannelSpec::Kind::Gaussian: d.h = gaussian_channel<double>(c.n_t, c.n_r, rng); break;
  }
  d.r_z = interference_cov<double>(c.interference, c.n_r, &rng);
  return d;
}

bool use_steering(const ExperimentConfig& c, const AlgorithmSpec& a, const HardwareScheme& s) {
  if (a.dictionary == "steering") return true;
  if (a.dictionary == "gaussian") return false;
  const bool unimodular = s.kind == SchemeKind::S1_FullPSandSwitches || s.kind == SchemeKind::S2_FullPS;
  return unimodular && c.side != Side::Kronecker && c.channel.kind == ChannelSpec::Kind::MmWave;
}

Dictionary<double> make_dictionary(const ExperimentConfig& c, const AlgorithmSpec& a, const HardwareScheme& s,
                                   const Mat& reference, Rng rng) {
  const Index n = reference.rows();
  if (use_steering(c, a, s))
    return steering_dictionary<double>(n, a.dictionary_size > 0 ? a.dictionary_size : 1000, c.channel.d_over_lambda);
  return gaussian_dictionary<double>(s, reference, a.dictionary_size > 0 ? a.dictionary_size : 10 * n, rng);
}

double per_stream(const Mat& h_bar, const Mat& r_z, const Mat& w_rf) {
  const Index n_s = h_bar.cols();
  return analytic_mse<double>(h_bar, r_z, w_rf, n_s) / static_cast<double>(n_s);
}

void require_feasible(const HardwareScheme& s, const Mat& analog) {
  if (!feasible(s, analog)) fail(ErrorCode::InvalidParameter, "designed analog matrix is infeasible for " + s.name());
}

// Designs for one (trial, sweep point); fills outcomes[j * n_alg + a] and the reference MSE.
class TrialRunner {
 public:
  TrialRunner(const ExperimentConfig& c, const std::vector<HardwareScheme>& schemes, bool timing)
      : c_(c), schemes_(schemes), timing_(timing) {}

  double run(const Draw& d, Index q, std::size_t point_index, const Point& pt, std::vector<Outcome>& out) const {
    switch (c_.side) {
      case Side::Precoder: return precoder(d, q, point_index, pt, out);
      case Side::Combiner: return combiner(d, q, point_index, pt, out);
      case Side::Kronecker: return kronecker(d, q, point_index, pt, out);
    }
    return 0;
  }

 private:
  template <typename Fn>
  void each(Index q, std::size_t point_index, std::vector<Outcome>& out, Fn&& design) const {
    const std::size_t n_alg = c_.algorithms.size();
    for (std::size_t j = 0; j < schemes_.size(); ++j) {
      for (std::size_t a = 0; a < n_alg; ++a) {
        Outcome& o = out[j * n_alg + a];
        const auto start = std::chrono::steady_clock::now();
        Rng dict_rng = substream(c_.seed, {1, static_cast<std::uint64_t>(q), point_index, j});
        try {
          o.mse = design(schemes_[j], c_.algorithms[a], dict_rng);
          o.ok = std::isfinite(o.mse);
          if (!o.ok) o.error = "non-finite MSE";
        } catch (const Error& e) {
          o.ok = false;
          o.error = e.what();
        }
        if (timing_)
          o.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      }
    }
  }

  double precoder(const Draw& d, Index q, std::size_t pi, const Point& pt, std::vector<Outcome>& out) const {
    const auto dims = SystemDims::minimal(c_.n_t, c_.n_r, pt.n_rf);
    const double p_r = c_.interference.sigma2 * std::pow(10.0, pt.snr_db / 10.0);
    const auto opt = optimal_digital_precoder<double>(d.h, d.r_z, dims);
    const Mat vphi = opt.v_phi();
    const Mat h = std::sqrt(p_r) * d.h;
    const Mat eye = identity<double>(c_.n_r);
    each(q, pi, out, [&](const HardwareScheme& s, const AlgorithmSpec& a, Rng& rng) {
      HybridPrecoder<double> f;
      if (a.name == "magiq") {
        f = magiq_precoder(opt, s, a.controls).precoder;
      } else if (a.name == "pe_altmin") {
        f = pe_altmin_precoder(opt, s, dims.n_s, a.controls).precoder;
      } else if (a.name == "somp") {
        f = somp_precoder<double>(vphi, make_dictionary(c_, a, s, vphi, rng), s, dims.n_rf_t, dims.n_s);
      } else if (a.name == "altmag_somp") {
        f = alt_mag<double>(opt, s, somp_inner<double>(make_dictionary(c_, a, s, vphi, rng), dims.n_rf_t), dims.n_s,
                            a.controls)
                .precoder;
      } else {
        f = alt_mag<double>(opt, s, quantize_ls_inner<double>(), dims.n_s, a.controls).precoder;
      }
      require_feasible(s, f.f_rf);
      return per_stream(Mat(h * f.product()), d.r_z, eye);
    });
    return per_stream(Mat(h * vphi), d.r_z, eye);
  }

  double combiner(const Draw& d, Index q, std::size_t pi, const Point& pt, std::vector<Outcome>& out) const {
    const auto dims = SystemDims::minimal(c_.n_t, c_.n_r, pt.n_rf);
    const double p_r = c_.interference.sigma2 * std::pow(10.0, pt.snr_db / 10.0);
    const auto opt = optimal_digital_precoder<double>(d.h, d.r_z, dims);
    const Mat h_bar = std::sqrt(p_r) * d.h * opt.v_phi();
    const Index n_rf = dims.n_rf_r;
    Mat reference;
    each(q, pi, out, [&](const HardwareScheme& s, const AlgorithmSpec& a, Rng& rng) {
      Mat w_rf;
      if (a.name == "magiq") {
        w_rf = magiq_combiner<double>(h_bar, d.r_z, s, n_rf, a.controls).combiner.w_rf;
      } else {
        if (reference.size() == 0) reference = optimal_digital_combiner<double>(h_bar, d.r_z, n_rf).w_opt;
        const auto dict = make_dictionary(c_, a, s, reference, rng);
        if (a.name == "grtm") w_rf = grtm_combiner<double>(h_bar, d.r_z, s, dict, n_rf).combiner.w_rf;
        else w_rf = somp_combiner<double>(h_bar, d.r_z, s, dict, n_rf).w_rf;
      }
      require_feasible(s, w_rf);
      return per_stream(h_bar, d.r_z, w_rf);
    });
    return per_stream(h_bar, d.r_z, identity<double>(c_.n_r));
  }

  double kronecker(const Draw& d, Index q, std::size_t pi, const Point& pt, std::vector<Outcome>& out) const {
    const Mat& r = d.r_r;
    const Mat a2 = r * r;
    const auto best = ratio_trace_optimum<double>(a2, r, pt.n_rf);
    each(q, pi, out, [&](const HardwareScheme& s, const AlgorithmSpec& a, Rng& rng) {
      Mat w_rf;
      double mu = 0;
      if (a.name == "grtm") {
        const auto k = kronecker_combiner<double>(r, make_dictionary(c_, a, s, best.w_opt, rng), pt.n_rf);
        w_rf = k.w_rf;
        mu = k.mu;
      } else {
        auto quant = magiq_quantize<double>(best.w_opt, s, a.controls);
        w_rf = quant.analog;
        mu = trace_objective<double>(w_rf, a2, r);
      }
      require_feasible(s, w_rf);
      return 1.0 / mu;
    });
    return 1.0 / best.values.sum();
  }

  const ExperimentConfig& c_;
  const std::vector<HardwareScheme>& schemes_;
  bool timing_;
};

}  // namespace

RunResult run_scenario(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const auto schemes = config.effective_schemes();
  const auto points = sweep_points(config);
  const std::size_t n_alg = config.algorithms.size();
  const std::size_t per_point = schemes.size() * n_alg;
  const auto trials = static_cast<std::size_t>(config.trials);

  // outcomes[q][i][j * n_alg + a], reference[q][i]
  std::vector<std::vector<std::vector<Outcome>>> outcomes(trials);
  std::vector<std::vector<double>> reference(trials);
  const TrialRunner runner(config, schemes, options.timing);
  parallel_for(trials, options.workers, [&](std::size_t q) {
    const Draw d = draw_trial(config, static_cast<Index>(q));
    outcomes[q].assign(points.size(), std::vector<Outcome>(per_point));
    reference[q].assign(points.size(), 0.0);
    for (std::size_t i = 0; i < points.size(); ++i)
      reference[q][i] = runner.run(d, static_cast<Index>(q), i, points[i], outcomes[q][i]);
  });

  RunResult result;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < schemes.size(); ++j) {
      for (std::size_t a = 0; a < n_alg; ++a) {
        ResultRecord rec;
        rec.scenario = config.scenario;
        rec.algorithm = config.algorithms[a].name;
        rec.scheme = schemes[j].name();
        rec.n_rf = points[i].n_rf;
        rec.snr_db = points[i].snr_db;
        rec.trials = config.trials;
        rec.seed = config.seed;
        double sum = 0, sum_opt = 0, ms = 0;
        std::vector<double> values;
        for (std::size_t q = 0; q < trials; ++q) {
          const Outcome& o = outcomes[q][i][j * n_alg + a];
          ms += o.ms;
          if (!o.ok) {
            ++rec.failures;
            std::ostringstream line;
            line << "trial " << q << " " << rec.algorithm << "/" << rec.scheme << " n_rf=" << rec.n_rf
                 << " snr_db=" << rec.snr_db << ": " << o.error;
            result.failures.push_back(line.str());
            continue;
          }
          values.push_back(o.mse);
          sum += o.mse;
          sum_opt += reference[q][i];
        }
        const auto n = static_cast<double>(values.size());
        if (values.empty()) {
          rec.mse = rec.mse_opt = rec.mse_gap = std::numeric_limits<double>::quiet_NaN();
        } else {
          rec.mse = sum / n;
          rec.mse_opt = sum_opt / n;
          rec.mse_gap = rec.mse - rec.mse_opt;
          double var = 0;
          for (double v : values) var += (v - rec.mse) * (v - rec.mse);
          rec.std_error = values.size() > 1 ? std::sqrt(var / (n - 1) / n) : 0.0;
        }
        rec.wall_ms = ms;
        result.records.push_back(rec);
      }
    }
  }
  return result;
}

}  // namespace hbf
