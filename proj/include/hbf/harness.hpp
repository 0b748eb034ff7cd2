// SPDX-License-Identifier: Apache-2.0
//
// Experiment engine: declarative scenario configs, named presets, seeded
// trial-parallel Monte Carlo sweeps and CSV output.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hbf/beamform.hpp"
#include "hbf/channel.hpp"
#include "hbf/hardware.hpp"
#include "hbf/precoder.hpp"

namespace hbf {

enum class Side { Precoder, Combiner, Kronecker };

struct ChannelSpec {
  enum class Kind { MmWave, Circulant, Gaussian };
  Kind kind = Kind::MmWave;
  Index n_cl = 6;
  Index n_ray = 1;
  double d_over_lambda = 0.5;
  Index paths = 0;  // circulant: number of gains, 0 means min(N_t, N_r)
  double gain_scale = 1.0;
};

struct AlgorithmSpec {
  std::string name;
  SolverControls controls;
  std::string dictionary = "auto";  // auto | steering | gaussian
  Index dictionary_size = 0;        // 0 picks 1000 (steering) or 10 N (gaussian)
};

struct SweepSpec {
  enum class Axis { NRf, SnrDb };
  Axis axis = Axis::NRf;
  std::vector<double> values;
  double snr_db = 0;  // fixed SNR when sweeping N_RF
  Index n_rf = 3;     // fixed N_RF when sweeping SNR
};

struct ExperimentConfig {
  std::string scenario = "custom";
  std::string note;
  Side side = Side::Combiner;
  Index n_t = 10;
  Index n_r = 15;
  ChannelSpec channel;
  InterferenceSpec interference = InterferenceSpec::white(1.0);
  std::vector<HardwareScheme> schemes{HardwareScheme::s2()};
  bool s1_variant = false;  // also run S1 next to the listed schemes
  std::vector<AlgorithmSpec> algorithms;
  SweepSpec sweep;
  double kron_rho = 0.9;  // |rho| of the receive correlation, phase drawn per trial
  Index trials = 100;
  std::uint64_t seed = 1;
  std::string output;

  /// Schemes actually run, with the S1 variant appended when requested.
  std::vector<HardwareScheme> effective_schemes() const;
  void validate() const;
};

struct ResultRecord {
  std::string scenario;
  std::string algorithm;
  std::string scheme;
  Index n_rf = 0;
  double snr_db = 0;
  Index trials = 0;
  double mse = 0;      // per-stream average over successful trials
  double mse_opt = 0;  // fully-digital reference over the same trials
  double mse_gap = 0;
  double std_error = 0;
  Index failures = 0;
  double wall_ms = 0;
  std::uint64_t seed = 0;
};

struct RunOptions {
  std::size_t workers = 1;
  bool timing = false;  // wall_ms stays 0 otherwise so output is byte-stable
};

struct RunResult {
  std::vector<ResultRecord> records;
  std::vector<std::string> failures;  // one line per failed (trial, design)
};

std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

RunResult run_scenario(const ExperimentConfig& config, const RunOptions& options = RunOptions{});

/// Rows sorted by (scenario, algorithm, scheme, n_rf, snr_db).
std::string to_csv(std::vector<ResultRecord> records);
void write_csv(const std::vector<ResultRecord>& records, const std::string& path);
std::vector<ResultRecord> read_csv(const std::string& path);

}  // namespace hbf
