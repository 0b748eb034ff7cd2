// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <fstream>
#include <set>

#include "hbf/harness.hpp"

namespace hbf {

namespace {

using nlohmann::json;

const std::set<std::string>& algorithms_for(Side side) {
  static const std::set<std::string> pre{"magiq", "pe_altmin", "somp", "altmag_somp", "altmag_quant"};
  static const std::set<std::string> comb{"magiq", "grtm", "somp"};
  static const std::set<std::string> kron{"magiq", "grtm"};
  switch (side) {
    case Side::Precoder: return pre;
    case Side::Combiner: return comb;
    case Side::Kronecker: return kron;
  }
  return comb;
}

std::string side_name(Side s) {
  switch (s) {
    case Side::Precoder: return "precoder";
    case Side::Combiner: return "combiner";
    case Side::Kronecker: return "kronecker";
  }
  return "?";
}

[[noreturn]] void bad(const std::string& what) { fail(ErrorCode::InvalidConfig, what); }

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(where + " must be an object");
  for (const auto& item : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; }))
      bad("unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    bad(std::string("bad value for '") + key + "': " + e.what());
  }
}

HardwareScheme scheme_from_json(const json& j) {
  check_keys(j, "scheme", {"kind", "g", "subarrays"});
  const auto kind = get_or<std::string>(j, "kind", "");
  const auto g = get_or<Index>(j, "g", 0);
  if (kind == "S1") return HardwareScheme::s1();
  if (kind == "S2") return HardwareScheme::s2();
  if (kind == "S3") return HardwareScheme::s3();
  if (kind == "S4") return HardwareScheme::s4(g, get_or<std::vector<std::vector<Index>>>(j, "subarrays", {}));
  if (kind == "S5") return HardwareScheme::s5(g);
  bad("unknown scheme kind '" + kind + "'");
}

json scheme_to_json(const HardwareScheme& s) {
  json j;
  switch (s.kind) {
    case SchemeKind::S1_FullPSandSwitches: j["kind"] = "S1"; break;
    case SchemeKind::S2_FullPS: j["kind"] = "S2"; break;
    case SchemeKind::S3_Switching: j["kind"] = "S3"; break;
    case SchemeKind::S4_FixedSubarrays: j["kind"] = "S4"; break;
    case SchemeKind::S5_FlexibleSubarrays: j["kind"] = "S5"; break;
  }
  if (s.has_connectivity()) j["g"] = s.g;
  if (!s.subarrays.empty()) j["subarrays"] = s.subarrays;
  return j;
}

AlgorithmSpec algorithm(const std::string& name) { return AlgorithmSpec{name, {}, "auto", 0}; }

std::vector<double> range(int lo, int hi) {
  std::vector<double> v;
  for (int i = lo; i <= hi; ++i) v.push_back(i);
  return v;
}

const std::vector<double> kSnrGrid{-10, -5, 0, 5, 10};

}  // namespace

std::vector<HardwareScheme> ExperimentConfig::effective_schemes() const {
  auto out = schemes;
  const bool has_s1 = std::any_of(out.begin(), out.end(),
                                  [](const HardwareScheme& s) { return s.kind == SchemeKind::S1_FullPSandSwitches; });
  if (s1_variant && !has_s1) out.push_back(HardwareScheme::s1());
  return out;
}

void ExperimentConfig::validate() const {
  if (scenario.empty()) bad("scenario name is empty");
  if (n_t < 1 || n_r < 1) bad("antenna counts must be positive");
  if (trials < 1) bad("trials must be at least 1");
  if (sweep.values.empty()) bad("sweep needs at least one value");
  if (schemes.empty()) bad("at least one scheme is required");
  if (algorithms.empty()) bad("at least one algorithm is required");
  if (!(interference.sigma2 > 0)) bad("sigma2 must be positive");
  if (interference.kind == InterferenceSpec::Kind::Colored && !(interference.condition_target > 1))
    bad("condition target must exceed 1");
  if (channel.kind == ChannelSpec::Kind::MmWave && (channel.n_cl < 1 || channel.n_ray < 1))
    bad("cluster and ray counts must be positive");
  if (channel.kind == ChannelSpec::Kind::Circulant && (channel.paths < 0 || channel.paths > std::min(n_t, n_r)))
    bad("circulant paths must lie in [0, min(N_t, N_r)]");
  if (side == Side::Kronecker && !(kron_rho >= 0 && kron_rho < 1)) bad("kronecker rho must lie in [0, 1)");

  const Index n_analog = side == Side::Precoder ? n_t : n_r;
  std::vector<Index> n_rfs;
  if (sweep.axis == SweepSpec::Axis::NRf) {
    for (double v : sweep.values) {
      if (v != static_cast<double>(static_cast<Index>(v))) bad("n_rf sweep values must be integers");
      n_rfs.push_back(static_cast<Index>(v));
    }
  } else {
    n_rfs.push_back(sweep.n_rf);
  }
  for (Index k : n_rfs) {
    if (k < 1 || k > std::min(n_t, n_r)) bad("N_RF must lie in [1, min(N_t, N_r)]");
  }
  for (const auto& s : effective_schemes()) {
    if (s.has_connectivity() && (s.g < 1 || s.g > n_analog)) bad("scheme " + s.name() + " needs 1 <= G <= N");
    if (!s.subarrays.empty()) {
      for (Index k : n_rfs) {
        try {
          subarray_layout(s, n_analog, k);
        } catch (const Error& e) {
          bad(std::string("scheme ") + s.name() + ": " + e.what());
        }
      }
    }
  }
  const auto& known = algorithms_for(side);
  for (const auto& a : algorithms) {
    if (!known.count(a.name)) bad("algorithm '" + a.name + "' is not available on the " + side_name(side) + " side");
    if (a.dictionary != "auto" && a.dictionary != "steering" && a.dictionary != "gaussian")
      bad("dictionary must be auto, steering or gaussian");
    if (a.dictionary_size < 0) bad("dictionary_size must be nonnegative");
    if (a.dictionary == "steering") {
      for (const auto& s : effective_schemes()) {
        if (s.kind != SchemeKind::S1_FullPSandSwitches && s.kind != SchemeKind::S2_FullPS)
          bad("steering dictionaries are only feasible for S1 and S2, not " + s.name());
      }
    }
    try {
      a.controls.validate();
    } catch (const Error& e) {
      bad(e.what());
    }
  }
}

std::vector<std::string> preset_names() { return {"fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "kron"}; }

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.scenario = name;
  c.seed = 1;
  if (name == "fig2") {
    c.note = "precoder: iterative quantization vs scaled-unitary digital stage, full phase-shifter network";
    c.side = Side::Precoder;
    c.algorithms = {algorithm("magiq"), algorithm("pe_altmin")};
    c.sweep = {SweepSpec::Axis::NRf, range(1, 6), 0, 0};
    c.trials = 200;
  } else if (name == "fig3") {
    c.note = "precoder gap vs N_RF. Captioned for the phase-and-switch network but discussed as a phase-shifter "
             "comparison; runs S2, set s1_variant to add S1";
    c.side = Side::Precoder;
    c.algorithms = {algorithm("somp"), algorithm("magiq"), algorithm("altmag_somp")};
    c.sweep = {SweepSpec::Axis::NRf, range(1, 6), 0, 0};
    c.trials = 200;
  } else if (name == "fig4") {
    c.note = "combiner gap vs N_RF, full phase-shifter network";
    c.side = Side::Combiner;
    c.algorithms = {algorithm("magiq"), algorithm("grtm"), algorithm("somp")};
    c.sweep = {SweepSpec::Axis::NRf, range(1, 6), 0, 0};
    c.trials = 200;
  } else if (name == "fig5") {
    c.note = "large receive array with few clusters, where the channel singular vectors are nearly unimodular";
    c.side = Side::Combiner;
    c.n_r = 150;
    c.channel.n_cl = 4;
    c.algorithms = {algorithm("magiq"), algorithm("grtm"), algorithm("somp")};
    c.sweep = {SweepSpec::Axis::SnrDb, kSnrGrid, 0, 4};
    c.trials = 100;
  } else if (name == "fig6") {
    c.note = "fixed vs flexible sub-arrays with G = 5";
    c.side = Side::Combiner;
    c.schemes = {HardwareScheme::s4(5), HardwareScheme::s5(5)};
    c.algorithms = {algorithm("magiq"), algorithm("grtm"), algorithm("somp")};
    c.sweep = {SweepSpec::Axis::SnrDb, kSnrGrid, 0, 3};
    c.trials = 200;
  } else if (name == "fig7") {
    c.note = "i.i.d. Gaussian channel with coloured interference, phase-and-switch network";
    c.side = Side::Combiner;
    c.channel.kind = ChannelSpec::Kind::Gaussian;
    c.interference = InterferenceSpec::colored(10.0, 1.0);
    c.schemes = {HardwareScheme::s1()};
    c.algorithms = {algorithm("magiq"), algorithm("grtm"), algorithm("somp")};
    c.sweep = {SweepSpec::Axis::SnrDb, kSnrGrid, 0, 3};
    c.trials = 200;
  } else if (name == "fig8") {
    c.note = "iterative quantization combiner across all five networks with G = 3";
    c.side = Side::Combiner;
    c.schemes = {HardwareScheme::s1(), HardwareScheme::s2(), HardwareScheme::s3(), HardwareScheme::s4(3),
                 HardwareScheme::s5(3)};
    c.algorithms = {algorithm("magiq")};
    c.sweep = {SweepSpec::Axis::SnrDb, kSnrGrid, 0, 3};
    c.trials = 200;
  } else if (name == "kron") {
    c.note = "analog design for channel estimation under receive correlation; mse column is 1/mu";
    c.side = Side::Kronecker;
    c.n_r = 32;
    c.schemes = {HardwareScheme::s2(), HardwareScheme::s5(8)};
    c.algorithms = {algorithm("grtm"), algorithm("magiq")};
    c.sweep = {SweepSpec::Axis::NRf, {1, 2, 4, 6}, 0, 0};
    c.trials = 50;
  } else {
    fail(ErrorCode::UnknownPreset, "unknown preset '" + name + "'");
  }
  c.output = name + ".csv";
  return c;
}

ExperimentConfig config_from_json(const json& j) {
  check_keys(j, "config", {"scenario", "note", "side", "dims", "channel", "interference", "schemes", "s1_variant",
                           "algorithms", "sweep", "kronecker", "trials", "seed", "output", "preset"});
  ExperimentConfig c;
  if (j.contains("preset")) c = preset(get_or<std::string>(j, "preset", ""));
  c.scenario = get_or<std::string>(j, "scenario", c.scenario);
  c.note = get_or<std::string>(j, "note", c.note);
  if (j.contains("side")) {
    const auto s = get_or<std::string>(j, "side", "");
    if (s == "precoder") c.side = Side::Precoder;
    else if (s == "combiner") c.side = Side::Combiner;
    else if (s == "kronecker") c.side = Side::Kronecker;
    else bad("side must be precoder, combiner or kronecker");
  }
  if (j.contains("dims")) {
    const auto& d = j.at("dims");
    check_keys(d, "dims", {"n_t", "n_r"});
    c.n_t = get_or<Index>(d, "n_t", c.n_t);
    c.n_r = get_or<Index>(d, "n_r", c.n_r);
  }
  if (j.contains("channel")) {
    const auto& ch = j.at("channel");
    check_keys(ch, "channel", {"kind", "n_cl", "n_ray", "d_over_lambda", "paths", "gain_scale"});
    const auto kind = get_or<std::string>(ch, "kind", "mmwave");
    if (kind == "mmwave") c.channel.kind = ChannelSpec::Kind::MmWave;
    else if (kind == "circulant") c.channel.kind = ChannelSpec::Kind::Circulant;
    else if (kind == "gaussian") c.channel.kind = ChannelSpec::Kind::Gaussian;
    else bad("channel kind must be mmwave, circulant or gaussian");
    c.channel.n_cl = get_or<Index>(ch, "n_cl", c.channel.n_cl);
    c.channel.n_ray = get_or<Index>(ch, "n_ray", c.channel.n_ray);
    c.channel.d_over_lambda = get_or<double>(ch, "d_over_lambda", c.channel.d_over_lambda);
    c.channel.paths = get_or<Index>(ch, "paths", c.channel.paths);
    c.channel.gain_scale = get_or<double>(ch, "gain_scale", c.channel.gain_scale);
  }
  if (j.contains("interference")) {
    const auto& in = j.at("interference");
    check_keys(in, "interference", {"kind", "sigma2", "condition"});
    const auto kind = get_or<std::string>(in, "kind", "white");
    const double sigma2 = get_or<double>(in, "sigma2", 1.0);
    if (kind == "white") c.interference = InterferenceSpec::white(sigma2);
    else if (kind == "colored") c.interference = InterferenceSpec::colored(get_or<double>(in, "condition", 10.0), sigma2);
    else bad("interference kind must be white or colored");
  }
  if (j.contains("schemes")) {
    if (!j.at("schemes").is_array()) bad("schemes must be a list");
    c.schemes.clear();
    for (const auto& s : j.at("schemes")) c.schemes.push_back(scheme_from_json(s));
  }
  c.s1_variant = get_or<bool>(j, "s1_variant", c.s1_variant);
  if (j.contains("algorithms")) {
    if (!j.at("algorithms").is_array()) bad("algorithms must be a list");
    c.algorithms.clear();
    for (const auto& a : j.at("algorithms")) {
      if (a.is_string()) {
        c.algorithms.push_back(algorithm(a.get<std::string>()));
        continue;
      }
      check_keys(a, "algorithm", {"name", "threshold", "max_iters", "stall_tol", "dictionary", "dictionary_size"});
      AlgorithmSpec spec = algorithm(get_or<std::string>(a, "name", ""));
      spec.controls.threshold = get_or<double>(a, "threshold", spec.controls.threshold);
      spec.controls.max_iters = get_or<int>(a, "max_iters", spec.controls.max_iters);
      spec.controls.stall_tol = get_or<double>(a, "stall_tol", spec.controls.stall_tol);
      spec.dictionary = get_or<std::string>(a, "dictionary", spec.dictionary);
      spec.dictionary_size = get_or<Index>(a, "dictionary_size", spec.dictionary_size);
      c.algorithms.push_back(spec);
    }
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    check_keys(s, "sweep", {"axis", "values", "snr_db", "n_rf"});
    const auto axis = get_or<std::string>(s, "axis", "n_rf");
    if (axis == "n_rf") c.sweep.axis = SweepSpec::Axis::NRf;
    else if (axis == "snr_db") c.sweep.axis = SweepSpec::Axis::SnrDb;
    else bad("sweep axis must be n_rf or snr_db");
    c.sweep.values = get_or<std::vector<double>>(s, "values", c.sweep.values);
    c.sweep.snr_db = get_or<double>(s, "snr_db", c.sweep.snr_db);
    c.sweep.n_rf = get_or<Index>(s, "n_rf", c.sweep.n_rf);
  }
  if (j.contains("kronecker")) {
    const auto& k = j.at("kronecker");
    check_keys(k, "kronecker", {"rho"});
    c.kron_rho = get_or<double>(k, "rho", c.kron_rho);
  }
  c.trials = get_or<Index>(j, "trials", c.trials);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.output = get_or<std::string>(j, "output", c.output);
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["scenario"] = c.scenario;
  if (!c.note.empty()) j["note"] = c.note;
  j["side"] = side_name(c.side);
  j["dims"] = {{"n_t", c.n_t}, {"n_r", c.n_r}};
  json ch;
  switch (c.channel.kind) {
    case ChannelSpec::Kind::MmWave:
      ch = {{"kind", "mmwave"}, {"n_cl", c.channel.n_cl}, {"n_ray", c.channel.n_ray},
            {"d_over_lambda", c.channel.d_over_lambda}};
      break;
    case ChannelSpec::Kind::Circulant:
      ch = {{"kind", "circulant"}, {"paths", c.channel.paths}, {"gain_scale", c.channel.gain_scale}};
      break;
    case ChannelSpec::Kind::Gaussian: ch = {{"kind", "gaussian"}}; break;
  }
  j["channel"] = ch;
  if (c.interference.kind == InterferenceSpec::Kind::White)
    j["interference"] = {{"kind", "white"}, {"sigma2", c.interference.sigma2}};
  else
    j["interference"] = {{"kind", "colored"}, {"sigma2", c.interference.sigma2}, {"condition", c.interference.condition_target}};
  j["schemes"] = json::array();
  for (const auto& s : c.schemes) j["schemes"].push_back(scheme_to_json(s));
  j["s1_variant"] = c.s1_variant;
  j["algorithms"] = json::array();
  for (const auto& a : c.algorithms) {
    j["algorithms"].push_back({{"name", a.name},
                               {"threshold", a.controls.threshold},
                               {"max_iters", a.controls.max_iters},
                               {"stall_tol", a.controls.stall_tol},
                               {"dictionary", a.dictionary},
                               {"dictionary_size", a.dictionary_size}});
  }
  if (c.sweep.axis == SweepSpec::Axis::NRf)
    j["sweep"] = {{"axis", "n_rf"}, {"values", c.sweep.values}, {"snr_db", c.sweep.snr_db}};
  else
    j["sweep"] = {{"axis", "snr_db"}, {"values", c.sweep.values}, {"n_rf", c.sweep.n_rf}};
  if (c.side == Side::Kronecker) j["kronecker"] = {{"rho", c.kron_rho}};
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["output"] = c.output;
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    bad(std::string("parse error: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace hbf
