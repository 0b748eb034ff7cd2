// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include "hbf/harness.hpp"

namespace hbf {

namespace {

constexpr const char* kHeader = "scenario,algorithm,scheme,n_rf,snr_db,trials,mse,mse_opt,mse_gap,stderr,failures,wall_ms,seed";

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string to_csv(std::vector<ResultRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const ResultRecord& a, const ResultRecord& b) {
    return std::tie(a.scenario, a.algorithm, a.scheme, a.n_rf, a.snr_db) <
           std::tie(b.scenario, b.algorithm, b.scheme, b.n_rf, b.snr_db);
  });
  std::string out = kHeader;
  out += '\n';
  for (const auto& r : records) {
    out += r.scenario + ',' + r.algorithm + ',' + r.scheme + ',' + std::to_string(r.n_rf) + ',' + num(r.snr_db) + ',' +
           std::to_string(r.trials) + ',' + num(r.mse) + ',' + num(r.mse_opt) + ',' + num(r.mse_gap) + ',' +
           num(r.std_error) + ',' + std::to_string(r.failures) + ',' + num(r.wall_ms) + ',' + std::to_string(r.seed) +
           '\n';
  }
  return out;
}

void write_csv(const std::vector<ResultRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << to_csv(records);
  if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

std::vector<ResultRecord> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kHeader) fail(ErrorCode::IoError, path + ": unexpected header");
  std::vector<ResultRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 13) fail(ErrorCode::IoError, path + ": expected 13 fields in '" + line + "'");
    try {
      ResultRecord r;
      r.scenario = f[0];
      r.algorithm = f[1];
      r.scheme = f[2];
      r.n_rf = std::stoll(f[3]);
      r.snr_db = std::stod(f[4]);
      r.trials = std::stoll(f[5]);
      r.mse = std::stod(f[6]);
      r.mse_opt = std::stod(f[7]);
      r.mse_gap = std::stod(f[8]);
      r.std_error = std::stod(f[9]);
      r.failures = std::stoll(f[10]);
      r.wall_ms = std::stod(f[11]);
      r.seed = std::stoull(f[12]);
      out.push_back(r);
    } catch (const std::exception&) {
      fail(ErrorCode::IoError, path + ": malformed row '" + line + "'");
    }
  }
  return out;
}

}  // namespace hbf
