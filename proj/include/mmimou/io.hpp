// SPDX-License-Identifier: Apache-2.0
//
// mmimou - system-level simulator for massive MIMO in unlicensed indoor bands
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmimou/config.hpp"
#include "mmimou/engine.hpp"

#ifndef MMIMOU_VERSION
#define MMIMOU_VERSION "0.1.0"
#endif

namespace mmimou {

inline constexpr int kSchemaVersion = 1;

inline std::string version_string() { return MMIMOU_VERSION; }

/// File system failure; the message names the path.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string num(double v) { return fmt_double(v); }

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  if (!std::filesystem::is_directory(dir))
    throw IoError("output path '" + dir.string() + "' is not a directory");
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing: " + std::strerror(errno));
  f << text;
  f.flush();
  if (!f) throw IoError("write to '" + path.string() + "' failed");
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

inline std::string access_metric(int ap) { return "access_rate_ap" + std::to_string(ap); }

inline std::string cdf_csv(const Cdf& cdf) {
  std::string out = "value,prob\n";
  for (const auto& [v, p] : cdf) out += num(v) + "," + num(p) + "\n";
  return out;
}

inline nlohmann::json cdf_json(const Cdf& cdf) {
  nlohmann::json v = nlohmann::json::array(), p = nlohmann::json::array();
  for (const auto& [x, q] : cdf) {
    v.push_back(x);
    p.push_back(q);
  }
  return {{"value", v}, {"prob", p}};
}

inline Cdf cdf_from_json(const nlohmann::json& j) {
  const auto& v = j.at("value");
  const auto& p = j.at("prob");
  if (v.size() != p.size()) throw IoError("CDF value/prob arrays differ in length");
  Cdf out;
  for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(v[i].get<double>(), p[i].get<double>());
  return out;
}

}  // namespace detail

/// Run manifest: schema, version, seed and the full configuration echo.
inline nlohmann::json manifest_json(const ResultSet& r, const std::vector<std::string>& files) {
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : config_entries(r.config)) cfg[k] = v;
  return {{"schema_version", kSchemaVersion},
          {"version", version_string()},
          {"scenario", to_string(r.config.scenario)},
          {"p_tr", r.config.p_tr},
          {"seed", r.config.seed},
          {"n_drops", r.drops.size()},
          {"n_rounds", r.config.n_rounds},
          {"files", files},
          {"config", cfg}};
}

/// Per-drop samples in long form: scenario,p_tr,drop,metric,value.
inline std::string samples_csv(const ResultSet& r, bool access_only) {
  const std::string prefix = to_string(r.config.scenario) + "," + detail::num(r.config.p_tr) + ",";
  std::string out = "scenario,p_tr,drop,metric,value\n";
  for (std::size_t d = 0; d < r.drops.size(); ++d) {
    const auto& dr = r.drops[d];
    const std::string row = prefix + std::to_string(d) + ",";
    if (access_only) {
      for (int ap = 0; ap < kNumAps; ++ap)
        if (dr.ap_attempts[ap] > 0)
          out += row + detail::access_metric(ap) + "," + detail::num(dr.access_rate(ap)) + "\n";
      continue;
    }
    out += row + "sum_throughput_bps," + detail::num(dr.sum_throughput_bps) + "\n";
    for (double s : dr.sinr_db) out += row + "sinr_db," + detail::num(s) + "\n";
  }
  return out;
}

/// Writes the result files into `dir` (created if missing) and returns their
/// paths. csv: access_rate.csv, samples.csv, sinr_cdf.csv, throughput_cdf.csv,
/// access_rate_cdf_ap<i>.csv; json: results.json. Both add manifest.json.
inline std::vector<std::filesystem::path> emit_results(const ResultSet& r,
                                                       const std::filesystem::path& dir,
                                                       OutputFormat format) {
  detail::ensure_directory(dir);
  std::vector<std::pair<std::string, std::string>> files;
  if (format == OutputFormat::csv) {
    files.emplace_back("access_rate.csv", samples_csv(r, true));
    files.emplace_back("samples.csv", samples_csv(r, false));
    files.emplace_back("sinr_cdf.csv", detail::cdf_csv(r.sinr_cdf()));
    files.emplace_back("throughput_cdf.csv", detail::cdf_csv(r.throughput_cdf()));
    for (int ap = 0; ap < kNumAps; ++ap)
      files.emplace_back("access_rate_cdf_ap" + std::to_string(ap) + ".csv",
                         detail::cdf_csv(r.access_rate_cdf(ap)));
  } else {
    nlohmann::json drops = nlohmann::json::array();
    for (const auto& d : r.drops) {
      nlohmann::json access = nlohmann::json::array();
      for (int ap = 0; ap < kNumAps; ++ap)
        access.push_back({{"attempts", d.ap_attempts[ap]}, {"grants", d.ap_grants[ap]}});
      drops.push_back({{"access", access},
                       {"sum_throughput_bps", d.sum_throughput_bps},
                       {"sinr_db", d.sinr_db}});
    }
    nlohmann::json cdfs = {{"sinr_db", detail::cdf_json(r.sinr_cdf())},
                           {"sum_throughput_bps", detail::cdf_json(r.throughput_cdf())}};
    for (int ap = 0; ap < kNumAps; ++ap)
      cdfs[detail::access_metric(ap)] = detail::cdf_json(r.access_rate_cdf(ap));
    nlohmann::json doc = {{"schema_version", kSchemaVersion},
                          {"scenario", to_string(r.config.scenario)},
                          {"p_tr", r.config.p_tr},
                          {"drops", drops},
                          {"cdfs", cdfs}};
    files.emplace_back("results.json", doc.dump(1) + "\n");
  }

  std::vector<std::string> names;
  for (const auto& f : files) names.push_back(f.first);
  files.emplace_back("manifest.json", manifest_json(r, names).dump(2) + "\n");

  std::vector<std::filesystem::path> written;
  for (const auto& [name, text] : files) {
    detail::write_file(dir / name, text);
    written.push_back(dir / name);
  }
  return written;
}

/// Reads a (value,prob) CDF file written by emit_results.
inline Cdf read_cdf_csv(const std::filesystem::path& path) {
  std::istringstream in(detail::read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "value,prob")
    throw IoError("'" + path.string() + "': missing value,prob header");
  Cdf out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw IoError("'" + path.string() + "': malformed row");
    out.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  return out;
}

/// Reads one named CDF ("sinr_db", "sum_throughput_bps", "access_rate_ap<i>")
/// from a results.json written by emit_results.
inline Cdf read_cdf_json(const std::filesystem::path& path, const std::string& metric) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
  if (doc.value("schema_version", 0) != kSchemaVersion)
    throw IoError("'" + path.string() + "': unsupported schema_version");
  return detail::cdf_from_json(doc.at("cdfs").at(metric));
}

}  // namespace mmimou
