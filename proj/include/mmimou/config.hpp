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

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mmimou/channel.hpp"
#include "mmimou/geometry.hpp"
#include "mmimou/phy.hpp"

namespace mmimou {

enum class Scenario { A_single_antenna, B_mmimo, C_mmimo_u };
enum class AccessPattern { alternating, elbt_only };
enum class OutputFormat { csv, json };

inline std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::A_single_antenna: return "A";
    case Scenario::B_mmimo: return "B";
    case Scenario::C_mmimo_u: return "C";
  }
  return "?";
}

inline Scenario parse_scenario(const std::string& s) {
  if (s == "A" || s == "a" || s == "A_single_antenna") return Scenario::A_single_antenna;
  if (s == "B" || s == "b" || s == "B_mmimo") return Scenario::B_mmimo;
  if (s == "C" || s == "c" || s == "C_mmimo_u") return Scenario::C_mmimo_u;
  throw ConfigError("scenario: expected A, B or C, got '" + s + "'");
}

inline std::string to_string(AccessPattern p) {
  return p == AccessPattern::alternating ? "alternating" : "elbt_only";
}

inline std::string to_string(OutputFormat f) { return f == OutputFormat::csv ? "csv" : "json"; }

inline OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw ConfigError("format: expected csv or json, got '" + s + "'");
}

/// Everything a run needs. Defaults reproduce the reference indoor setup.
struct ScenarioConfig {
  Scenario scenario = Scenario::C_mmimo_u;
  double p_tr = 1.0;
  int n_drops = 500;
  int n_rounds = 50;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware concurrency

  // deployment
  FloorPlan floor;
  int num_stas = 30;
  double ap_max_power_dbm = 24.0;
  double sta_max_power_dbm = 18.0;
  int central_array_rows = 6;  // scenarios B and C
  int central_array_cols = 6;
  double min_coverage_rss_dbm = -82.0;
  bool redraw_uncovered = false;
  int max_redraws = 100;

  // channel
  ChannelParams channel;
  double bandwidth_hz = 20e6;
  double noise_psd_dbm_hz = -174.0;
  double noise_figure_db = 9.0;

  // access
  double gamma_lbt_dbm = -62.0;
  double gamma_preamble_dbm = -82.0;
  double preamble_min_sinr_db = -0.8;
  int contention_window = 16;
  double dl_fraction = 0.8;

  // multi-antenna AP
  int max_streams = 4;
  int num_nulls = 24;
  bool cap_nulls_by_noise = false;
  int pattern_period = 5;
  int pattern_elbt_rounds = 2;
  double elbt_user_fraction = 0.4;
  AccessPattern access_pattern = AccessPattern::alternating;

  RateTable rate_table;

  // output
  std::string out_dir = "out";
  OutputFormat format = OutputFormat::csv;

  int central_antennas() const {
    return scenario == Scenario::A_single_antenna ? 1 : central_array_rows * central_array_cols;
  }
  double noise_mw() const { return noise_power_mw(bandwidth_hz, noise_figure_db, noise_psd_dbm_hz); }

  DeploymentParams deployment() const {
    DeploymentParams d;
    d.floor = floor;
    d.num_stas = num_stas;
    d.ap_power_dbm = ap_max_power_dbm;
    d.sta_power_dbm = sta_max_power_dbm;
    d.ap_arrays = {{1, 1}, {1, 1}, {1, 1}};
    if (scenario != Scenario::A_single_antenna) d.ap_arrays[1] = {central_array_rows, central_array_cols};
    return d;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Shortest of %.15g..%.17g that reads back to the same double.
inline std::string fmt_double(double v) {
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

/// "2:6.5e6, 5:13e6" -> rows (SINR dB : rate b/s)
inline RateTable parse_rate_table(const std::string& v) {
  std::vector<RateRow> rows;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError("rate_table: expected 'sinr_db:rate_bps', got '" + item + "'");
    rows.push_back({parse_double("rate_table", trim(item.substr(0, colon))),
                    parse_double("rate_table", trim(item.substr(colon + 1)))});
  }
  return RateTable(std::move(rows));
}

inline std::string format_rate_table(const RateTable& t) {
  std::string out;
  for (const auto& r : t.rows()) {
    if (!out.empty()) out += ", ";
    out += fmt_double(r.min_sinr_db) + ":" + fmt_double(r.rate_bps);
  }
  return out;
}

/// One accessor pair per config key.
struct Field {
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

template <class T>
Field num_field(T ScenarioConfig::*m) {
  return {[m](ScenarioConfig& c, const std::string& v) {
            if constexpr (std::is_same_v<T, double>)
              c.*m = parse_double("", v);
            else
              c.*m = static_cast<T>(parse_int("", v));
          },
          [m](const ScenarioConfig& c) {
            if constexpr (std::is_same_v<T, double>)
              return fmt_double(c.*m);
            else
              return std::to_string(c.*m);
          }};
}

template <class Get>
Field dbl(Get get) {
  return {[get](ScenarioConfig& c, const std::string& v) { get(c) = parse_double("", v); },
          [get](const ScenarioConfig& c) {
            return fmt_double(get(const_cast<ScenarioConfig&>(c)));
          }};
}

inline const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> f = [] {
    std::map<std::string, Field> m;
    m["scenario"] = {[](ScenarioConfig& c, const std::string& v) { c.scenario = parse_scenario(v); },
                     [](const ScenarioConfig& c) { return to_string(c.scenario); }};
    m["p_tr"] = num_field(&ScenarioConfig::p_tr);
    m["n_drops"] = num_field(&ScenarioConfig::n_drops);
    m["n_rounds"] = num_field(&ScenarioConfig::n_rounds);
    m["seed"] = num_field(&ScenarioConfig::seed);
    m["threads"] = num_field(&ScenarioConfig::threads);

    m["floor_width_m"] = dbl([](ScenarioConfig& c) -> double& { return c.floor.width_m; });
    m["floor_depth_m"] = dbl([](ScenarioConfig& c) -> double& { return c.floor.depth_m; });
    m["ap_height_m"] = dbl([](ScenarioConfig& c) -> double& { return c.floor.ap_height_m; });
    m["sta_height_m"] = dbl([](ScenarioConfig& c) -> double& { return c.floor.sta_height_m; });
    m["num_stas"] = num_field(&ScenarioConfig::num_stas);
    m["ap_max_power_dbm"] = num_field(&ScenarioConfig::ap_max_power_dbm);
    m["sta_max_power_dbm"] = num_field(&ScenarioConfig::sta_max_power_dbm);
    m["central_array_rows"] = num_field(&ScenarioConfig::central_array_rows);
    m["central_array_cols"] = num_field(&ScenarioConfig::central_array_cols);
    m["min_coverage_rss_dbm"] = num_field(&ScenarioConfig::min_coverage_rss_dbm);
    m["redraw_uncovered"] = {
        [](ScenarioConfig& c, const std::string& v) { c.redraw_uncovered = parse_bool("redraw_uncovered", v); },
        [](const ScenarioConfig& c) { return std::string(c.redraw_uncovered ? "true" : "false"); }};
    m["max_redraws"] = num_field(&ScenarioConfig::max_redraws);

    m["carrier_ghz"] = dbl([](ScenarioConfig& c) -> double& { return c.channel.fading.carrier_ghz; });
    m["k_factor_mean_db"] = dbl([](ScenarioConfig& c) -> double& { return c.channel.fading.k_factor_mean_db; });
    m["k_factor_std_db"] = dbl([](ScenarioConfig& c) -> double& { return c.channel.fading.k_factor_std_db; });
    m["shadowing_los_std_db"] = dbl([](ScenarioConfig& c) -> double& { return c.channel.shadowing_los_std_db; });
    m["shadowing_nlos_std_db"] = dbl([](ScenarioConfig& c) -> double& { return c.channel.shadowing_nlos_std_db; });
    m["pl_los_intercept_db"] = dbl([](ScenarioConfig& c) -> double& { return c.channel.path_loss.los_intercept_db; });
    m["pl_los_slope_db"] = dbl([](ScenarioConfig& c) -> double& { return c.channel.path_loss.los_slope_db; });
    m["pl_nlos_intercept_db"] = dbl([](ScenarioConfig& c) -> double& { return c.channel.path_loss.nlos_intercept_db; });
    m["pl_nlos_slope_db"] = dbl([](ScenarioConfig& c) -> double& { return c.channel.path_loss.nlos_slope_db; });
    m["pl_freq_coeff_db"] = dbl([](ScenarioConfig& c) -> double& { return c.channel.path_loss.freq_coeff_db; });
    m["bandwidth_hz"] = num_field(&ScenarioConfig::bandwidth_hz);
    m["noise_psd_dbm_hz"] = num_field(&ScenarioConfig::noise_psd_dbm_hz);
    m["noise_figure_db"] = num_field(&ScenarioConfig::noise_figure_db);

    m["gamma_lbt_dbm"] = num_field(&ScenarioConfig::gamma_lbt_dbm);
    m["gamma_preamble_dbm"] = num_field(&ScenarioConfig::gamma_preamble_dbm);
    m["preamble_min_sinr_db"] = num_field(&ScenarioConfig::preamble_min_sinr_db);
    m["contention_window"] = num_field(&ScenarioConfig::contention_window);
    m["dl_fraction"] = num_field(&ScenarioConfig::dl_fraction);

    m["max_streams"] = num_field(&ScenarioConfig::max_streams);
    m["num_nulls"] = num_field(&ScenarioConfig::num_nulls);
    m["cap_nulls_by_noise"] = {
        [](ScenarioConfig& c, const std::string& v) { c.cap_nulls_by_noise = parse_bool("cap_nulls_by_noise", v); },
        [](const ScenarioConfig& c) { return std::string(c.cap_nulls_by_noise ? "true" : "false"); }};
    m["pattern_period"] = num_field(&ScenarioConfig::pattern_period);
    m["pattern_elbt_rounds"] = num_field(&ScenarioConfig::pattern_elbt_rounds);
    m["elbt_user_fraction"] = num_field(&ScenarioConfig::elbt_user_fraction);
    m["access_pattern"] = {
        [](ScenarioConfig& c, const std::string& v) {
          if (v == "alternating")
            c.access_pattern = AccessPattern::alternating;
          else if (v == "elbt_only")
            c.access_pattern = AccessPattern::elbt_only;
          else
            throw ConfigError("access_pattern: expected alternating or elbt_only, got '" + v + "'");
        },
        [](const ScenarioConfig& c) { return to_string(c.access_pattern); }};
    m["rate_table"] = {[](ScenarioConfig& c, const std::string& v) { c.rate_table = parse_rate_table(v); },
                       [](const ScenarioConfig& c) { return format_rate_table(c.rate_table); }};

    m["out_dir"] = {[](ScenarioConfig& c, const std::string& v) { c.out_dir = v; },
                    [](const ScenarioConfig& c) { return c.out_dir; }};
    m["format"] = {[](ScenarioConfig& c, const std::string& v) { c.format = parse_format(v); },
                   [](const ScenarioConfig& c) { return to_string(c.format); }};
    return m;
  }();
  return f;
}

}  // namespace detail

/// Sets one key. Unknown keys and malformed values throw ConfigError naming
/// the key.
inline void set_config_value(ScenarioConfig& c, const std::string& key, const std::string& value) {
  const auto& f = detail::fields();
  auto it = f.find(key);
  if (it == f.end()) throw ConfigError("unknown config key '" + key + "'");
  try {
    it->second.set(c, value);
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    // number parsers do not know the key they are parsing
    if (msg.rfind(": ", 0) == 0) throw ConfigError(key + msg);
    throw;
  }
}

/// Flat "key = value" document. '#' starts a comment; blank lines ignored.
inline ScenarioConfig parse_config(const std::string& text, ScenarioConfig base = {}) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  std::map<std::string, int> seen;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (seen.count(key))
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    seen[key] = lineno;
    set_config_value(base, key, value);
  }
  return base;
}

inline ScenarioConfig load_config(const std::string& path, ScenarioConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

/// All keys with their current values, sorted by key.
inline std::map<std::string, std::string> config_entries(const ScenarioConfig& c) {
  std::map<std::string, std::string> out;
  for (const auto& [k, f] : detail::fields()) out[k] = f.get(c);
  return out;
}

inline std::string format_config(const ScenarioConfig& c) {
  std::string out;
  for (const auto& [k, v] : config_entries(c)) out += k + " = " + v + "\n";
  return out;
}

/// Returns one message per violated constraint, each starting with the field.
inline std::vector<std::string> validate(const ScenarioConfig& c) {
  std::vector<std::string> e;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) e.push_back(msg);
  };
  need(c.p_tr >= 0.0 && c.p_tr <= 1.0, "p_tr: must lie in [0, 1]");
  need(c.n_drops >= 1, "n_drops: must be >= 1");
  need(c.n_rounds >= 0, "n_rounds: must be >= 0");
  need(c.threads >= 0, "threads: must be >= 0");
  need(c.floor.width_m > 0, "floor_width_m: must be > 0");
  need(c.floor.depth_m > 0, "floor_depth_m: must be > 0");
  need(c.floor.ap_height_m > 0, "ap_height_m: must be > 0");
  need(c.floor.sta_height_m > 0, "sta_height_m: must be > 0");
  need(c.num_stas >= 1, "num_stas: must be >= 1");
  need(c.central_array_rows >= 1, "central_array_rows: must be >= 1");
  need(c.central_array_cols >= 1, "central_array_cols: must be >= 1");
  need(c.max_redraws >= 0, "max_redraws: must be >= 0");
  need(c.channel.fading.carrier_ghz > 0, "carrier_ghz: must be > 0");
  need(c.channel.fading.k_factor_std_db >= 0, "k_factor_std_db: must be >= 0");
  need(c.channel.shadowing_los_std_db >= 0, "shadowing_los_std_db: must be >= 0");
  need(c.channel.shadowing_nlos_std_db >= 0, "shadowing_nlos_std_db: must be >= 0");
  need(c.bandwidth_hz > 0, "bandwidth_hz: must be > 0");
  need(c.contention_window >= 1, "contention_window: must be >= 1");
  need(c.dl_fraction >= 0.0 && c.dl_fraction <= 1.0, "dl_fraction: must lie in [0, 1]");
  need(c.max_streams >= 1, "max_streams: must be >= 1");
  need(c.num_nulls >= 0, "num_nulls: must be >= 0");
  need(c.pattern_period >= 1, "pattern_period: must be >= 1");
  need(c.pattern_elbt_rounds >= 0 && c.pattern_elbt_rounds <= c.pattern_period,
       "pattern_elbt_rounds: must lie in [0, pattern_period]");
  need(c.elbt_user_fraction >= 0.0 && c.elbt_user_fraction <= 1.0,
       "elbt_user_fraction: must lie in [0, 1]");
  if (c.scenario != Scenario::A_single_antenna)
    need(c.max_streams <= c.central_antennas(), "max_streams: exceeds central AP antenna count");
  if (c.scenario == Scenario::C_mmimo_u)
    need(c.num_nulls + c.max_streams <= c.central_antennas(),
         "num_nulls: num_nulls + max_streams exceeds central AP antenna count");
  return e;
}

inline void validate_or_throw(const ScenarioConfig& c) {
  const auto errors = validate(c);
  if (errors.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& m : errors) msg += "\n  " + m;
  throw ConfigError(msg);
}

}  // namespace mmimou
