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

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmimou/mmimou.hpp"

using namespace mmimou;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<double> ptr;
  std::optional<int> drops;
  std::optional<int> rounds;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::vector<std::string> overrides;  // key=value
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "Configuration file (key = value)");
  cmd->add_option("--drops", o.drops, "Number of drops");
  cmd->add_option("--rounds", o.rounds, "Rounds per drop");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--threads", o.threads, "Worker threads (0: all cores)");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--set", o.overrides, "Override a configuration key, key=value");
}

ScenarioConfig build_config(const CommonOptions& o) {
  ScenarioConfig c = o.config_path.empty() ? ScenarioConfig{} : load_config(o.config_path);
  if (o.ptr) c.p_tr = *o.ptr;
  if (o.drops) c.n_drops = *o.drops;
  if (o.rounds) c.n_rounds = *o.rounds;
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.out) c.out_dir = *o.out;
  if (o.format) c.format = parse_format(*o.format);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set: expected key=value, got '" + kv + "'");
    set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return c;
}

double median_or_nan(const std::vector<double>& v) {
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : empirical_quantile(v, 0.5);
}

void print_summary(const ResultSet& r) {
  std::printf("scenario %s  p_tr %g  drops %zu  rounds %d\n", to_string(r.config.scenario).c_str(),
              r.config.p_tr, r.drops.size(), r.config.n_rounds);
  for (int ap = 0; ap < kNumAps; ++ap)
    std::printf("  AP%d access rate %.4f (%ld/%ld)\n", ap, r.access_rate(ap), r.grants(ap),
                r.attempts(ap));
  const auto sinr = r.sinr_samples();
  std::printf("  median DL sum throughput %.3f Mb/s\n",
              median_or_nan(r.sum_throughput_samples()) / 1e6);
  if (!sinr.empty())
    std::printf("  DL SINR p5 %.2f dB  p50 %.2f dB\n", empirical_quantile(sinr, 0.05),
                empirical_quantile(sinr, 0.5));
}

std::string ptr_tag(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", p);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmimou system-level simulator"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::optional<std::string> run_scenario;
  auto* run = app.add_subcommand("run", "Run one scenario at one traffic load");
  add_common(run, run_opts);
  run->add_option("--scenario", run_scenario, "Scenario")->check(CLI::IsMember({"A", "B", "C"}));
  run->add_option("--ptr", run_opts.ptr, "Per-STA traffic probability")->check(CLI::Range(0.0, 1.0));

  CommonOptions sweep_opts;
  std::vector<std::string> sweep_scenarios{"A", "B", "C"};
  std::vector<double> sweep_ptrs{0.1, 0.2, 0.5, 1.0};
  auto* sweep = app.add_subcommand("sweep", "Run every scenario x traffic load combination");
  add_common(sweep, sweep_opts);
  sweep->add_option("--scenarios", sweep_scenarios, "Scenarios")
      ->delimiter(',')
      ->check(CLI::IsMember({"A", "B", "C"}));
  sweep->add_option("--ptrs", sweep_ptrs, "Traffic probabilities")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0));

  std::string check_path;
  std::optional<std::string> check_scenario;
  auto* check = app.add_subcommand("validate-config", "Check a configuration file");
  check->add_option("config", check_path, "Configuration file")->required();
  check->add_option("--scenario", check_scenario, "Validate for this scenario")
      ->check(CLI::IsMember({"A", "B", "C"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ScenarioConfig c = build_config(run_opts);
      if (run_scenario) c.scenario = parse_scenario(*run_scenario);
      validate_or_throw(c);
      const ResultSet r = run_simulation(c);
      emit_results(r, c.out_dir, c.format);
      print_summary(r);
      std::printf("  results written to %s\n", c.out_dir.c_str());
    } else if (*sweep) {
      const ScenarioConfig base = build_config(sweep_opts);
      std::string summary = "scenario,p_tr,metric,value\n";
      for (const auto& s : sweep_scenarios)
        for (double p : sweep_ptrs) {
          ScenarioConfig c = base;
          c.scenario = parse_scenario(s);
          c.p_tr = p;
          validate_or_throw(c);
          const ResultSet r = run_simulation(c);
          emit_results(r, std::filesystem::path(base.out_dir) / (s + "_ptr" + ptr_tag(p)), c.format);
          print_summary(r);
          const std::string row = s + "," + detail::num(p) + ",";
          for (int ap = 0; ap < kNumAps; ++ap)
            summary += row + "access_rate_ap" + std::to_string(ap) + "," +
                       detail::num(r.access_rate(ap)) + "\n";
          summary += row + "median_sum_throughput_bps," +
                     detail::num(median_or_nan(r.sum_throughput_samples())) + "\n";
        }
      detail::write_file(std::filesystem::path(base.out_dir) / "sweep_summary.csv", summary);
      std::printf("sweep written to %s\n", base.out_dir.c_str());
    } else if (*check) {
      ScenarioConfig c = load_config(check_path);
      if (check_scenario) c.scenario = parse_scenario(*check_scenario);
      const auto errors = validate(c);
      if (!errors.empty()) {
        std::cerr << check_path << ": invalid configuration\n";
        for (const auto& e : errors) std::cerr << "  " << e << "\n";
        return 1;
      }
      std::printf("%s: ok\n", check_path.c_str());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
