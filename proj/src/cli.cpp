// Copyright 2026 The nspiggy Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nspiggy/cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nspiggy/error.hpp"
#include "nspiggy/experiments.hpp"

namespace nspiggy {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_dims(const std::string& text) {
  std::vector<int> dims;
  for (const auto& item : split_list(text)) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw Error(ErrorKind::InvalidArgument, "malformed dimension '" + item + "'");
    }
    dims.push_back(v);
  }
  return dims;
}

// Keys accepted in a config file, all mirroring long options of `run`.
const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{"scenario", "reps",  "iters",  "seed",
                                             "dims",     "mode",  "out",    "emit",
                                             "weight",   "budget", "threads"};
  return keys;
}

struct RunArgs {
  std::string scenario;
  int reps = 1;
  int iters = 1000;
  std::uint64_t seed = 0;
  std::string dims;
  std::string mode = "full";
  std::string out = ".";
  std::string emit = "csv,svg";
  double weight = -1.0;
  double budget = 1e7;
  int threads = 1;
  std::string config;
};

ExperimentConfig to_config(const RunArgs& a) {
  ExperimentConfig cfg;
  cfg.scenario = parse_scenario(a.scenario);
  cfg.reps = a.reps;
  cfg.iters = a.iters;
  cfg.seed = a.seed;
  cfg.dims = parse_dims(a.dims);
  cfg.mode = parse_mode(a.mode);
  cfg.out_dir = a.out;
  cfg.emit_csv = false;
  cfg.emit_svg = false;
  for (const auto& item : split_list(a.emit)) {
    if (item == "csv") {
      cfg.emit_csv = true;
    } else if (item == "svg") {
      cfg.emit_svg = true;
    } else {
      throw Error(ErrorKind::InvalidArgument, "unknown emit target '" + item + "'");
    }
  }
  if (a.weight >= 0.0) cfg.weight = a.weight;
  cfg.budget = a.budget;
  cfg.threads = a.threads;
  return cfg;
}

int do_run(const RunArgs& args) {
  const ExperimentConfig cfg = to_config(args);
  validate(cfg);
  const ExperimentResult result = run_experiment(cfg);
  for (const auto& d : result.diagnostics) std::cerr << "diagnostic: " << d << "\n";
  std::filesystem::create_directories(cfg.out_dir);
  const auto summary = aggregate(result.records);
  const std::filesystem::path out(cfg.out_dir);
  if (cfg.emit_csv) {
    write_records_csv(result.records, (out / "raw.csv").string());
    write_summary_csv(summary, (out / "summary.csv").string());
  }
  if (cfg.emit_svg && !summary.empty()) write_svg(summary, cfg.out_dir);
  std::cout << to_string(cfg.scenario) << ": " << result.records.size() << " records, "
            << cfg.reps << " rep(s)\n";
  return result.diagnostics.empty() ? kExitOk : kExitNumerical;
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read config file: " + path);
  std::map<std::string, std::string> values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      std::ostringstream os;
      os << path << ":" << lineno << ": expected 'key = value'";
      throw Error(ErrorKind::InvalidArgument, os.str());
    }
    const std::string key = trim(line.substr(0, eq));
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      std::ostringstream os;
      os << path << ":" << lineno << ": unknown key '" << key << "'";
      throw Error(ErrorKind::InvalidArgument, os.str());
    }
    values[key] = trim(line.substr(eq + 1));
  }
  return values;
}

int run_cli(const std::vector<std::string>& input) {
  CLI::App app{"Piggyback differentiation of fixed-point solvers: experiment runner"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run a scenario and write CSV/SVG artifacts");
  run->add_option("scenario", run_args.scenario,
                  "ridge | lasso | sics | trend | heavy_ball | packet_demo");
  run->add_option("--reps", run_args.reps, "Repetitions");
  run->add_option("--iters", run_args.iters, "Iterations per repetition");
  run->add_option("--seed", run_args.seed, "Base seed");
  run->add_option("--dims", run_args.dims, "Comma-separated dimensions");
  run->add_option("--mode", run_args.mode, "jvp | vjp | full | packet");
  run->add_option("--out", run_args.out, "Output directory");
  run->add_option("--emit", run_args.emit, "Subset of csv,svg");
  run->add_option("--weight", run_args.weight,
                  "Ridge/sics theta, lasso ratio or trend lambda");
  run->add_option("--budget", run_args.budget, "Cap on total solver steps");
  run->add_option("--threads", run_args.threads, "Worker threads");
  run->add_option("--config", run_args.config, "File of 'key = value' lines");
  for (auto* opt : run->get_options()) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::string raw_path;
  std::string summary_out;
  auto* agg = app.add_subcommand("aggregate", "Summarize a raw CSV into median/deciles");
  agg->add_option("raw", raw_path, "Raw CSV")->required();
  agg->add_option("--out", summary_out, "Summary CSV")->required();

  std::string summary_path;
  std::string plot_dir;
  auto* plot = app.add_subcommand("plot", "Render SVG charts from a summary CSV");
  plot->add_option("summary", summary_path, "Summary CSV")->required();
  plot->add_option("--out", plot_dir, "Output directory")->required();

  try {
    // Config values are spliced in front of the command-line flags so the
    // latter win under the take-last policy.
    std::vector<std::string> args = input;
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] == "--config" || args[i].rfind("--config=", 0) == 0) {
        const std::string path =
            args[i] == "--config" ? args[i + 1] : args[i].substr(std::string("--config=").size());
        const auto file = read_config_file(path);
        std::vector<std::string> injected;
        for (const auto& [key, value] : file) {
          if (key == "scenario") continue;
          injected.push_back("--" + key);
          injected.push_back(value);
        }
        const auto cmd = std::find(args.begin(), args.end(), "run");
        if (cmd != args.end()) args.insert(cmd + 1, injected.begin(), injected.end());
        if (auto it = file.find("scenario"); it != file.end()) run_args.scenario = it->second;
        break;
      }
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (run->parsed()) {
      if (run_args.scenario.empty()) throw Error(ErrorKind::InvalidArgument, "missing scenario");
      return do_run(run_args);
    }
    if (agg->parsed()) {
      write_summary_csv(aggregate(read_records_csv(raw_path)), summary_out);
      return kExitOk;
    }
    if (plot->parsed()) {
      const auto rows = read_summary_csv(summary_path);
      if (rows.empty()) throw Error(ErrorKind::InvalidArgument, "summary has no rows");
      write_svg(rows, plot_dir);
      return kExitOk;
    }
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::InvalidArgument:
      case ErrorKind::Io:
      case ErrorKind::DimensionMismatch:
        return kExitConfig;
      default:
        return kExitNumerical;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace nspiggy
