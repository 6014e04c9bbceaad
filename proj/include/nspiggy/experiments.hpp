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

#ifndef NSPIGGY_EXPERIMENTS_HPP
#define NSPIGGY_EXPERIMENTS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nspiggy {

enum class Scenario { Ridge, Lasso, Sics, Trend, HeavyBall, PacketDemo };
enum class Mode { Jvp, Vjp, Full, Packet };
enum class Metric { IterateDist, JacobianDist, TangentNorm, SetGap };

std::string to_string(Scenario s);
std::string to_string(Mode m);
std::string to_string(Metric m);
/// Parsers throw Error(InvalidArgument) on unknown names.
Scenario parse_scenario(const std::string& name);
Mode parse_mode(const std::string& name);
Metric parse_metric(const std::string& name);

struct ExperimentConfig {
  Scenario scenario = Scenario::Ridge;
  int reps = 1;
  int iters = 1000;
  /// Scenario dimensions: ridge/lasso (n, p), sics (n), trend (p).
  std::vector<int> dims;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  bool emit_csv = true;
  bool emit_svg = true;
  Mode mode = Mode::Full;
  /// Ridge/sics θ, lasso ratio, trend λ; scenario default when unset.
  std::optional<double> weight;
  /// Cap on the total number of solver steps.
  double budget = 1e7;
  int threads = 1;
};

/// Throws Error(InvalidArgument) for invalid values and for configurations
/// whose estimated solver steps exceed the budget.
void validate(const ExperimentConfig& cfg);
/// Solver steps the configuration will take (reference runs included).
double estimated_steps(const ExperimentConfig& cfg);

struct ExperimentRecord {
  std::string scenario;
  int rep = 0;
  int iter = 0;
  Metric metric = Metric::IterateDist;
  /// +inf after a Heavy-Ball tangent blow-up or an aborted repetition.
  double value = 0.0;
};

struct ExperimentResult {
  std::vector<ExperimentRecord> records;
  /// One line per aborted repetition.
  std::vector<std::string> diagnostics;
};

/// Runs all repetitions; records are sorted by (scenario, rep, iter,
/// metric name). Identical configurations give identical records for any
/// thread count.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct SummaryRow {
  std::string scenario;
  int iter = 0;
  Metric metric = Metric::IterateDist;
  double median = 0.0;
  double p10 = 0.0;
  double p90 = 0.0;
};

/// Per (scenario, metric, iter): linearly interpolated order statistics
/// at ranks 0.1(R−1), 0.5(R−1), 0.9(R−1), infinities sorted last. Sorted
/// by (scenario, iter, metric name).
std::vector<SummaryRow> aggregate(const std::vector<ExperimentRecord>& records);

/// Interpolated order statistic of `values` at rank q (R − 1).
double quantile(std::vector<double> values, double q);

/// Shortest round-trip decimal ("inf" / "-inf" for infinities).
std::string format_double(double v);
double parse_double(const std::string& text);

void write_records_csv(const std::vector<ExperimentRecord>& records, const std::string& path);
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path);
std::vector<ExperimentRecord> read_records_csv(const std::string& path);
std::vector<SummaryRow> read_summary_csv(const std::string& path);

/// One chart per (scenario, metric) named <scenario>_<metric>.svg in
/// out_dir; returns the written paths. Throws on an empty summary.
std::vector<std::string> write_svg(const std::vector<SummaryRow>& rows, const std::string& out_dir);

/// The SVG document of one (scenario, metric) series.
std::string render_svg(const std::vector<SummaryRow>& series, const std::string& title);

}  // namespace nspiggy

#endif  // NSPIGGY_EXPERIMENTS_HPP
