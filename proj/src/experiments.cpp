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

#include "nspiggy/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "fixed_set_oracle.hpp"
#include "nspiggy/error.hpp"
#include "nspiggy/piggyback.hpp"
#include "nspiggy/problems.hpp"
#include "nspiggy/rng.hpp"

namespace nspiggy {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kReferenceFactor = 3;

struct NamedScenario {
  Scenario value;
  const char* name;
};
constexpr NamedScenario kScenarios[] = {
    {Scenario::Ridge, "ridge"}, {Scenario::Lasso, "lasso"},
    {Scenario::Sics, "sics"},   {Scenario::Trend, "trend"},
    {Scenario::HeavyBall, "heavy_ball"}, {Scenario::PacketDemo, "packet_demo"}};

struct NamedMode {
  Mode value;
  const char* name;
};
constexpr NamedMode kModes[] = {
    {Mode::Jvp, "jvp"}, {Mode::Vjp, "vjp"}, {Mode::Full, "full"}, {Mode::Packet, "packet"}};

struct NamedMetric {
  Metric value;
  const char* name;
};
constexpr NamedMetric kMetrics[] = {{Metric::IterateDist, "iterate_dist"},
                                    {Metric::JacobianDist, "jacobian_dist"},
                                    {Metric::TangentNorm, "tangent_norm"},
                                    {Metric::SetGap, "set_gap"}};

[[noreturn]] void bad_config(const std::string& what) {
  throw Error(ErrorKind::InvalidArgument, what);
}

bool needs_reference_run(Scenario s) { return s == Scenario::Sics || s == Scenario::Trend; }

}  // namespace

std::string to_string(Scenario s) {
  for (const auto& e : kScenarios) {
    if (e.value == s) return e.name;
  }
  return "unknown";
}

std::string to_string(Mode m) {
  for (const auto& e : kModes) {
    if (e.value == m) return e.name;
  }
  return "unknown";
}

std::string to_string(Metric m) {
  for (const auto& e : kMetrics) {
    if (e.value == m) return e.name;
  }
  return "unknown";
}

Scenario parse_scenario(const std::string& name) {
  for (const auto& e : kScenarios) {
    if (name == e.name) return e.value;
  }
  bad_config("unknown scenario '" + name + "'");
}

Mode parse_mode(const std::string& name) {
  for (const auto& e : kModes) {
    if (name == e.name) return e.value;
  }
  bad_config("unknown mode '" + name + "'");
}

Metric parse_metric(const std::string& name) {
  for (const auto& e : kMetrics) {
    if (name == e.name) return e.value;
  }
  bad_config("unknown metric '" + name + "'");
}

double estimated_steps(const ExperimentConfig& cfg) {
  double per_rep = cfg.iters;
  if (needs_reference_run(cfg.scenario)) per_rep += kReferenceFactor * static_cast<double>(cfg.iters);
  if (cfg.scenario == Scenario::HeavyBall) per_rep *= 2.0;
  return per_rep * cfg.reps;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.reps < 1) bad_config("reps must be >= 1");
  if (cfg.iters < 1) bad_config("iters must be >= 1");
  if (cfg.threads < 1) bad_config("threads must be >= 1");
  if (!(cfg.budget > 0.0)) bad_config("budget must be positive");
  for (int d : cfg.dims) {
    if (d < 1) bad_config("dimensions must be >= 1");
  }
  const std::size_t expected_dims = [&]() -> std::size_t {
    switch (cfg.scenario) {
      case Scenario::Ridge:
      case Scenario::Lasso:
        return 2;
      case Scenario::Sics:
      case Scenario::Trend:
        return 1;
      default:
        return 0;
    }
  }();
  if (!cfg.dims.empty() && cfg.dims.size() != expected_dims) {
    std::ostringstream os;
    os << "scenario " << to_string(cfg.scenario) << " takes " << expected_dims << " dimension(s)";
    bad_config(os.str());
  }
  if (cfg.scenario == Scenario::Trend && !cfg.dims.empty() && cfg.dims[0] < 4) {
    bad_config("trend filtering needs p >= 4");
  }
  if (cfg.weight && !(*cfg.weight >= 0.0)) bad_config("weight must be nonnegative");
  const double steps = estimated_steps(cfg);
  if (steps > cfg.budget) {
    std::ostringstream os;
    os << "budget guard: " << steps << " solver steps requested, budget is " << cfg.budget;
    bad_config(os.str());
  }
}

namespace {

int dim(const ExperimentConfig& cfg, std::size_t i, int fallback) {
  return cfg.dims.size() > i ? cfg.dims[i] : fallback;
}

ScenarioInstance build_instance(const ExperimentConfig& cfg, std::uint64_t seed) {
  switch (cfg.scenario) {
    case Scenario::Ridge:
      return make_ridge(dim(cfg, 0, 50), dim(cfg, 1, 30), cfg.weight.value_or(0.05), seed);
    case Scenario::Lasso:
      return make_lasso(dim(cfg, 0, 20), dim(cfg, 1, 50), cfg.weight.value_or(0.2), seed);
    case Scenario::Sics:
      return make_sics(dim(cfg, 0, 10), cfg.weight.value_or(0.1), seed);
    case Scenario::Trend:
      return make_trend_filter(dim(cfg, 0, 40), cfg.weight.value_or(3.0), seed);
    default:
      throw Error(ErrorKind::InvalidArgument, "scenario has no instance");
  }
}

class RecordSink {
 public:
  RecordSink(std::string scenario, int rep) : scenario_(std::move(scenario)), rep_(rep) {}
  void add(int iter, Metric m, double v) { records.push_back({scenario_, rep_, iter, m, v}); }
  std::vector<ExperimentRecord> records;

 private:
  std::string scenario_;
  int rep_;
};

// Records for the optimization scenarios.
void run_propagation(const ExperimentConfig& cfg, const ScenarioInstance& inst, RecordSink& sink) {
  const FixedPointProblem& prob = inst.problem;
  const Vector& theta = inst.theta;
  const auto p = prob.state_dim;
  const auto m = prob.param_dim;

  Matrix reference = inst.solution_jacobian;
  if (reference.size() == 0) {
    reference = full_jacobian_sequence(prob, theta, kReferenceFactor * cfg.iters).back();
  }
  const Vector theta_dot = Vector::Ones(m) / std::sqrt(static_cast<double>(m));
  const Vector wbar = Vector::Ones(p) / std::sqrt(static_cast<double>(p));
  const Vector reference_tangent = reference * theta_dot;
  const Vector reference_cotangent = reference.transpose() * wbar;
  const int stride = std::max(1, cfg.iters / 50);

  PropagationMode pm = PropagationMode::FullJacobian;
  if (cfg.mode == Mode::Jvp) pm = PropagationMode::Jvp;
  if (cfg.mode == Mode::Vjp) pm = PropagationMode::Vjp;
  if (cfg.mode == Mode::Packet) pm = PropagationMode::Packet;
  PropagationState s = start_propagation(prob, theta, pm, theta_dot, 1e-12);
  const MatrixSet reference_set = MatrixSet::singleton(reference);

  for (int k = 0; k <= cfg.iters; ++k) {
    sink.add(k, Metric::IterateDist, (s.x - inst.solution).norm());
    switch (cfg.mode) {
      case Mode::Full:
        sink.add(k, Metric::JacobianDist, (s.jacobian - reference).norm());
        break;
      case Mode::Jvp:
        sink.add(k, Metric::JacobianDist, (s.tangent - reference_tangent).norm());
        break;
      case Mode::Vjp:
        if (k % stride == 0 || k == cfg.iters) {
          const Vector theta_bar = reverse_accumulate(s, wbar);
          sink.add(k, Metric::JacobianDist, (theta_bar - reference_cotangent).norm());
        }
        break;
      case Mode::Packet:
        sink.add(k, Metric::SetGap, gap(s.set, reference_set));
        break;
    }
    if (k < cfg.iters) advance(prob, theta, s);
  }
}

// Tangents of Heavy-Ball and gradient descent on the counterexample.
void run_heavy_ball(const ExperimentConfig& cfg, int rep, std::vector<ExperimentRecord>& out) {
  for (const ScenarioInstance& inst : {make_hb_counterexample(), make_gd_counterexample()}) {
    RecordSink sink(inst.name, rep);
    PropagationState s =
        start_propagation(inst.problem, inst.theta, PropagationMode::Jvp, Vector::Ones(1));
    bool blown = false;
    for (int k = 0; k <= cfg.iters; ++k) {
      sink.add(k, Metric::IterateDist, (s.x - inst.solution).norm());
      sink.add(k, Metric::TangentNorm, blown ? kInf : s.tangent.norm());
      if (k == cfg.iters) break;
      if (blown) {
        s.x = inst.problem.step(s.x, inst.theta);
        continue;
      }
      try {
        advance(inst.problem, inst.theta, s);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::TangentBlowUp) throw;
        blown = true;
        s.x = inst.problem.step(s.x, inst.theta);
      }
    }
    out.insert(out.end(), sink.records.begin(), sink.records.end());
  }
}

// Set iteration of the strict-inclusion packet from {0}: one-sided gap to
// its fixed set. Iterates stay inside images of earlier iterates, so
// pruning only removes points and never increases the gap.
void run_packet_demo(const ExperimentConfig& cfg, RecordSink& sink) {
  const MatrixPacket packet = strict_inclusion_packet();
  const detail::FixedSetOracle oracle(packet);
  MatrixSet x = MatrixSet::singleton(Matrix::Zero(2, 1), 1e-2);
  for (int k = 0; k <= cfg.iters; ++k) {
    double lower = 0.0;
    double upper = 0.0;
    for (const auto& point : x.points()) {
      const DistanceBounds d = oracle.point_distance(point, 1e-300, lower, 1e-3);
      lower = std::max(lower, d.lower);
      upper = std::max(upper, d.upper);
    }
    sink.add(k, Metric::SetGap, upper);
    if (k < cfg.iters) x = apply_packet(packet, x);
  }
}

std::vector<ExperimentRecord> run_rep(const ExperimentConfig& cfg, int rep,
                                      std::vector<std::string>& diagnostics) {
  const std::uint64_t seed = stream_seed(cfg.seed, static_cast<std::uint64_t>(rep));
  std::vector<ExperimentRecord> out;
  if (cfg.scenario == Scenario::HeavyBall) {
    run_heavy_ball(cfg, rep, out);
    return out;
  }
  RecordSink sink(to_string(cfg.scenario), rep);
  try {
    if (cfg.scenario == Scenario::PacketDemo) {
      run_packet_demo(cfg, sink);
    } else {
      run_propagation(cfg, build_instance(cfg, seed), sink);
    }
  } catch (const Error& e) {
    std::ostringstream os;
    os << to_string(cfg.scenario) << " rep " << rep << " aborted: " << e.what();
    diagnostics.push_back(os.str());
    const int iter = sink.records.empty() ? 0 : sink.records.back().iter + 1;
    sink.add(iter, Metric::IterateDist, kInf);
  }
  return std::move(sink.records);
}

bool record_less(const ExperimentRecord& a, const ExperimentRecord& b) {
  return std::make_tuple(a.scenario, a.rep, a.iter, to_string(a.metric)) <
         std::make_tuple(b.scenario, b.rep, b.iter, to_string(b.metric));
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  std::vector<std::vector<ExperimentRecord>> per_rep(static_cast<std::size_t>(cfg.reps));
  std::vector<std::vector<std::string>> notes(static_cast<std::size_t>(cfg.reps));
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr failure;
  auto worker = [&]() {
    for (int rep = next++; rep < cfg.reps; rep = next++) {
      try {
        per_rep[rep] = run_rep(cfg, rep, notes[rep]);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads = std::min(cfg.threads, cfg.reps);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult result;
  for (int rep = 0; rep < cfg.reps; ++rep) {
    result.records.insert(result.records.end(), per_rep[rep].begin(), per_rep[rep].end());
    result.diagnostics.insert(result.diagnostics.end(), notes[rep].begin(), notes[rep].end());
  }
  std::stable_sort(result.records.begin(), result.records.end(), record_less);
  return result;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorKind::EmptySet, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || lo == hi) return values[lo];
  if (std::isinf(values[hi]) || std::isinf(values[lo])) return values[hi];
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<SummaryRow> aggregate(const std::vector<ExperimentRecord>& records) {
  std::map<std::tuple<std::string, int, std::string>, std::vector<double>> groups;
  for (const auto& r : records) {
    groups[{r.scenario, r.iter, to_string(r.metric)}].push_back(r.value);
  }
  std::vector<SummaryRow> rows;
  rows.reserve(groups.size());
  for (const auto& [key, values] : groups) {
    SummaryRow row;
    row.scenario = std::get<0>(key);
    row.iter = std::get<1>(key);
    row.metric = parse_metric(std::get<2>(key));
    row.median = quantile(values, 0.5);
    row.p10 = quantile(values, 0.1);
    row.p90 = quantile(values, 0.9);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace nspiggy
