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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <regex>
#include <sstream>

#include "nspiggy/cli.hpp"
#include "nspiggy/error.hpp"
#include "nspiggy/experiments.hpp"
#include "nspiggy/rng.hpp"

using namespace nspiggy;
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nspiggy_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::pair<double, double>> polyline_points(const std::string& svg, const std::string& cls) {
  const std::regex re("<poly(?:line|gon) class=\"" + cls + "\" points=\"([^\"]*)\"");
  std::smatch m;
  std::vector<std::pair<double, double>> pts;
  if (!std::regex_search(svg, m, re)) return pts;
  std::istringstream in(m[1].str());
  std::string pair;
  while (in >> pair) {
    const auto comma = pair.find(',');
    pts.emplace_back(std::stod(pair.substr(0, comma)), std::stod(pair.substr(comma + 1)));
  }
  return pts;
}

std::vector<SummaryRow> series(const std::vector<double>& median, const std::vector<double>& p10,
                               const std::vector<double>& p90) {
  std::vector<SummaryRow> rows;
  for (std::size_t k = 0; k < median.size(); ++k) {
    rows.push_back({"ridge", static_cast<int>(k), Metric::JacobianDist, median[k], p10[k], p90[k]});
  }
  return rows;
}

std::vector<double> metric_values(const std::vector<ExperimentRecord>& recs, Metric metric, int rep = 0) {
  std::vector<double> out;
  for (const auto& r : recs) {
    if (r.metric == metric && r.rep == rep) out.push_back(r.value);
  }
  return out;
}

}  // namespace

TEST_CASE("enum names round-trip") {
  for (auto s : {Scenario::Ridge, Scenario::Lasso, Scenario::Sics, Scenario::Trend,
                 Scenario::HeavyBall, Scenario::PacketDemo}) {
    CHECK(parse_scenario(to_string(s)) == s);
  }
  for (auto m : {Mode::Jvp, Mode::Vjp, Mode::Full, Mode::Packet}) CHECK(parse_mode(to_string(m)) == m);
  for (auto m : {Metric::IterateDist, Metric::JacobianDist, Metric::TangentNorm, Metric::SetGap}) {
    CHECK(parse_metric(to_string(m)) == m);
  }
  CHECK(to_string(Metric::SetGap) == "set_gap");
  CHECK_THROWS_AS(parse_scenario("nope"), Error);
}

TEST_CASE("config validation and budget guard") {
  ExperimentConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.reps = 0;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg.reps = 200;
  cfg.iters = 100000;
  CHECK(estimated_steps(cfg) > cfg.budget);
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg.budget = 1e12;
  CHECK_NOTHROW(validate(cfg));
  cfg.iters = 0;
  CHECK_THROWS_AS(validate(cfg), Error);
}

TEST_CASE("quantiles and aggregation") {
  CHECK(quantile({4.0}, 0.1) == 4.0);
  std::vector<double> eleven;
  for (int i = 1; i <= 11; ++i) eleven.push_back(i);
  CHECK(quantile(eleven, 0.5) == 6.0);
  CHECK(quantile(eleven, 0.1) == 2.0);
  CHECK(quantile(eleven, 0.9) == 10.0);
  CHECK(quantile({1.0, 2.0}, 0.5) == 1.5);
  CHECK(std::isfinite(quantile({1.0, kInf, 2.0, 3.0, kInf}, 0.5)));
  CHECK(quantile({1.0, kInf, 2.0, 3.0, kInf}, 0.9) == kInf);

  std::vector<ExperimentRecord> recs;
  for (int rep = 0; rep < 11; ++rep) recs.push_back({"ridge", rep, 0, Metric::IterateDist, rep + 1.0});
  recs.push_back({"ridge", 0, 1, Metric::IterateDist, 7.0});
  const auto rows = aggregate(recs);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].median == 6.0);
  CHECK(rows[0].p10 == 2.0);
  CHECK(rows[0].p90 == 10.0);
  CHECK(rows[1].median == 7.0);
  CHECK(rows[1].p10 == 7.0);
  CHECK(rows[1].p90 == 7.0);
}

TEST_CASE("csv writing and parsing") {
  const auto dir = scratch_dir("csv");
  write_records_csv({}, (dir / "empty.csv").string());
  CHECK(slurp(dir / "empty.csv") == "scenario,rep,iter,metric,value\n");

  write_records_csv({{"lasso", 2, 7, Metric::SetGap, 0.1}}, (dir / "one.csv").string());
  CHECK(slurp(dir / "one.csv") == "scenario,rep,iter,metric,value\nlasso,2,7,set_gap,0.1\n");

  Rng rng(1);
  std::vector<ExperimentRecord> recs;
  for (int i = 0; i < 300; ++i) {
    const double v = i % 50 == 0 ? kInf : std::exp(40.0 * rng.normal()) * rng.uniform();
    recs.push_back({"sics", i / 30, i % 30, Metric::JacobianDist, v});
  }
  write_records_csv(recs, (dir / "raw.csv").string());
  const auto back = read_records_csv((dir / "raw.csv").string());
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i].value == recs[i].value);
    CHECK(back[i].rep == recs[i].rep);
    CHECK(back[i].iter == recs[i].iter);
  }
  const std::string text = slurp(dir / "raw.csv");
  CHECK(text.find('\r') == std::string::npos);
  CHECK(text.back() == '\n');

  const auto rows = aggregate(recs);
  write_summary_csv(rows, (dir / "summary.csv").string());
  const auto rows_back = read_summary_csv((dir / "summary.csv").string());
  REQUIRE(rows_back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows_back[i].median == rows[i].median);
    CHECK(rows_back[i].p10 == rows[i].p10);
    CHECK(rows_back[i].p90 == rows[i].p90);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(kInf) == "inf");
  CHECK(parse_double("1e-300") == 1e-300);
  CHECK_THROWS_AS(read_records_csv((dir / "missing.csv").string()), Error);
}

TEST_CASE("svg charts") {
  const auto constant = render_svg(series({3, 3, 3, 3}, {3, 3, 3, 3}, {3, 3, 3, 3}), "c");
  CHECK(constant.find("width=\"800\"") != std::string::npos);
  CHECK(constant.find("height=\"500\"") != std::string::npos);
  const auto flat = polyline_points(constant, "median");
  REQUIRE(flat.size() == 4);
  for (const auto& p : flat) CHECK(p.second == flat.front().second);
  // reps = 1: the band collapses onto the median
  const auto band = polyline_points(constant, "band");
  REQUIRE(band.size() == 8);
  for (const auto& p : band) CHECK(p.second == flat.front().second);

  std::vector<double> geo;
  for (int k = 0; k < 30; ++k) geo.push_back(std::pow(2.0, -k));
  const auto svg = render_svg(series(geo, geo, geo), "g");
  const auto line = polyline_points(svg, "median");
  REQUIRE(line.size() == 30);
  const double dy = (line.back().second - line.front().second) / 29.0;
  const double dx = (line.back().first - line.front().first) / 29.0;
  CHECK(dy > 0.0);
  for (std::size_t k = 1; k < line.size(); ++k) {
    CHECK(std::abs(line[k].second - line[k - 1].second - dy) < 0.011);
    CHECK(std::abs(line[k].first - line[k - 1].first - dx) < 0.011);
  }
  CHECK(svg == render_svg(series(geo, geo, geo), "g"));

  const auto infs = render_svg(series({kInf, kInf}, {kInf, kInf}, {kInf, kInf}), "i");
  CHECK(infs.find("class=\"warning\"") != std::string::npos);
  CHECK(polyline_points(infs, "median").empty());

  const auto dir = scratch_dir("svg");
  auto rows = series(geo, geo, geo);
  const auto paths = write_svg(rows, dir.string());
  REQUIRE(paths.size() == 1);
  CHECK(fs::path(paths[0]).filename() == "ridge_jacobian_dist.svg");
  CHECK_THROWS_AS(write_svg({}, dir.string()), Error);
}

TEST_CASE("ridge experiment") {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::Ridge;
  cfg.iters = 200;
  cfg.emit_csv = cfg.emit_svg = false;
  auto res = run_experiment(cfg);
  CHECK(res.diagnostics.empty());
  auto jd = metric_values(res.records, Metric::JacobianDist);
  REQUIRE(jd.size() == 201);
  for (std::size_t k = 21; k < jd.size(); ++k) CHECK(jd[k] < jd[k - 1]);
  // at the default dims the contraction factor is ~0.98, so 1e-6 needs the
  // default 1000 iterations rather than 200
  cfg.iters = 1000;
  res = run_experiment(cfg);
  jd = metric_values(res.records, Metric::JacobianDist);
  CHECK(jd.back() < 1e-6);
  const auto it = metric_values(res.records, Metric::IterateDist);
  CHECK(it.back() < 1e-6);
}

TEST_CASE("heavy-ball experiment") {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::HeavyBall;
  cfg.iters = 500;
  const auto res = run_experiment(cfg);
  int crossed = -1;
  bool gd_bounded = true;
  for (const auto& r : res.records) {
    if (r.metric == Metric::IterateDist) CHECK(r.value == 0.0);
    if (r.metric != Metric::TangentNorm) continue;
    if (r.scenario == "heavy_ball" && r.value > 1e3 && (crossed < 0 || r.iter < crossed)) crossed = r.iter;
    if (r.scenario == "heavy_ball_gd" && !(r.value <= 10.0)) gd_bounded = false;
  }
  CHECK(crossed > 0);
  CHECK(crossed < 500);
  CHECK(gd_bounded);
}

TEST_CASE("packet demo experiment") {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::PacketDemo;
  cfg.iters = 40;
  const auto res = run_experiment(cfg);
  const auto gaps = metric_values(res.records, Metric::SetGap);
  REQUIRE(gaps.size() == 41);
  const double rho = 0.5, d0 = std::sqrt(2.0);
  const int k = static_cast<int>(std::ceil(std::log(1e-8 * (1 - rho) / d0) / std::log(rho)));
  CHECK(gaps[static_cast<std::size_t>(k)] < 1e-8);
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    CHECK(gaps[i] <= std::pow(rho, static_cast<double>(i)) * d0 / (1 - rho) + 1e-2);
  }
}

TEST_CASE("experiments are deterministic across thread counts") {
  for (auto s : {Scenario::Lasso, Scenario::Trend}) {
    ExperimentConfig cfg;
    cfg.scenario = s;
    cfg.reps = 4;
    cfg.iters = 60;
    cfg.mode = Mode::Jvp;
    const auto a = run_experiment(cfg);
    cfg.threads = 3;
    const auto b = run_experiment(cfg);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].value == b.records[i].value);
      CHECK(a.records[i].iter == b.records[i].iter);
    }
  }
}

TEST_CASE("all modes run for every scenario") {
  for (auto s : {Scenario::Ridge, Scenario::Lasso, Scenario::Sics, Scenario::Trend}) {
    for (auto m : {Mode::Jvp, Mode::Vjp, Mode::Full, Mode::Packet}) {
      CAPTURE(to_string(s));
      CAPTURE(to_string(m));
      ExperimentConfig cfg;
      cfg.scenario = s;
      cfg.mode = m;
      cfg.iters = 30;
      cfg.dims = s == Scenario::Sics ? std::vector<int>{3} : s == Scenario::Trend ? std::vector<int>{10} : std::vector<int>{10, 8};
      const auto res = run_experiment(cfg);
      CHECK(res.diagnostics.empty());
      CHECK_FALSE(res.records.empty());
    }
  }
}

TEST_CASE("command line") {
  const auto dir = scratch_dir("cli");
  const std::string out = (dir / "run").string();
  CHECK(run_cli({"run", "ridge", "--iters", "50", "--reps", "2", "--out", out}) == kExitOk);
  CHECK(fs::exists(fs::path(out) / "raw.csv"));
  CHECK(fs::exists(fs::path(out) / "summary.csv"));
  CHECK(fs::exists(fs::path(out) / "ridge_jacobian_dist.svg"));

  // raw → summary consistency
  const std::string re_summary = (dir / "again.csv").string();
  CHECK(run_cli({"aggregate", (fs::path(out) / "raw.csv").string(), "--out", re_summary}) == kExitOk);
  CHECK(slurp(re_summary) == slurp(fs::path(out) / "summary.csv"));
  CHECK(run_cli({"plot", re_summary, "--out", (dir / "plots").string()}) == kExitOk);
  CHECK(slurp(dir / "plots" / "ridge_jacobian_dist.svg") == slurp(fs::path(out) / "ridge_jacobian_dist.svg"));

  CHECK(run_cli({"run", "nope"}) == kExitConfig);
  CHECK(run_cli({"run", "ridge", "--iters", "0"}) == kExitConfig);
  CHECK(run_cli({"run", "ridge", "--reps", "1000", "--iters", "100000"}) == kExitConfig);
  CHECK(run_cli({"frobnicate"}) == kExitConfig);

  // config file, with the command line taking precedence
  {
    std::ofstream cfg(dir / "exp.cfg");
    cfg << "# comment\nscenario = ridge\niters = 20\nreps = 1\nemit = csv\nout = " << (dir / "cfg").string() << "\n";
  }
  CHECK(run_cli({"run", "--config", (dir / "exp.cfg").string(), "--iters", "30"}) == kExitOk);
  const auto recs = read_records_csv((dir / "cfg" / "raw.csv").string());
  int max_iter = 0;
  for (const auto& r : recs) max_iter = std::max(max_iter, r.iter);
  CHECK(max_iter == 30);
  CHECK_FALSE(fs::exists(dir / "cfg" / "ridge_jacobian_dist.svg"));
  {
    std::ofstream bad(dir / "bad.cfg");
    bad << "iters 20\n";
  }
  CHECK(run_cli({"run", "ridge", "--config", (dir / "bad.cfg").string()}) == kExitConfig);
}
