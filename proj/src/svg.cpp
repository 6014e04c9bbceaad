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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <utility>

#include "nspiggy/error.hpp"
#include "nspiggy/experiments.hpp"

namespace nspiggy {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

bool plottable(double v) { return std::isfinite(v) && v > 0.0; }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

std::string render_svg(const std::vector<SummaryRow>& series, const std::string& title) {
  if (series.empty()) throw Error(ErrorKind::EmptySet, "empty summary series");
  std::vector<SummaryRow> rows = series;
  std::sort(rows.begin(), rows.end(),
            [](const SummaryRow& a, const SummaryRow& b) { return a.iter < b.iter; });

  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    for (double v : {r.median, r.p10, r.p90}) {
      if (plottable(v)) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
    }
  }
  const bool fallback = !(ymin <= ymax);
  double lo = 0.0;
  double hi = 1.0;
  if (!fallback) {
    lo = std::floor(std::log10(ymin));
    hi = std::ceil(std::log10(ymax));
    if (hi <= lo) hi = lo + 1.0;
  }
  const int xmin = rows.front().iter;
  const int xmax = std::max(rows.back().iter, xmin + 1);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](int iter) {
    return kLeft + plot_w * static_cast<double>(iter - xmin) / static_cast<double>(xmax - xmin);
  };
  auto py = [&](double v) { return kTop + plot_h * (hi - std::log10(v)) / (hi - lo); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" "
         "viewBox=\"0 0 800 500\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
  svg += "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" + escape(title) + "</text>\n";
  svg += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(plot_w) +
         "\" height=\"" + fmt(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); ++e) {
    const double y = kTop + plot_h * (hi - e) / (hi - lo);
    svg += "<line class=\"grid\" x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(y) + "\" x2=\"" +
           fmt(kLeft + plot_w) + "\" y2=\"" + fmt(y) + "\" stroke=\"#dddddd\"/>\n";
    svg += "<text x=\"" + fmt(kLeft - 6) + "\" y=\"" + fmt(y + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">1e" +
           std::to_string(e) + "</text>\n";
  }
  for (int t = 0; t <= 4; ++t) {
    const int iter = xmin + (xmax - xmin) * t / 4;
    svg += "<text x=\"" + fmt(px(iter)) + "\" y=\"" + fmt(kTop + plot_h + 20) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
           std::to_string(iter) + "</text>\n";
  }
  svg += "<text x=\"400\" y=\"490\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">iteration</text>\n";

  if (fallback) {
    svg += "<text class=\"warning\" x=\"400\" y=\"250\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"14\" fill=\"#aa0000\">warning: no finite "
           "positive values, axis fixed to [1, 10]</text>\n";
  }

  // Decile band and median, split wherever a value cannot be drawn.
  std::vector<std::vector<const SummaryRow*>> runs(1);
  for (const auto& r : rows) {
    if (plottable(r.median) && plottable(r.p10) && plottable(r.p90)) {
      runs.back().push_back(&r);
    } else if (!runs.back().empty()) {
      runs.emplace_back();
    }
  }
  for (const auto& run : runs) {
    if (run.empty()) continue;
    std::string band;
    for (const SummaryRow* r : run) band += fmt(px(r->iter)) + "," + fmt(py(r->p90)) + " ";
    for (auto it = run.rbegin(); it != run.rend(); ++it) {
      band += fmt(px((*it)->iter)) + "," + fmt(py((*it)->p10)) + " ";
    }
    band.pop_back();
    svg += "<polygon class=\"band\" points=\"" + band +
           "\" fill=\"#1f77b4\" fill-opacity=\"0.25\" stroke=\"none\"/>\n";
    std::string line;
    for (const SummaryRow* r : run) line += fmt(px(r->iter)) + "," + fmt(py(r->median)) + " ";
    line.pop_back();
    svg += "<polyline class=\"median\" points=\"" + line +
           "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<std::string> write_svg(const std::vector<SummaryRow>& rows, const std::string& out_dir) {
  if (rows.empty()) throw Error(ErrorKind::EmptySet, "empty summary");
  std::map<std::pair<std::string, std::string>, std::vector<SummaryRow>> groups;
  for (const auto& r : rows) groups[{r.scenario, to_string(r.metric)}].push_back(r);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  std::vector<std::string> written;
  for (const auto& [key, series] : groups) {
    const std::string name = key.first + "_" + key.second;
    const std::string path = (std::filesystem::path(out_dir) / (name + ".svg")).string();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open for writing: " + path);
    out << render_svg(series, key.first + ": " + key.second);
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path);
    written.push_back(path);
  }
  return written;
}

}  // namespace nspiggy
