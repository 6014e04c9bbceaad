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

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include "nspiggy/error.hpp"
#include "nspiggy/experiments.hpp"

namespace nspiggy {

namespace {

constexpr const char* kRawHeader = "scenario,rep,iter,metric,value";
constexpr const char* kSummaryHeader = "scenario,iter,metric,median,p10,p90";

[[noreturn]] void io_error(const std::string& what, const std::string& path) {
  throw Error(ErrorKind::Io, what + ": " + path);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

int parse_int(const std::string& text) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::Io, "malformed integer '" + text + "'");
  }
  return v;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) io_error("cannot open for writing", path);
  out << content;
  out.close();
  if (!out) io_error("write failed", path);
}

std::vector<std::string> read_lines(const std::string& path, const char* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error("cannot open for reading", path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (lines.empty() || lines.front() != header) io_error("unexpected CSV header", path);
  lines.erase(lines.begin());
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error(ErrorKind::Io, "number formatting failed");
  return std::string(buf, ptr);
}

double parse_double(const std::string& text) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::Io, "malformed number '" + text + "'");
  }
  return v;
}

void write_records_csv(const std::vector<ExperimentRecord>& records, const std::string& path) {
  std::string out = std::string(kRawHeader) + "\n";
  for (const auto& r : records) {
    out += r.scenario + "," + std::to_string(r.rep) + "," + std::to_string(r.iter) + "," +
           to_string(r.metric) + "," + format_double(r.value) + "\n";
  }
  write_file(path, out);
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path) {
  std::string out = std::string(kSummaryHeader) + "\n";
  for (const auto& r : rows) {
    out += r.scenario + "," + std::to_string(r.iter) + "," + to_string(r.metric) + "," +
           format_double(r.median) + "," + format_double(r.p10) + "," + format_double(r.p90) +
           "\n";
  }
  write_file(path, out);
}

std::vector<ExperimentRecord> read_records_csv(const std::string& path) {
  std::vector<ExperimentRecord> records;
  for (const auto& line : read_lines(path, kRawHeader)) {
    const auto f = split(line);
    if (f.size() != 5) io_error("malformed row '" + line + "' in", path);
    records.push_back({f[0], parse_int(f[1]), parse_int(f[2]), parse_metric(f[3]),
                       parse_double(f[4])});
  }
  return records;
}

std::vector<SummaryRow> read_summary_csv(const std::string& path) {
  std::vector<SummaryRow> rows;
  for (const auto& line : read_lines(path, kSummaryHeader)) {
    const auto f = split(line);
    if (f.size() != 6) io_error("malformed row '" + line + "' in", path);
    rows.push_back({f[0], parse_int(f[1]), parse_metric(f[2]), parse_double(f[3]),
                    parse_double(f[4]), parse_double(f[5])});
  }
  return rows;
}

}  // namespace nspiggy
