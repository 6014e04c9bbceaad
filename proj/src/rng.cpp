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

#include "nspiggy/rng.hpp"

#include <cmath>
#include <numbers>

namespace nspiggy {

std::uint64_t stream_seed(std::uint64_t base, std::uint64_t rep) {
  return base ^ (rep * 0x9E3779B97F4A7C15ULL);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int Rng::integer(int lo, int hi) {
  const auto span = static_cast<double>(hi - lo + 1);
  const int k = lo + static_cast<int>(std::floor(uniform() * span));
  return k > hi ? hi : k;
}

Vector Rng::normal_vector(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Matrix Rng::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
  // Row-major fill order, independent of Eigen's storage order.
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
  }
  return m;
}

}  // namespace nspiggy
