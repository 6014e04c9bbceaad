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

#ifndef NSPIGGY_RNG_HPP
#define NSPIGGY_RNG_HPP

#include <cstdint>
#include <random>

#include "nspiggy/linalg.hpp"

namespace nspiggy {

/// Seed of repetition `rep` derived from a base seed:
/// base ^ (rep * 0x9E3779B97F4A7C15).
std::uint64_t stream_seed(std::uint64_t base, std::uint64_t rep);

/// Reproducible random source. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; uniforms and Gaussians are derived
/// here (53-bit mantissa, Box-Muller) instead of through the
/// implementation-defined std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal; each call consumes exactly two uniforms.
  double normal();
  /// Integer in [lo, hi].
  int integer(int lo, int hi);

  Vector normal_vector(Eigen::Index n);
  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols);

 private:
  std::mt19937_64 engine_;
};

}  // namespace nspiggy

#endif  // NSPIGGY_RNG_HPP
