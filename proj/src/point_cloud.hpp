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

#ifndef NSPIGGY_SRC_POINT_CLOUD_HPP
#define NSPIGGY_SRC_POINT_CLOUD_HPP

#include <cstddef>
#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "nspiggy/linalg.hpp"

namespace nspiggy::detail {

// Flattened copy of a list of equally sized matrices.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(const std::vector<Matrix>& points);

  std::size_t size() const noexcept { return n_; }
  Eigen::Index dim() const noexcept { return dim_; }
  const double* point(std::size_t i) const { return data_.data() + i * dim_; }

 private:
  std::vector<double> data_;
  std::size_t n_ = 0;
  Eigen::Index dim_ = 0;
};

// Direction of largest spread of the cloud (a few deterministic power
// iterations on the centered second-moment matrix).
Vector principal_direction(const PointCloud& cloud);

double squared_distance(const double* a, const double* b, Eigen::Index dim,
                        double cutoff);

// Nearest-neighbour queries over a static cloud. Candidates are visited in
// order of their projection on the principal direction, which lower-bounds
// the Euclidean distance.
class NearestIndex {
 public:
  explicit NearestIndex(PointCloud cloud);

  // Distance from q (flattened, dim entries) to the nearest point.
  double distance(const double* q) const;

 private:
  PointCloud cloud_;
  Vector direction_;
  std::vector<double> keys_;        // sorted projections
  std::vector<std::size_t> order_;  // cloud index of keys_[i]
};

// Incremental set of kept points supporting "is any kept point within
// radius". Points are bucketed on a grid of cell size radius over the first
// few coordinates, so a query only visits the neighbouring cells.
class MergeIndex {
 public:
  MergeIndex(Eigen::Index dim, double radius);

  bool has_within(const double* q) const;
  void insert(const double* q);

 private:
  static constexpr Eigen::Index kGridDims = 3;
  using Cell = std::array<std::int64_t, kGridDims>;
  struct CellHash {
    std::size_t operator()(const Cell& c) const noexcept;
  };
  Cell cell_of(const double* q) const;

  Eigen::Index dim_;
  Eigen::Index grid_dims_;
  double radius_;
  std::vector<double> data_;
  std::unordered_map<Cell, std::vector<std::size_t>, CellHash> cells_;
};

}  // namespace nspiggy::detail

#endif  // NSPIGGY_SRC_POINT_CLOUD_HPP
