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

#ifndef NSPIGGY_SRC_FIXED_SET_ORACLE_HPP
#define NSPIGGY_SRC_FIXED_SET_ORACLE_HPP

#include <limits>
#include <map>
#include <vector>

#include "nspiggy/matrix_sets.hpp"

namespace nspiggy::detail {

// Distances to the attractor fix(J) of a packet. Every f_w(c) with
// c = (I − A_0)⁻¹ B_0 lies in fix(J), and the cylinder f_w(fix(J)) sits in the
// ball of radius r_w R around it, where r_w is a product of element norms.
class FixedSetOracle {
 public:
  explicit FixedSetOracle(const MatrixPacket& packet, std::size_t max_nodes = 4000000);

  double radius() const noexcept { return radius_; }
  const Matrix& anchor() const noexcept { return anchor_; }

  // Stops once upper − lower ≤ max(tol, rel_tol · upper), or early once the
  // upper bound drops to stop_below.
  DistanceBounds point_distance(const Matrix& q, double tol,
                                double stop_below = -std::numeric_limits<double>::infinity(),
                                double rel_tol = 0.0) const;
  DistanceBounds gap_to(const MatrixSet& x, double tol) const;
  DistanceBounds gap_from(const MatrixSet& x, double tol) const;

  // Points of fix(J) whose delta-neighbourhood covers fix(J).
  const MatrixSet& cover(double delta) const;

  // Cardinality of cover(delta) extrapolated from two coarse covers with
  // the box-counting exponent; infinite when even those are out of reach.
  double predicted_cover_size(double delta) const;

 private:
  struct Node {
    Matrix a;
    Matrix b;
    Matrix center;
    double scale;
  };
  Node child(const Node& parent, std::size_t j) const;
  Node root() const;

  const MatrixPacket* packet_;
  std::size_t max_nodes_;
  Matrix anchor_;
  std::vector<Matrix> images_;  // f_j(anchor)
  std::vector<double> norms_;   // ‖A_j‖
  double radius_ = 0.0;
  mutable std::map<double, MatrixSet> covers_;
};

}  // namespace nspiggy::detail

#endif  // NSPIGGY_SRC_FIXED_SET_ORACLE_HPP
