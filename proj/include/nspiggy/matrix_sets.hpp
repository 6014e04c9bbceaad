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

#ifndef NSPIGGY_MATRIX_SETS_HPP
#define NSPIGGY_MATRIX_SETS_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "nspiggy/linalg.hpp"

namespace nspiggy {

/// A finite set of horizontally split matrices [A | B] whose A blocks all
/// have operator norm at most rho < 1. Represents a conservative Jacobian
/// J_F(x, θ) restricted to its vertices.
class MatrixPacket {
 public:
  /// Throws unless `elements` is nonempty, dimensionally consistent, rho is
  /// in [0, 1) and every A block satisfies ‖A‖ ≤ rho + 1e-10.
  MatrixPacket(JacobianSet elements, double rho);

  /// Builds a packet whose rho is the measured max of the A-block norms.
  /// Throws RateCertification unless that maximum is below 1 − 1e-9.
  static MatrixPacket certify(JacobianSet elements);

  const JacobianSet& elements() const noexcept { return elements_; }
  const JacobianElement& operator[](std::size_t i) const { return elements_[i]; }
  std::size_t size() const noexcept { return elements_.size(); }
  double rho() const noexcept { return rho_; }
  Eigen::Index state_dim() const { return elements_.front().a.rows(); }
  Eigen::Index param_dim() const { return elements_.front().b.cols(); }

  /// sup over elements of ‖B‖_F.
  double sup_b_norm() const;

 private:
  JacobianSet elements_;
  double rho_ = 0.0;
};

/// A finite set of p x m matrices with a merge radius used to control the
/// growth of set-valued iterations.
class MatrixSet {
 public:
  MatrixSet() = default;
  explicit MatrixSet(std::vector<Matrix> points, double prune_tol = 0.0);

  static MatrixSet singleton(Matrix point, double prune_tol = 0.0) {
    return MatrixSet({std::move(point)}, prune_tol);
  }

  const std::vector<Matrix>& points() const noexcept { return points_; }
  const Matrix& operator[](std::size_t i) const { return points_[i]; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  double prune_tol() const noexcept { return prune_tol_; }
  Eigen::Index rows() const { return points_.front().rows(); }
  Eigen::Index cols() const { return points_.front().cols(); }

  MatrixSet with_prune_tol(double tol) const;

  /// Greedy merge: points are visited in order and a point is dropped when
  /// an already kept point lies within prune_tol (Frobenius).
  MatrixSet pruned() const;

  /// max ‖X‖_F over the set.
  double sup_norm() const;

 private:
  std::vector<Matrix> points_;
  double prune_tol_ = 0.0;
};

/// max_{x ∈ X} min_{y ∈ Y} ‖x − y‖_F. Throws EmptySet on empty input.
double gap(const MatrixSet& x, const MatrixSet& y);

/// max(gap(X, Y), gap(Y, X)).
double hausdorff(const MatrixSet& x, const MatrixSet& y);

/// {A X + B} over all elements and points, points-major order, without
/// pruning and without any contraction requirement on the elements.
MatrixSet apply_elements(const JacobianSet& elements, const MatrixSet& x);

/// Packet action followed by one prune pass at x.prune_tol().
MatrixSet apply_packet(const MatrixPacket& packet, const MatrixSet& x);

struct FixedSetOptions {
  /// Merge radius; defaults to tol / 100.
  std::optional<double> prune_tol;
  /// Cardinality guard; exceeding it raises SetExplosion.
  std::size_t max_points = 200000;
  /// Iterations allowed beyond the a-priori Banach count.
  int safety_margin = 50;
};

struct FixedSetResult {
  MatrixSet set;
  int iterations = 0;
  /// hausdorff(X_{k+1}, X_k) for each performed step.
  std::vector<double> step_distances;
};

/// Iterates X_{k+1} = J(X_k) until hausdorff(X_{k+1}, X_k) ≤ tol (1 − ρ).
FixedSetResult fixed_set(const MatrixPacket& packet, const MatrixSet& x0,
                         double tol, const FixedSetOptions& options = {});

/// The fixed points (I − A)⁻¹B of the individual elements; each of them
/// belongs to fix(J).
MatrixSet element_fixed_points(const MatrixPacket& packet, double prune_tol = 0.0);

/// Certified enclosure of a distance.
struct DistanceBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Bounds on min_{z ∈ fix(J)} ‖point − z‖ with upper − lower ≤ tol, by
/// branch and bound over the cylinders f_w(fix(J)) ⊂ ball(f_w(c), r_w R).
DistanceBounds distance_to_fixed_set(const MatrixPacket& packet, const Matrix& point,
                                     double tol);

/// gap(X, fix(J)) to within tol.
DistanceBounds gap_to_fixed_set(const MatrixPacket& packet, const MatrixSet& x, double tol);

/// gap(fix(J), X) to within tol.
DistanceBounds gap_from_fixed_set(const MatrixPacket& packet, const MatrixSet& x,
                                  double tol);

/// hausdorff(X, fix(J)) to within tol.
DistanceBounds hausdorff_to_fixed_set(const MatrixPacket& packet, const MatrixSet& x,
                                      double tol);

struct RateRow {
  int k = 0;
  double dist = 0.0;
  double bound = 0.0;
};

/// Distances hausdorff(X_k, fix(J)) along X_{k+1} = J(X_k) (pruned at
/// x0.prune_tol()) next to the a-priori bound ρ^k dist(X_0, J(X_0)) / (1 − ρ).
/// Distances are upper ends of enclosures of width eval_tol; a nonpositive
/// eval_tol selects x0.prune_tol() (or 1e-10 when that is zero).
std::vector<RateRow> verify_rate(const MatrixPacket& packet, const MatrixSet& x0,
                                 int k_max, double eval_tol = 0.0);

/// Checks gap(fix(J), fix(J')) ≤ tol. Requires every element of J to be an
/// element of J' (InvalidArgument otherwise).
bool fix_monotonicity_check(const MatrixPacket& small, const MatrixPacket& large,
                            double tol);

/// Hausdorff distance between packets under ‖[A, B]‖ = max(‖A‖_op, ‖B‖_F).
double packet_distance(const MatrixPacket& a, const MatrixPacket& b);

struct LipschitzCheck {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// lhs = hausdorff(fix(J0), fix(J)), rhs = (1/(1−ρ) + sup‖B0‖/(1−ρ)²) dist(J0, J)
/// with ρ the larger of the two certificates.
LipschitzCheck fix_lipschitz_check(const MatrixPacket& j0, const MatrixPacket& j,
                                   double tol = 1e-10);

/// X_{k+1} = J_k(X_k); returns gap(X_k, fix(Jbar)) for k = 0..size(seq).
std::vector<double> perturbed_fixed_iteration(const std::vector<MatrixPacket>& seq,
                                              const MatrixPacket& jbar,
                                              const MatrixSet& x0,
                                              double eval_tol = 1e-10);

}  // namespace nspiggy

#endif  // NSPIGGY_MATRIX_SETS_HPP
