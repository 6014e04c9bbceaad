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

#ifndef NSPIGGY_PIGGYBACK_HPP
#define NSPIGGY_PIGGYBACK_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "nspiggy/linalg.hpp"
#include "nspiggy/matrix_sets.hpp"

namespace nspiggy {

/// Magnitude above which a propagated derivative is reported as blown up.
inline constexpr double kTangentBlowUp = 1e12;

/// Parametric iteration x_{k+1} = F(x_k, θ) with a Jacobian oracle.
struct FixedPointProblem {
  Eigen::Index state_dim = 0;
  Eigen::Index param_dim = 0;
  std::function<Vector(const Vector& x, const Vector& theta)> step;
  /// Vertices [A | B] of the conservative Jacobian of F at (x, θ).
  std::function<JacobianSet(const Vector& x, const Vector& theta)> jacobian;
  /// Picks one vertex at iteration k; unset means the first element.
  std::function<std::size_t(int k, const JacobianSet& elements)> select;
  std::function<Vector(const Vector& theta)> init;
  /// Jacobian of θ ↦ x0(θ); unset means zero.
  std::function<Matrix(const Vector& theta)> init_jacobian;

  const JacobianElement& selected(int k, const JacobianSet& elements) const;
  Matrix initial_jacobian(const Vector& theta) const;
};

enum class PropagationMode { FullJacobian, Jvp, Vjp, Packet };

/// Iterate plus the derivative object carried along with it.
struct PropagationState {
  PropagationMode mode = PropagationMode::FullJacobian;
  int k = 0;
  Vector x;
  Matrix jacobian;                 // FullJacobian
  Vector tangent;                  // Jvp
  Vector theta_dot;                // Jvp
  std::vector<JacobianElement> tape;  // Vjp, one selected factor per step
  Matrix initial_jacobian;         // Vjp
  MatrixSet set;                   // Packet
  std::size_t max_points = 10000;  // Packet
  /// Running max of the a-block norms seen so far (when tracked).
  double rho_seen = 0.0;
  bool track_rho = false;
};

/// Starts a propagation at x0(θ). `tangent_seed` is θ̇ for Jvp mode;
/// `prune_tol` applies to Packet mode.
PropagationState start_propagation(const FixedPointProblem& prob, const Vector& theta,
                                   PropagationMode mode, const Vector& tangent_seed = Vector(),
                                   double prune_tol = 0.0);

/// One iteration of F together with the carried derivative.
void advance(const FixedPointProblem& prob, const Vector& theta, PropagationState& state);

/// Reverse accumulation over the recorded tape: returns J_kᵀ W̄ (m x q).
Matrix reverse_accumulate(const PropagationState& state, const Matrix& wbar);

/// x_0 … x_k. Throws Divergence on a non-finite iterate.
std::vector<Vector> run_iterates(const FixedPointProblem& prob, const Vector& theta, int k);

/// ẋ_k with ẋ_{i+1} = A_i ẋ_i + B_i θ̇.
Vector jvp_forward(const FixedPointProblem& prob, const Vector& theta, const Vector& theta_dot,
                   int k);
/// ẋ_0 … ẋ_k.
std::vector<Vector> jvp_forward_sequence(const FixedPointProblem& prob, const Vector& theta,
                                         const Vector& theta_dot, int k);

/// θ̄_k = J_kᵀ w̄ by the reverse sweep over the selected factors.
Vector vjp_reverse(const FixedPointProblem& prob, const Vector& theta, const Vector& wbar, int k);

/// J_0 … J_k with J_{i+1} = A_i J_i + B_i.
std::vector<Matrix> full_jacobian_sequence(const FixedPointProblem& prob, const Vector& theta,
                                           int k);

/// X_0 = {J_{x0}}, X_{i+1} = J_F(x_i, θ)(X_i) pruned at prune_tol. Sets
/// larger than max_points raise SetExplosion.
std::vector<MatrixSet> packet_sequence(const FixedPointProblem& prob, const Vector& theta, int k,
                                       double prune_tol, std::size_t max_points = 10000);

/// {(I − A)⁻¹ B}; a condition number of I − A above 1e12 raises
/// ImplicitInapplicable.
MatrixSet implicit_jacobian(const JacobianSet& elements);
MatrixSet implicit_jacobian(const MatrixPacket& packet);

/// Central differences of a solution map θ ↦ x̄(θ) with step
/// rel_step · max(1, |θ_j|).
Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& solve,
                                  const Vector& theta, double rel_step = 1e-6);

}  // namespace nspiggy

#endif  // NSPIGGY_PIGGYBACK_HPP
