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

#ifndef NSPIGGY_SOLVERS_HPP
#define NSPIGGY_SOLVERS_HPP

#include <functional>

#include "nspiggy/conservative.hpp"
#include "nspiggy/linalg.hpp"
#include "nspiggy/matrix_sets.hpp"
#include "nspiggy/piggyback.hpp"

namespace nspiggy {

/// A map of (x, θ) evaluated together with its Jacobian vertices.
using MapOracle = std::function<ProxResult(const Vector& x, const Vector& theta)>;

struct SplittingSpec {
  /// ∇_x f with vertices [∂²_xx f | ∂²_xθ f].
  MapOracle grad_f;
  /// prox_{α f(·, θ)}; used by Douglas-Rachford.
  MapOracle prox_f;
  /// prox_{α g(·, θ)}.
  MapOracle prox_g;
  double alpha = 1.0;
  /// Lipschitz constant of ∇_x f (0 when unknown).
  double lipschitz = 0.0;
  /// Strong convexity modulus of f (0 when unknown).
  double strong_convexity = 0.0;
};

/// Update and Jacobian vertices without any contraction certificate.
struct LinearizedStep {
  Vector next;
  JacobianSet elements;
};

struct CertifiedStep {
  Vector next;
  MatrixPacket packet;
};

/// prox_{αg}(x − α∇f(x, θ)) with vertices [C(I − αA), −αCB + D] over all
/// gradient vertices (outer) and prox vertices (inner).
LinearizedStep fb_linearize(const SplittingSpec& spec, const Vector& x, const Vector& theta);
/// fb_linearize plus certification of ρ < 1 (RateCertification otherwise).
CertifiedStep fb_step(const SplittingSpec& spec, const Vector& x, const Vector& theta);

/// y + prox_f(2 prox_g(y) − y) − prox_g(y), i.e. ½(I + R_f R_g) y, with
/// vertices A = I + 2C_f C_g − C_f − C_g, B = 2C_f D_g + D_f − D_g over
/// prox_g vertices (outer) and prox_f vertices (inner).
LinearizedStep dr_linearize(const SplittingSpec& spec, const Vector& y, const Vector& theta);
CertifiedStep dr_step(const SplittingSpec& spec, const Vector& y, const Vector& theta);

/// Jacobian of prox_{αf} at the point whose gradient Jacobian is
/// [A | B]: [(I + αA)⁻¹, −α(I + αA)⁻¹ B].
JacobianElement prox_jacobian_from_gradient(const JacobianElement& grad, double alpha);

/// Reflection 2P − I applied to a prox Jacobian vertex: [2C − I, 2D].
JacobianElement reflect(const JacobianElement& prox);

FixedPointProblem fb_problem(SplittingSpec spec, Eigen::Index state_dim, Eigen::Index param_dim,
                             std::function<Vector(const Vector&)> init);
FixedPointProblem dr_problem(SplittingSpec spec, Eigen::Index state_dim, Eigen::Index param_dim,
                             std::function<Vector(const Vector&)> init);

/// Second-order forward differences, (p − 2) x p with rows (1, −2, 1).
Matrix second_difference(Eigen::Index p);

/// ADMM for min_u ½‖u − θ‖² + λ‖Du‖₁ split as u ↦ φ(u), v ↦ λ‖v‖₁ under
/// Du − v = 0 with penalty α (D the second-difference matrix).
class TrendFilterAdmm {
 public:
  struct State {
    Vector u;
    Vector v;
    Vector x;
  };

  TrendFilterAdmm(Eigen::Index p, double lambda, double alpha = 1.0);

  Eigen::Index p() const noexcept { return d_.cols(); }
  double lambda() const noexcept { return lambda_; }
  double alpha() const noexcept { return alpha_; }
  const Matrix& difference() const noexcept { return d_; }

  State initial_state() const;
  State step(const State& s, const Vector& theta) const;

  /// Douglas-Rachford on the dual with y = x + αv. prox_g is the clip to
  /// [−λ, λ]; prox_f(z) = z + αD û(z) with û(z) = (I + αDᵀD)⁻¹(θ − Dᵀz).
  FixedPointProblem dual_dr_problem() const;
  SplittingSpec dual_dr_spec() const;

  /// ADMM variables at step k ≥ 1 recovered from the dual iterates:
  /// x_k = clip(y_k), v_k = (y_k − x_k) / α, u_k = û(2x_{k−1} − y_{k−1}).
  State from_dual(const Vector& y_prev, const Vector& y, const Vector& theta) const;

  /// û(2 clip(y) − y): the primal estimate attached to the dual iterate y.
  Vector primal(const Vector& y, const Vector& theta) const;

 private:
  Vector u_hat(const Vector& z, const Vector& theta) const;
  Vector clip(const Vector& y) const;

  Matrix d_;
  double lambda_;
  double alpha_;
  Eigen::LLT<Matrix> normal_;  // I + α DᵀD
  Matrix k_;                   // (I + α DᵀD)⁻¹
};

/// Heavy-Ball on the doubled state (x, y): x' = x − α∇f(x, θ) + β(x − y),
/// y' = x. Vertices [[(1+β)I − αH, −βI], [I, 0]] and [−αG; 0] for every
/// gradient vertex [H | G]. No contraction is claimed.
LinearizedStep heavy_ball_linearize(const MapOracle& grad_f, const Vector& xy,
                                    const Vector& theta, double alpha, double beta);

/// Gradient step x − α∇f(x, θ) with vertices [I − αH, −αG].
LinearizedStep gradient_descent_linearize(const MapOracle& grad_f, const Vector& x,
                                          const Vector& theta, double alpha);

}  // namespace nspiggy

#endif  // NSPIGGY_SOLVERS_HPP
