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

#ifndef NSPIGGY_PROBLEMS_HPP
#define NSPIGGY_PROBLEMS_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nspiggy/linalg.hpp"
#include "nspiggy/piggyback.hpp"
#include "nspiggy/solvers.hpp"

namespace nspiggy {

/// A generated experiment instance: data, the iteration to differentiate
/// and an independent reference for its limit.
struct ScenarioInstance {
  std::string name;
  std::uint64_t seed = 0;
  /// Design matrix (ridge, lasso) or covariance C (sics).
  Matrix data;
  /// Observations b (ridge, lasso).
  Vector response;
  /// Fixed scalar hyperparameter not differentiated (trend filtering λ).
  double fixed_weight = 0.0;
  Vector theta;
  FixedPointProblem problem;
  /// Reference fixed point in state coordinates.
  Vector solution;
  /// Reference Jacobian of θ ↦ solution (empty when there is no closed form).
  Matrix solution_jacobian;
  /// Re-solves the fixed point at another θ to high accuracy.
  std::function<Vector(const Vector& theta)> solve;
  /// Maps a state to the estimator it encodes (identity for FB).
  std::function<Vector(const Vector& state, const Vector& theta)> estimate;
  /// Contraction factor of the iteration when known (0 otherwise).
  double rate = 0.0;
  /// Number of redraws needed to meet the qualification check (lasso).
  int redraws = 0;
  /// False when the lasso qualification check failed for this data.
  bool qualified = true;
};

/// ½‖Ax − b‖² + θ‖x‖² by forward-backward with α = 1/L.
ScenarioInstance make_ridge(int n, int p, double theta, std::uint64_t seed);
ScenarioInstance make_ridge(const Matrix& a, const Vector& b, double theta);

/// Closed forms (AᵀA + 2θI)⁻¹Aᵀb and −2(AᵀA + 2θI)⁻¹x̄.
Vector ridge_solution(const Matrix& a, const Vector& b, double theta);
Vector ridge_solution_derivative(const Matrix& a, const Vector& b, double theta);

/// ½‖Ax − b‖² + θ‖x‖₁ with θ = ratio ‖Aᵀb‖∞, by unit-step
/// forward-backward on the problem scaled by 1/L. Draws failing the
/// qualification check are redrawn (at most 10 times).
ScenarioInstance make_lasso(int n, int p, double ratio, std::uint64_t seed);
ScenarioInstance make_lasso(const Matrix& a, const Vector& b, double theta);

struct LassoSolution {
  Vector x;
  std::vector<Eigen::Index> support;
  Vector derivative;  // −(A_Sᵀ A_S)⁻¹ sign(x_S) on S, zero elsewhere
  /// min over i ∉ S of θ − |A_iᵀ(Ax − b)|; positive when qualified.
  double margin = 0.0;
  bool qualified = false;
};

/// High-accuracy lasso solve: forward-backward followed by the closed form
/// on the detected support.
LassoSolution solve_lasso(const Matrix& a, const Vector& b, double theta,
                          const Vector& warm_start = Vector());

/// tr(CX) − log det X + θ Σ|X_ij| by Douglas-Rachford on vec(X) with
/// C = VᵀV + 1e-3 I.
ScenarioInstance make_sics(int n, double theta, std::uint64_t seed);
ScenarioInstance make_sics(const Matrix& c, double theta);

/// ADMM penalty used by make_trend_filter.
inline constexpr double kTrendFilterPenalty = 10.0;

/// ½‖u − θ‖² + λ‖Du‖₁ by ADMM, differentiated through its dual
/// Douglas-Rachford form; θ is standard normal.
ScenarioInstance make_trend_filter(int p, double lambda, std::uint64_t seed);
ScenarioInstance make_trend_filter(const Vector& observations, double lambda);

/// The Heavy-Ball counterexample: f(x) = x²/2 on x ≥ 0 and x²/8 on x < 0,
/// α = 1, β = 3/4, x0 = y0 = θ, θ = 0, and the schedule f1, f1, f2, f2.
ScenarioInstance make_hb_counterexample();
/// Gradient descent with α = 1 on the same function and initialization.
ScenarioInstance make_gd_counterexample();

/// Two-element packet {(diag(1/2, 1/4), (1, 1)ᵀ), (diag(1/4, 1/2), (1, 1)ᵀ)}
/// with ρ = 1/2. Its element fixed points are (2, 4/3)ᵀ and (4/3, 2)ᵀ while
/// its fixed set also holds mixed products such as (5/3, 3/2)ᵀ.
MatrixPacket strict_inclusion_packet();

/// Gradient oracle of the counterexample function (θ-free).
ProxResult hb_gradient(const Vector& x, const Vector& theta);

/// The two matrices of the counterexample packet at the origin.
Matrix hb_matrix_m1();
Matrix hb_matrix_m2();

/// Derivative references at θ = 0 for the counterexample: the constant
/// trajectory has derivative 0, the identity solution map has derivative 1.
inline constexpr double kHbConstantTrajectoryDerivative = 0.0;
inline constexpr double kHbSolutionMapDerivative = 1.0;

}  // namespace nspiggy

#endif  // NSPIGGY_PROBLEMS_HPP
