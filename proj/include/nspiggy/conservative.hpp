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

#ifndef NSPIGGY_CONSERVATIVE_HPP
#define NSPIGGY_CONSERVATIVE_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "nspiggy/linalg.hpp"

namespace nspiggy {

/// Absolute tolerance on branch-value agreement below which two branches
/// are considered simultaneously active.
inline constexpr double kActivationTol = 1e-12;

/// Partial derivatives of a scalar primitive with respect to (x, τ).
struct ScalarDerivative {
  double dx = 0.0;
  double dtau = 0.0;
};

struct SoftThresholdResult {
  double value = 0.0;
  /// One entry away from the kink, both vertices at |x| = τ.
  std::vector<ScalarDerivative> derivatives;
};

/// sign(x) max(|x| − τ, 0) with its derivative vertices. Throws on τ < 0.
SoftThresholdResult soft_threshold(double x, double tau);

/// Plain value of the soft threshold, no derivative bookkeeping.
double soft_threshold_value(double x, double tau);

/// Value of a proximal map together with the vertices [a | b] of its
/// Jacobian in (x, θ).
struct ProxResult {
  Vector value;
  JacobianSet jacobian;
};

/// Coordinatewise soft threshold at level τ with b taken w.r.t. τ.
/// Kinked coordinates contribute both vertices; the Cartesian product is
/// formed in coordinate order with the dead-zone vertex first. More than
/// `max_elements` vertices raise SetExplosion.
ProxResult l1_prox(const Vector& x, double tau, std::size_t max_elements = 4096);

/// x / (1 + 2αθ): the prox of αθ‖·‖². Throws unless α, θ > 0.
ProxResult ridge_prox(const Vector& x, double alpha, double theta);

/// argmin_Z tr(CZ) − log det Z + ‖Z − X‖²_F / (2α), via the spectral form
/// of X − αC.
Matrix logdet_prox(const Matrix& x, double alpha, const Matrix& c);

/// Directional derivative of logdet_prox in X along a symmetric E.
Matrix logdet_prox_jvp(const Matrix& x, double alpha, const Matrix& c, const Matrix& e);

/// Derivative of the spectral function S ↦ V h(D) Vᵀ in direction E,
/// computed with divided differences of h.
Matrix spectral_jvp(const Matrix& s, const Matrix& e, const std::function<double(double)>& h,
                    const std::function<double(double)>& dh);

/// Smooth piece of a selection function.
struct SelectionBranch {
  std::function<Vector(const Vector&)> value;
  std::function<Matrix(const Vector&)> jacobian;
};

/// Piecewise-smooth map F(x) = F_{selector(x)}(x).
class SelectionFunction {
 public:
  SelectionFunction(std::vector<SelectionBranch> branches,
                    std::function<std::size_t(const Vector&)> selector, double lipschitz,
                    double activation_tol = kActivationTol);

  Vector operator()(const Vector& x) const;
  std::size_t select(const Vector& x) const;
  /// Indices i with ‖F_i(x) − F(x)‖ ≤ activation_tol, in increasing order.
  std::vector<std::size_t> active_set(const Vector& x) const;

  const std::vector<SelectionBranch>& branches() const noexcept { return branches_; }
  double lipschitz() const noexcept { return lipschitz_; }
  double activation_tol() const noexcept { return activation_tol_; }

 private:
  std::vector<SelectionBranch> branches_;
  std::function<std::size_t(const Vector&)> selector_;
  double lipschitz_;
  double activation_tol_;
};

/// Classical Jacobians of the active branches at x.
std::vector<Matrix> selection_jacobian(const SelectionFunction& f, const Vector& x);

/// Probes n_probes points uniformly in the ball of the given radius around
/// x0 and checks gap(J(x), J(x0)) ≤ L‖x − x0‖ + 1e-9. Probes include the
/// center and are drawn from a generator seeded with `seed`.
bool selection_lipschitz_check(const SelectionFunction& f, const Vector& x0, double radius,
                               int n_probes, std::uint64_t seed = 0);

/// abs as the selection of {x, −x} (scalar).
SelectionFunction abs_selection();

/// Heavy-Ball counterexample gradient: x on [0, ∞), x / 4 on (−∞, 0).
SelectionFunction hb_gradient_selection();

}  // namespace nspiggy

#endif  // NSPIGGY_CONSERVATIVE_HPP
