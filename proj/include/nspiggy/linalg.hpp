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

#ifndef NSPIGGY_LINALG_HPP
#define NSPIGGY_LINALG_HPP

#include <Eigen/Dense>
#include <vector>

namespace nspiggy {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One element [A | B] of a conservative Jacobian: `a` is the partial with
/// respect to the state (p x p), `b` the partial with respect to the
/// parameter (p x m).
struct JacobianElement {
  Matrix a;
  Matrix b;
};

/// Finite vertex list of a set-valued Jacobian. Order is significant: the
/// default selection policy picks the first element.
using JacobianSet = std::vector<JacobianElement>;

/// Spectral norm of `a` by power iteration on AᵀA, started from the
/// normalized all-ones vector (relative tolerance 1e-12, at most 10 000
/// iterations).
double operator_norm(const Matrix& a);

/// Largest modulus of the eigenvalues of a square matrix.
double spectral_radius(const Matrix& a);

/// Frobenius norm of a - b; the metric used on matrix sets.
inline double frobenius_distance(const Matrix& a, const Matrix& b) {
  return (a - b).norm();
}

/// Max of all a-block operator norms in `elements`.
double max_operator_norm(const JacobianSet& elements);

}  // namespace nspiggy

#endif  // NSPIGGY_LINALG_HPP
