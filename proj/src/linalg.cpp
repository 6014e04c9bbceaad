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

#include "nspiggy/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "nspiggy/error.hpp"

namespace nspiggy {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptySet: return "empty set";
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::RateViolation: return "rate violation";
    case ErrorKind::RateCertification: return "rate certification failure";
    case ErrorKind::SetExplosion: return "set explosion";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::TangentBlowUp: return "tangent blow-up";
    case ErrorKind::ImplicitInapplicable:
      return "implicit differentiation inapplicable";
    case ErrorKind::Decomposition: return "decomposition failure";
    case ErrorKind::InnerSolve: return "inner solve failure";
    case ErrorKind::Io: return "i/o failure";
  }
  return "unknown";
}

double operator_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  if (a.rows() == 1 || a.cols() == 1) return a.norm();

  constexpr double kRelTol = 1e-12;
  constexpr int kMaxIter = 10000;
  Vector v = Vector::Ones(a.cols()) / std::sqrt(static_cast<double>(a.cols()));
  Vector av = a * v;
  double estimate = av.norm();
  for (int it = 0; it < kMaxIter; ++it) {
    Vector w = a.transpose() * av;
    const double wn = w.norm();
    if (wn == 0.0) {
      // The start vector fell into the kernel of AᵀA; restart on a basis
      // direction carrying the largest column norm.
      Eigen::Index col = 0;
      a.colwise().norm().maxCoeff(&col);
      if (a.col(col).norm() == 0.0) return 0.0;
      v = Vector::Unit(a.cols(), col);
      av = a * v;
      estimate = av.norm();
      continue;
    }
    v = w / wn;
    av = a * v;
    const double next = av.norm();
    if (std::abs(next - estimate) <= kRelTol * std::max(next, 1e-300)) {
      return next;
    }
    estimate = next;
  }
  return estimate;
}

double spectral_radius(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::Decomposition, "eigenvalue computation failed");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double max_operator_norm(const JacobianSet& elements) {
  double rho = 0.0;
  for (const auto& e : elements) rho = std::max(rho, operator_norm(e.a));
  return rho;
}

}  // namespace nspiggy
