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

#include "nspiggy/piggyback.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nspiggy/error.hpp"

namespace nspiggy {

namespace {

void check_theta(const FixedPointProblem& prob, const Vector& theta) {
  if (theta.size() != prob.param_dim) {
    throw Error(ErrorKind::DimensionMismatch, "parameter has the wrong dimension");
  }
}

void check_finite_iterate(const Vector& x, int k) {
  if (!x.allFinite()) {
    std::ostringstream os;
    os << "divergence: non-finite iterate at step " << k;
    throw Error(ErrorKind::Divergence, os.str());
  }
}

template <class M>
void check_carry(const M& carry, int k) {
  const double n = carry.cwiseAbs().maxCoeff();
  if (!(n <= kTangentBlowUp)) {
    std::ostringstream os;
    os << "tangent blow-up: derivative magnitude " << n << " at step " << k;
    throw Error(ErrorKind::TangentBlowUp, os.str());
  }
}

}  // namespace

const JacobianElement& FixedPointProblem::selected(int k, const JacobianSet& elements) const {
  if (elements.empty()) throw Error(ErrorKind::EmptySet, "Jacobian oracle returned no element");
  const std::size_t i = select ? select(k, elements) : 0;
  if (i >= elements.size()) throw Error(ErrorKind::InvalidArgument, "selection out of range");
  return elements[i];
}

Matrix FixedPointProblem::initial_jacobian(const Vector& theta) const {
  if (!init_jacobian) return Matrix::Zero(state_dim, param_dim);
  Matrix j = init_jacobian(theta);
  if (j.rows() != state_dim || j.cols() != param_dim) {
    throw Error(ErrorKind::DimensionMismatch, "initial Jacobian has the wrong shape");
  }
  return j;
}

PropagationState start_propagation(const FixedPointProblem& prob, const Vector& theta,
                                   PropagationMode mode, const Vector& tangent_seed,
                                   double prune_tol) {
  check_theta(prob, theta);
  PropagationState s;
  s.mode = mode;
  s.x = prob.init(theta);
  if (s.x.size() != prob.state_dim) {
    throw Error(ErrorKind::DimensionMismatch, "initial iterate has the wrong dimension");
  }
  check_finite_iterate(s.x, 0);
  const Matrix j0 = prob.initial_jacobian(theta);
  switch (mode) {
    case PropagationMode::FullJacobian:
      s.jacobian = j0;
      break;
    case PropagationMode::Jvp:
      if (tangent_seed.size() != prob.param_dim) {
        throw Error(ErrorKind::DimensionMismatch, "tangent seed has the wrong dimension");
      }
      s.theta_dot = tangent_seed;
      s.tangent = j0 * tangent_seed;
      break;
    case PropagationMode::Vjp:
      s.initial_jacobian = j0;
      break;
    case PropagationMode::Packet:
      if (!(prune_tol > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "packet propagation needs prune_tol > 0");
      }
      s.set = MatrixSet::singleton(j0, prune_tol);
      break;
  }
  return s;
}

void advance(const FixedPointProblem& prob, const Vector& theta, PropagationState& s) {
  const JacobianSet elements = prob.jacobian(s.x, theta);
  const int k = s.k;
  if (s.track_rho) s.rho_seen = std::max(s.rho_seen, max_operator_norm(elements));
  switch (s.mode) {
    case PropagationMode::FullJacobian: {
      const JacobianElement& e = prob.selected(k, elements);
      s.jacobian = e.a * s.jacobian + e.b;
      check_carry(s.jacobian, k + 1);
      break;
    }
    case PropagationMode::Jvp: {
      const JacobianElement& e = prob.selected(k, elements);
      s.tangent = e.a * s.tangent + e.b * s.theta_dot;
      check_carry(s.tangent, k + 1);
      break;
    }
    case PropagationMode::Vjp:
      s.tape.push_back(prob.selected(k, elements));
      break;
    case PropagationMode::Packet: {
      MatrixSet next = apply_elements(elements, s.set).pruned();
      if (next.size() > s.max_points) {
        std::ostringstream os;
        os << "set explosion: " << next.size() << " Jacobian candidates at step " << k + 1;
        throw Error(ErrorKind::SetExplosion, os.str());
      }
      for (const auto& p : next.points()) check_carry(p, k + 1);
      s.set = std::move(next);
      break;
    }
  }
  s.x = prob.step(s.x, theta);
  check_finite_iterate(s.x, k + 1);
  s.k = k + 1;
}

Matrix reverse_accumulate(const PropagationState& s, const Matrix& wbar) {
  if (s.mode != PropagationMode::Vjp) {
    throw Error(ErrorKind::InvalidArgument, "reverse accumulation needs a recorded tape");
  }
  if (wbar.rows() != s.x.size()) {
    throw Error(ErrorKind::DimensionMismatch, "cotangent has the wrong dimension");
  }
  Matrix w = wbar;
  Matrix theta_bar = Matrix::Zero(s.initial_jacobian.cols(), wbar.cols());
  for (auto it = s.tape.rbegin(); it != s.tape.rend(); ++it) {
    theta_bar.noalias() += it->b.transpose() * w;
    w = it->a.transpose() * w;
    check_carry(w, s.k);
  }
  theta_bar.noalias() += s.initial_jacobian.transpose() * w;
  check_carry(theta_bar, s.k);
  return theta_bar;
}

std::vector<Vector> run_iterates(const FixedPointProblem& prob, const Vector& theta, int k) {
  if (k < 0) throw Error(ErrorKind::InvalidArgument, "iteration count must be nonnegative");
  check_theta(prob, theta);
  std::vector<Vector> xs;
  xs.reserve(static_cast<std::size_t>(k) + 1);
  xs.push_back(prob.init(theta));
  check_finite_iterate(xs.back(), 0);
  for (int i = 0; i < k; ++i) {
    xs.push_back(prob.step(xs.back(), theta));
    check_finite_iterate(xs.back(), i + 1);
  }
  return xs;
}

std::vector<Vector> jvp_forward_sequence(const FixedPointProblem& prob, const Vector& theta,
                                         const Vector& theta_dot, int k) {
  if (k < 0) throw Error(ErrorKind::InvalidArgument, "iteration count must be nonnegative");
  PropagationState s = start_propagation(prob, theta, PropagationMode::Jvp, theta_dot);
  std::vector<Vector> out{s.tangent};
  for (int i = 0; i < k; ++i) {
    advance(prob, theta, s);
    out.push_back(s.tangent);
  }
  return out;
}

Vector jvp_forward(const FixedPointProblem& prob, const Vector& theta, const Vector& theta_dot,
                   int k) {
  return jvp_forward_sequence(prob, theta, theta_dot, k).back();
}

Vector vjp_reverse(const FixedPointProblem& prob, const Vector& theta, const Vector& wbar, int k) {
  if (k < 0) throw Error(ErrorKind::InvalidArgument, "iteration count must be nonnegative");
  PropagationState s = start_propagation(prob, theta, PropagationMode::Vjp);
  for (int i = 0; i < k; ++i) advance(prob, theta, s);
  return reverse_accumulate(s, wbar);
}

std::vector<Matrix> full_jacobian_sequence(const FixedPointProblem& prob, const Vector& theta,
                                           int k) {
  if (k < 0) throw Error(ErrorKind::InvalidArgument, "iteration count must be nonnegative");
  PropagationState s = start_propagation(prob, theta, PropagationMode::FullJacobian);
  std::vector<Matrix> out{s.jacobian};
  for (int i = 0; i < k; ++i) {
    advance(prob, theta, s);
    out.push_back(s.jacobian);
  }
  return out;
}

std::vector<MatrixSet> packet_sequence(const FixedPointProblem& prob, const Vector& theta, int k,
                                       double prune_tol, std::size_t max_points) {
  if (k < 0) throw Error(ErrorKind::InvalidArgument, "iteration count must be nonnegative");
  PropagationState s =
      start_propagation(prob, theta, PropagationMode::Packet, Vector(), prune_tol);
  s.max_points = max_points;
  std::vector<MatrixSet> out{s.set};
  for (int i = 0; i < k; ++i) {
    advance(prob, theta, s);
    out.push_back(s.set);
  }
  return out;
}

MatrixSet implicit_jacobian(const JacobianSet& elements) {
  if (elements.empty()) throw Error(ErrorKind::EmptySet, "empty packet");
  std::vector<Matrix> out;
  out.reserve(elements.size());
  for (const auto& e : elements) {
    const Matrix lhs = Matrix::Identity(e.a.rows(), e.a.cols()) - e.a;
    Eigen::JacobiSVD<Matrix> svd(lhs);
    const Vector& sv = svd.singularValues();
    const double smallest = sv[sv.size() - 1];
    if (!(smallest > 0.0) || sv[0] / smallest > 1e12) {
      throw Error(ErrorKind::ImplicitInapplicable,
                  "implicit differentiation inapplicable: I - A is singular");
    }
    out.push_back(lhs.partialPivLu().solve(e.b));
  }
  return MatrixSet(std::move(out));
}

MatrixSet implicit_jacobian(const MatrixPacket& packet) {
  return implicit_jacobian(packet.elements());
}

Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& solve,
                                  const Vector& theta, double rel_step) {
  const Vector base = solve(theta);
  Matrix jac(base.size(), theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double h = rel_step * std::max(1.0, std::abs(theta[j]));
    Vector plus = theta;
    Vector minus = theta;
    plus[j] += h;
    minus[j] -= h;
    jac.col(j) = (solve(plus) - solve(minus)) / (2.0 * h);
  }
  return jac;
}

}  // namespace nspiggy
