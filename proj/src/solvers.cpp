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

#include "nspiggy/solvers.hpp"

#include <cmath>
#include <sstream>

#include "nspiggy/error.hpp"

namespace nspiggy {

namespace {

void require_elements(const ProxResult& r, Eigen::Index p, const char* what) {
  if (r.jacobian.empty()) {
    throw Error(ErrorKind::EmptySet, std::string(what) + " returned no Jacobian element");
  }
  if (r.value.size() != p) {
    throw Error(ErrorKind::DimensionMismatch, std::string(what) + " has the wrong output size");
  }
}

CertifiedStep certify_step(LinearizedStep step) {
  return CertifiedStep{std::move(step.next), MatrixPacket::certify(std::move(step.elements))};
}

}  // namespace

LinearizedStep fb_linearize(const SplittingSpec& spec, const Vector& x, const Vector& theta) {
  if (!(spec.alpha > 0.0)) throw Error(ErrorKind::InvalidArgument, "step size must be positive");
  if (spec.lipschitz > 0.0 && !(spec.alpha < 2.0 / spec.lipschitz)) {
    throw Error(ErrorKind::InvalidArgument, "forward-backward needs 0 < alpha < 2/L");
  }
  const auto p = x.size();
  const ProxResult grad = spec.grad_f(x, theta);
  require_elements(grad, p, "gradient");
  const Vector z = x - spec.alpha * grad.value;
  const ProxResult prox = spec.prox_g(z, theta);
  require_elements(prox, p, "prox_g");
  LinearizedStep out;
  out.next = prox.value;
  out.elements.reserve(grad.jacobian.size() * prox.jacobian.size());
  const Matrix id = Matrix::Identity(p, p);
  for (const auto& g : grad.jacobian) {
    const Matrix forward_a = id - spec.alpha * g.a;
    for (const auto& c : prox.jacobian) {
      out.elements.push_back({c.a * forward_a, -spec.alpha * c.a * g.b + c.b});
    }
  }
  return out;
}

CertifiedStep fb_step(const SplittingSpec& spec, const Vector& x, const Vector& theta) {
  return certify_step(fb_linearize(spec, x, theta));
}

LinearizedStep dr_linearize(const SplittingSpec& spec, const Vector& y, const Vector& theta) {
  if (!(spec.alpha > 0.0)) throw Error(ErrorKind::InvalidArgument, "step size must be positive");
  const auto p = y.size();
  const ProxResult pg = spec.prox_g(y, theta);
  require_elements(pg, p, "prox_g");
  const Vector z = 2.0 * pg.value - y;
  const ProxResult pf = spec.prox_f(z, theta);
  require_elements(pf, p, "prox_f");
  LinearizedStep out;
  out.next = y + pf.value - pg.value;
  out.elements.reserve(pg.jacobian.size() * pf.jacobian.size());
  const Matrix id = Matrix::Identity(p, p);
  for (const auto& g : pg.jacobian) {
    for (const auto& f : pf.jacobian) {
      out.elements.push_back(
          {id + 2.0 * f.a * g.a - f.a - g.a, 2.0 * f.a * g.b + f.b - g.b});
    }
  }
  return out;
}

CertifiedStep dr_step(const SplittingSpec& spec, const Vector& y, const Vector& theta) {
  return certify_step(dr_linearize(spec, y, theta));
}

JacobianElement prox_jacobian_from_gradient(const JacobianElement& grad, double alpha) {
  const auto p = grad.a.rows();
  const Matrix m = Matrix::Identity(p, p) + alpha * grad.a;
  Eigen::PartialPivLU<Matrix> lu(m);
  const Matrix inv = lu.inverse();
  return {inv, -alpha * inv * grad.b};
}

JacobianElement reflect(const JacobianElement& prox) {
  const auto p = prox.a.rows();
  return {2.0 * prox.a - Matrix::Identity(p, p), 2.0 * prox.b};
}

namespace {

FixedPointProblem splitting_problem(
    std::function<LinearizedStep(const Vector&, const Vector&)> linearize,
    Eigen::Index state_dim, Eigen::Index param_dim, std::function<Vector(const Vector&)> init) {
  FixedPointProblem prob;
  prob.state_dim = state_dim;
  prob.param_dim = param_dim;
  prob.step = [linearize](const Vector& x, const Vector& theta) {
    return linearize(x, theta).next;
  };
  prob.jacobian = [linearize](const Vector& x, const Vector& theta) {
    return linearize(x, theta).elements;
  };
  prob.init = std::move(init);
  return prob;
}

}  // namespace

FixedPointProblem fb_problem(SplittingSpec spec, Eigen::Index state_dim, Eigen::Index param_dim,
                             std::function<Vector(const Vector&)> init) {
  return splitting_problem(
      [spec = std::move(spec)](const Vector& x, const Vector& theta) {
        return fb_linearize(spec, x, theta);
      },
      state_dim, param_dim, std::move(init));
}

FixedPointProblem dr_problem(SplittingSpec spec, Eigen::Index state_dim, Eigen::Index param_dim,
                             std::function<Vector(const Vector&)> init) {
  return splitting_problem(
      [spec = std::move(spec)](const Vector& y, const Vector& theta) {
        return dr_linearize(spec, y, theta);
      },
      state_dim, param_dim, std::move(init));
}

Matrix second_difference(Eigen::Index p) {
  if (p < 3) throw Error(ErrorKind::InvalidArgument, "second differences need p >= 3");
  Matrix d = Matrix::Zero(p - 2, p);
  for (Eigen::Index i = 0; i + 2 < p; ++i) {
    d(i, i) = 1.0;
    d(i, i + 1) = -2.0;
    d(i, i + 2) = 1.0;
  }
  return d;
}

TrendFilterAdmm::TrendFilterAdmm(Eigen::Index p, double lambda, double alpha)
    : d_(second_difference(p)), lambda_(lambda), alpha_(alpha) {
  if (!(lambda_ >= 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda must be nonnegative");
  if (!(alpha_ > 0.0)) throw Error(ErrorKind::InvalidArgument, "alpha must be positive");
  const Matrix m = Matrix::Identity(p, p) + alpha_ * d_.transpose() * d_;
  normal_.compute(m);
  if (normal_.info() != Eigen::Success) {
    throw Error(ErrorKind::InnerSolve, "u-update system is not positive definite");
  }
  k_ = normal_.solve(Matrix::Identity(p, p));
}

TrendFilterAdmm::State TrendFilterAdmm::initial_state() const {
  const auto q = d_.rows();
  return State{Vector::Zero(p()), Vector::Zero(q), Vector::Zero(q)};
}

TrendFilterAdmm::State TrendFilterAdmm::step(const State& s, const Vector& theta) const {
  if (theta.size() != p() || s.v.size() != d_.rows() || s.x.size() != d_.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "ADMM state or parameter has the wrong size");
  }
  State next;
  next.u = normal_.solve(theta - d_.transpose() * s.x + alpha_ * d_.transpose() * s.v);
  const Vector du = d_ * next.u;
  const Vector w = du + s.x / alpha_;
  next.v = w.unaryExpr([this](double t) { return soft_threshold_value(t, lambda_ / alpha_); });
  next.x = s.x + alpha_ * (du - next.v);
  return next;
}

Vector TrendFilterAdmm::u_hat(const Vector& z, const Vector& theta) const {
  return k_ * (theta - d_.transpose() * z);
}

Vector TrendFilterAdmm::clip(const Vector& y) const {
  return y.cwiseMax(-lambda_).cwiseMin(lambda_);
}

SplittingSpec TrendFilterAdmm::dual_dr_spec() const {
  SplittingSpec spec;
  spec.alpha = alpha_;
  const double lambda = lambda_;
  const Eigen::Index p = this->p();
  spec.prox_g = [lambda, p](const Vector& y, const Vector&) {
    // Clip = identity minus the soft threshold at λ.
    ProxResult st = l1_prox(y, lambda);
    ProxResult out;
    out.value = y - st.value;
    const auto q = y.size();
    for (const auto& e : st.jacobian) {
      out.jacobian.push_back({Matrix::Identity(q, q) - e.a, Matrix::Zero(q, p)});
    }
    return out;
  };
  const Matrix cf = Matrix::Identity(d_.rows(), d_.rows()) - alpha_ * d_ * k_ * d_.transpose();
  const Matrix df = alpha_ * d_ * k_;
  // Captured by value so the problem may outlive this object.
  spec.prox_f = [d = d_, k = k_, alpha = alpha_, cf, df](const Vector& z, const Vector& theta) {
    ProxResult out;
    out.value = z + alpha * d * (k * (theta - d.transpose() * z));
    out.jacobian.push_back({cf, df});
    return out;
  };
  return spec;
}

FixedPointProblem TrendFilterAdmm::dual_dr_problem() const {
  const auto q = d_.rows();
  return dr_problem(dual_dr_spec(), q, p(), [q](const Vector&) { return Vector(Vector::Zero(q)); });
}

TrendFilterAdmm::State TrendFilterAdmm::from_dual(const Vector& y_prev, const Vector& y,
                                                  const Vector& theta) const {
  State s;
  s.x = clip(y);
  s.v = (y - s.x) / alpha_;
  s.u = primal(y_prev, theta);
  return s;
}

Vector TrendFilterAdmm::primal(const Vector& y, const Vector& theta) const {
  return u_hat(2.0 * clip(y) - y, theta);
}

LinearizedStep heavy_ball_linearize(const MapOracle& grad_f, const Vector& xy,
                                    const Vector& theta, double alpha, double beta) {
  if (xy.size() % 2 != 0) throw Error(ErrorKind::DimensionMismatch, "Heavy-Ball state is (x, y)");
  const auto p = xy.size() / 2;
  const Vector x = xy.head(p);
  const Vector y = xy.tail(p);
  const ProxResult grad = grad_f(x, theta);
  require_elements(grad, p, "gradient");
  LinearizedStep out;
  out.next.resize(2 * p);
  out.next.head(p) = x - alpha * grad.value + beta * (x - y);
  out.next.tail(p) = x;
  const Matrix id = Matrix::Identity(p, p);
  for (const auto& g : grad.jacobian) {
    const auto m = g.b.cols();
    JacobianElement e{Matrix::Zero(2 * p, 2 * p), Matrix::Zero(2 * p, m)};
    e.a.topLeftCorner(p, p) = (1.0 + beta) * id - alpha * g.a;
    e.a.topRightCorner(p, p) = -beta * id;
    e.a.bottomLeftCorner(p, p) = id;
    e.b.topRows(p) = -alpha * g.b;
    out.elements.push_back(std::move(e));
  }
  return out;
}

LinearizedStep gradient_descent_linearize(const MapOracle& grad_f, const Vector& x,
                                          const Vector& theta, double alpha) {
  const auto p = x.size();
  const ProxResult grad = grad_f(x, theta);
  require_elements(grad, p, "gradient");
  LinearizedStep out;
  out.next = x - alpha * grad.value;
  for (const auto& g : grad.jacobian) {
    out.elements.push_back({Matrix::Identity(p, p) - alpha * g.a, -alpha * g.b});
  }
  return out;
}

}  // namespace nspiggy
