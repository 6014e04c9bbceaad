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

#include "nspiggy/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nspiggy/conservative.hpp"
#include "nspiggy/error.hpp"
#include "nspiggy/rng.hpp"

namespace nspiggy {

namespace {

constexpr int kMaxLassoRedraws = 10;
constexpr double kSolveTol = 1e-13;

Vector scalar(double v) { return Vector::Constant(1, v); }

// Iterates a problem from its initialization until successive iterates
// agree to tol (relative to the iterate scale).
Vector run_to_convergence(const FixedPointProblem& prob, const Vector& theta, int max_iters,
                          double tol, const Vector& start = Vector()) {
  Vector x = start.size() == prob.state_dim ? start : prob.init(theta);
  for (int k = 0; k < max_iters; ++k) {
    Vector next = prob.step(x, theta);
    if (!next.allFinite()) throw Error(ErrorKind::Divergence, "divergence in reference solve");
    const double change = (next - x).norm();
    x = std::move(next);
    if (change <= tol * std::max(1.0, x.norm())) return x;
  }
  std::ostringstream os;
  os << "reference solve did not reach " << tol << " within " << max_iters << " iterations";
  throw Error(ErrorKind::InnerSolve, os.str());
}

Vector identity_estimate(const Vector& state, const Vector&) { return state; }

}  // namespace

Vector ridge_solution(const Matrix& a, const Vector& b, double theta) {
  const auto p = a.cols();
  const Matrix m = a.transpose() * a + 2.0 * theta * Matrix::Identity(p, p);
  return m.llt().solve(a.transpose() * b);
}

Vector ridge_solution_derivative(const Matrix& a, const Vector& b, double theta) {
  const auto p = a.cols();
  const Matrix m = a.transpose() * a + 2.0 * theta * Matrix::Identity(p, p);
  const Eigen::LLT<Matrix> llt(m);
  return -2.0 * llt.solve(llt.solve(a.transpose() * b));
}

ScenarioInstance make_ridge(const Matrix& a, const Vector& b, double theta) {
  if (a.rows() < 1 || a.cols() < 1 || b.size() != a.rows()) {
    throw Error(ErrorKind::InvalidArgument, "ridge needs a nonempty design and matching b");
  }
  if (!(theta > 0.0)) throw Error(ErrorKind::InvalidArgument, "ridge needs theta > 0");
  const auto p = a.cols();
  const Matrix ata = a.transpose() * a;
  const Vector atb = a.transpose() * b;
  const double lipschitz = std::pow(operator_norm(a), 2);
  const double alpha = 1.0 / lipschitz;

  SplittingSpec spec;
  spec.alpha = alpha;
  spec.lipschitz = lipschitz;
  spec.grad_f = [ata, atb](const Vector& x, const Vector&) {
    ProxResult out;
    out.value = ata * x - atb;
    out.jacobian.push_back({ata, Matrix::Zero(x.size(), 1)});
    return out;
  };
  spec.prox_g = [alpha](const Vector& z, const Vector& th) { return ridge_prox(z, alpha, th[0]); };

  ScenarioInstance inst;
  inst.name = "ridge";
  inst.data = a;
  inst.response = b;
  inst.theta = scalar(theta);
  inst.problem = fb_problem(spec, p, 1, [p](const Vector&) { return Vector(Vector::Zero(p)); });
  inst.solution = ridge_solution(a, b, theta);
  inst.solution_jacobian = ridge_solution_derivative(a, b, theta);
  inst.solve = [a, b](const Vector& th) { return ridge_solution(a, b, th[0]); };
  inst.estimate = identity_estimate;
  inst.rate = operator_norm(Matrix::Identity(p, p) - alpha * ata) / (1.0 + 2.0 * alpha * theta);
  return inst;
}

ScenarioInstance make_ridge(int n, int p, double theta, std::uint64_t seed) {
  if (n < 1 || p < 1) throw Error(ErrorKind::InvalidArgument, "ridge dimensions must be >= 1");
  Rng rng(seed);
  const Matrix a = rng.normal_matrix(n, p);
  const Vector b = rng.normal_vector(n);
  ScenarioInstance inst = make_ridge(a, b, theta);
  inst.seed = seed;
  return inst;
}

LassoSolution solve_lasso(const Matrix& a, const Vector& b, double theta, const Vector& warm_start) {
  if (!(theta > 0.0)) throw Error(ErrorKind::InvalidArgument, "lasso needs theta > 0");
  const auto p = a.cols();
  const Matrix ata = a.transpose() * a;
  const Vector atb = a.transpose() * b;
  const double lipschitz = std::pow(operator_norm(a), 2);
  const double tau = theta / lipschitz;

  LassoSolution sol;
  Vector x = warm_start.size() == p ? warm_start : Vector(Vector::Zero(p));
  for (int k = 0; k < 1000000; ++k) {
    const Vector z = x - (ata * x - atb) / lipschitz;
    Vector next = z.unaryExpr([tau](double t) { return soft_threshold_value(t, tau); });
    const double change = (next - x).cwiseAbs().maxCoeff();
    x = std::move(next);
    if (change <= 1e-15 * std::max(1.0, x.cwiseAbs().maxCoeff())) break;
  }

  for (Eigen::Index i = 0; i < p; ++i) {
    if (std::abs(x[i]) > 1e-8) sol.support.push_back(i);
  }
  const auto s = static_cast<Eigen::Index>(sol.support.size());
  sol.derivative = Vector::Zero(p);
  bool consistent = s <= a.rows();
  if (s > 0 && consistent) {
    Matrix as(a.rows(), s);
    Vector signs(s);
    for (Eigen::Index j = 0; j < s; ++j) {
      as.col(j) = a.col(sol.support[j]);
      signs[j] = x[sol.support[j]] > 0.0 ? 1.0 : -1.0;
    }
    const Matrix gram = as.transpose() * as;
    const Eigen::LDLT<Matrix> ldlt(gram);
    const Vector xs = ldlt.solve(as.transpose() * b - theta * signs);
    const Vector ds = -ldlt.solve(signs);
    for (Eigen::Index j = 0; j < s; ++j) consistent = consistent && xs[j] * signs[j] > 0.0;
    if (consistent) {
      x.setZero();
      for (Eigen::Index j = 0; j < s; ++j) {
        x[sol.support[j]] = xs[j];
        sol.derivative[sol.support[j]] = ds[j];
      }
    }
  }
  sol.x = x;
  const Vector corr = a.transpose() * (a * x - b);
  sol.margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < p; ++i) {
    if (std::find(sol.support.begin(), sol.support.end(), i) == sol.support.end()) {
      sol.margin = std::min(sol.margin, theta - std::abs(corr[i]));
    }
  }
  sol.qualified = consistent && sol.margin > 1e-8;
  return sol;
}

ScenarioInstance make_lasso(const Matrix& a, const Vector& b, double theta) {
  if (a.rows() < 1 || a.cols() < 1 || b.size() != a.rows()) {
    throw Error(ErrorKind::InvalidArgument, "lasso needs a nonempty design and matching b");
  }
  const auto p = a.cols();
  const double lipschitz = std::pow(operator_norm(a), 2);
  const Matrix ata_scaled = a.transpose() * a / lipschitz;
  const Vector atb_scaled = a.transpose() * b / lipschitz;

  SplittingSpec spec;
  spec.alpha = 1.0;
  spec.lipschitz = 1.0;
  spec.grad_f = [ata_scaled, atb_scaled](const Vector& x, const Vector&) {
    ProxResult out;
    out.value = ata_scaled * x - atb_scaled;
    out.jacobian.push_back({ata_scaled, Matrix::Zero(x.size(), 1)});
    return out;
  };
  spec.prox_g = [lipschitz](const Vector& z, const Vector& th) {
    ProxResult r = l1_prox(z, th[0] / lipschitz);
    for (auto& e : r.jacobian) e.b /= lipschitz;
    return r;
  };

  const LassoSolution sol = solve_lasso(a, b, theta);
  ScenarioInstance inst;
  inst.name = "lasso";
  inst.data = a;
  inst.response = b;
  inst.theta = scalar(theta);
  inst.problem = fb_problem(spec, p, 1, [p](const Vector&) { return Vector(Vector::Zero(p)); });
  inst.solution = sol.x;
  inst.solution_jacobian = sol.derivative;
  inst.solve = [a, b, warm = sol.x](const Vector& th) { return solve_lasso(a, b, th[0], warm).x; };
  inst.estimate = identity_estimate;
  inst.qualified = sol.qualified;
  return inst;
}

ScenarioInstance make_lasso(int n, int p, double ratio, std::uint64_t seed) {
  if (n < 1 || p < 1) throw Error(ErrorKind::InvalidArgument, "lasso dimensions must be >= 1");
  if (!(ratio > 0.0)) throw Error(ErrorKind::InvalidArgument, "lasso ratio must be positive");
  ScenarioInstance inst;
  for (int attempt = 0; attempt <= kMaxLassoRedraws; ++attempt) {
    const std::uint64_t s = attempt == 0 ? seed : stream_seed(seed, 1000003ULL + attempt);
    Rng rng(s);
    const Matrix a = rng.normal_matrix(n, p);
    const Vector b = rng.normal_vector(n);
    const double theta = ratio * (a.transpose() * b).cwiseAbs().maxCoeff();
    inst = make_lasso(a, b, theta);
    inst.seed = s;
    if (inst.qualified) {
      inst.redraws = attempt;
      return inst;
    }
  }
  std::ostringstream os;
  os << "lasso qualification failed on " << kMaxLassoRedraws + 1 << " draws (seed " << seed
     << ")";
  throw Error(ErrorKind::InnerSolve, os.str());
}

namespace {

// vec(V M Vᵀ) = (V ⊗ V) vec(M) for column-major vec.
Matrix kron_self(const Matrix& v) {
  const auto n = v.rows();
  Matrix w(n * n, n * n);
  for (Eigen::Index b = 0; b < n; ++b) {
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) w(i + n * j, a + n * b) = v(i, a) * v(j, b);
      }
    }
  }
  return w;
}

Matrix unvec(const Vector& v, Eigen::Index n) { return Eigen::Map<const Matrix>(v.data(), n, n); }
Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

constexpr double kSicsAlpha = 1.0;

}  // namespace

ScenarioInstance make_sics(const Matrix& c, double theta) {
  if (c.rows() != c.cols() || c.rows() < 1) {
    throw Error(ErrorKind::InvalidArgument, "sics needs a square covariance");
  }
  if (!(theta > 0.0)) throw Error(ErrorKind::InvalidArgument, "sics needs theta > 0");
  const auto n = c.rows();
  const double alpha = kSicsAlpha;

  SplittingSpec spec;
  spec.alpha = alpha;
  spec.prox_g = [alpha](const Vector& y, const Vector& th) {
    ProxResult r = l1_prox(y, alpha * th[0]);
    for (auto& e : r.jacobian) e.b *= alpha;
    return r;
  };
  spec.prox_f = [c, n, alpha](const Vector& z, const Vector&) {
    const Matrix zm = unvec(z, n);
    const Matrix s = 0.5 * ((zm - alpha * c) + (zm - alpha * c).transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
    if (eig.info() != Eigen::Success) {
      throw Error(ErrorKind::Decomposition, "symmetric eigendecomposition failed");
    }
    const Vector& d = eig.eigenvalues();
    const Matrix& v = eig.eigenvectors();
    Vector hd(n);
    Vector dhd(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double root = std::sqrt(d[i] * d[i] + 4.0 * alpha);
      hd[i] = 0.5 * (d[i] + root);
      dhd[i] = 0.5 * (1.0 + d[i] / root);
    }
    Vector gamma(n * n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double scale = std::max({1.0, std::abs(d[i]), std::abs(d[j])});
        gamma[i + n * j] = std::abs(d[i] - d[j]) < 1e-9 * scale
                               ? 0.5 * (dhd[i] + dhd[j])
                               : (hd[i] - hd[j]) / (d[i] - d[j]);
      }
    }
    const Matrix w = kron_self(v);
    ProxResult out;
    out.value = vec(v * hd.asDiagonal() * v.transpose());
    out.jacobian.push_back({w * gamma.asDiagonal() * w.transpose(), Matrix::Zero(n * n, 1)});
    return out;
  };

  ScenarioInstance inst;
  inst.name = "sics";
  inst.data = c;
  inst.theta = scalar(theta);
  inst.problem = dr_problem(spec, n * n, 1, [n](const Vector&) {
    return vec(Matrix::Identity(n, n));
  });
  const FixedPointProblem prob = inst.problem;
  inst.solve = [prob](const Vector& th) { return run_to_convergence(prob, th, 2000000, kSolveTol); };
  inst.solution = inst.solve(inst.theta);
  inst.estimate = [alpha](const Vector& y, const Vector& th) {
    return Vector(y.unaryExpr([t = alpha * th[0]](double v) { return soft_threshold_value(v, t); }));
  };
  return inst;
}

ScenarioInstance make_sics(int n, double theta, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "sics dimension must be >= 1");
  Rng rng(seed);
  const Matrix v = rng.normal_matrix(n, n);
  const Matrix c = v.transpose() * v + 1e-3 * Matrix::Identity(n, n);
  ScenarioInstance inst = make_sics(c, theta);
  inst.seed = seed;
  return inst;
}

ScenarioInstance make_trend_filter(const Vector& observations, double lambda) {
  const auto p = observations.size();
  if (p < 4) throw Error(ErrorKind::InvalidArgument, "trend filtering needs p >= 4");
  const TrendFilterAdmm admm(p, lambda, kTrendFilterPenalty);
  ScenarioInstance inst;
  inst.name = "trend";
  inst.fixed_weight = lambda;
  inst.theta = observations;
  inst.problem = admm.dual_dr_problem();
  const FixedPointProblem prob = inst.problem;
  inst.solve = [prob](const Vector& th) { return run_to_convergence(prob, th, 2000000, kSolveTol); };
  inst.solution = inst.solve(inst.theta);
  inst.estimate = [admm](const Vector& y, const Vector& th) { return admm.primal(y, th); };
  return inst;
}

ScenarioInstance make_trend_filter(int p, double lambda, std::uint64_t seed) {
  Rng rng(seed);
  ScenarioInstance inst = make_trend_filter(rng.normal_vector(p), lambda);
  inst.seed = seed;
  return inst;
}

ProxResult hb_gradient(const Vector& x, const Vector&) {
  static const SelectionFunction selection = hb_gradient_selection();
  ProxResult out;
  out.value = selection(x);
  for (Matrix& h : selection_jacobian(selection, x)) {
    out.jacobian.push_back({std::move(h), Matrix::Zero(1, 1)});
  }
  return out;
}

MatrixPacket strict_inclusion_packet() {
  const Matrix ones = Matrix::Ones(2, 1);
  Matrix a1 = Matrix::Zero(2, 2);
  Matrix a2 = Matrix::Zero(2, 2);
  a1.diagonal() << 0.5, 0.25;
  a2.diagonal() << 0.25, 0.5;
  return MatrixPacket({{a1, ones}, {a2, ones}}, 0.5);
}

Matrix hb_matrix_m1() {
  Matrix m(2, 2);
  m << 1.5, -0.75, 1.0, 0.0;
  return m;
}

Matrix hb_matrix_m2() {
  Matrix m(2, 2);
  m << 0.75, -0.75, 1.0, 0.0;
  return m;
}

namespace {

// f1 for two steps, then f2 for two steps. f1 is the x²/2 branch (vertex 0
// at the kink), f2 the x²/8 branch (vertex 1); away from the kink there is a
// single vertex.
std::size_t hb_schedule(int k, const JacobianSet& elements) {
  const std::size_t wanted = (k % 4) < 2 ? 0 : 1;
  return wanted < elements.size() ? wanted : 0;
}

constexpr double kHbAlpha = 1.0;
constexpr double kHbBeta = 0.75;

}  // namespace

ScenarioInstance make_hb_counterexample() {
  ScenarioInstance inst;
  inst.name = "heavy_ball";
  inst.theta = scalar(0.0);
  FixedPointProblem& prob = inst.problem;
  prob.state_dim = 2;
  prob.param_dim = 1;
  prob.step = [](const Vector& xy, const Vector& th) {
    return heavy_ball_linearize(hb_gradient, xy, th, kHbAlpha, kHbBeta).next;
  };
  prob.jacobian = [](const Vector& xy, const Vector& th) {
    return heavy_ball_linearize(hb_gradient, xy, th, kHbAlpha, kHbBeta).elements;
  };
  prob.select = hb_schedule;
  prob.init = [](const Vector& th) { return Vector(Vector::Constant(2, th[0])); };
  prob.init_jacobian = [](const Vector&) { return Matrix(Matrix::Ones(2, 1)); };
  inst.solution = Vector::Zero(2);
  inst.solve = [](const Vector&) { return Vector(Vector::Zero(2)); };
  inst.estimate = [](const Vector& xy, const Vector&) { return Vector(xy.head(1)); };
  return inst;
}

ScenarioInstance make_gd_counterexample() {
  ScenarioInstance inst;
  inst.name = "heavy_ball_gd";
  inst.theta = scalar(0.0);
  FixedPointProblem& prob = inst.problem;
  prob.state_dim = 1;
  prob.param_dim = 1;
  prob.step = [](const Vector& x, const Vector& th) {
    return gradient_descent_linearize(hb_gradient, x, th, kHbAlpha).next;
  };
  prob.jacobian = [](const Vector& x, const Vector& th) {
    return gradient_descent_linearize(hb_gradient, x, th, kHbAlpha).elements;
  };
  prob.select = hb_schedule;
  prob.init = [](const Vector& th) { return Vector(th); };
  prob.init_jacobian = [](const Vector&) { return Matrix(Matrix::Ones(1, 1)); };
  inst.solution = Vector::Zero(1);
  inst.solve = [](const Vector&) { return Vector(Vector::Zero(1)); };
  inst.estimate = identity_estimate;
  inst.rate = 0.75;
  return inst;
}

}  // namespace nspiggy
