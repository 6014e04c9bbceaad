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

#include "nspiggy/conservative.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nspiggy/error.hpp"
#include "nspiggy/matrix_sets.hpp"
#include "nspiggy/rng.hpp"

namespace nspiggy {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void require_symmetric(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::DimensionMismatch, std::string(name) + " must be square");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(ErrorKind::InvalidArgument, std::string(name) + " must be symmetric");
  }
}

Eigen::SelfAdjointEigenSolver<Matrix> eigen_symmetric(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::Decomposition, "symmetric eigendecomposition failed");
  }
  return solver;
}

}  // namespace

double soft_threshold_value(double x, double tau) {
  return sign(x) * std::max(std::abs(x) - tau, 0.0);
}

SoftThresholdResult soft_threshold(double x, double tau) {
  if (!(tau >= 0.0)) throw Error(ErrorKind::InvalidArgument, "threshold must be nonnegative");
  SoftThresholdResult out;
  out.value = soft_threshold_value(x, tau);
  const double excess = std::abs(x) - tau;
  if (std::abs(excess) <= kActivationTol) {
    out.derivatives = {{0.0, 0.0}, {1.0, -sign(x)}};
  } else if (excess > 0.0) {
    out.derivatives = {{1.0, -sign(x)}};
  } else {
    out.derivatives = {{0.0, 0.0}};
  }
  return out;
}

ProxResult l1_prox(const Vector& x, double tau, std::size_t max_elements) {
  const auto p = x.size();
  ProxResult out;
  out.value.resize(p);
  Vector diag(p);
  Vector dtau(p);
  std::vector<std::pair<Eigen::Index, double>> kinks;
  for (Eigen::Index i = 0; i < p; ++i) {
    const SoftThresholdResult st = soft_threshold(x[i], tau);
    out.value[i] = st.value;
    diag[i] = st.derivatives.front().dx;
    dtau[i] = st.derivatives.front().dtau;
    if (st.derivatives.size() > 1) kinks.emplace_back(i, st.derivatives[1].dtau);
  }
  if (kinks.size() >= 63 || (std::size_t{1} << kinks.size()) > max_elements) {
    std::ostringstream os;
    os << "set explosion: " << kinks.size() << " kinked coordinates in l1 prox";
    throw Error(ErrorKind::SetExplosion, os.str());
  }
  const std::size_t count = std::size_t{1} << kinks.size();
  out.jacobian.reserve(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    Vector d = diag;
    Vector t = dtau;
    // Lowest kinked coordinate varies slowest.
    for (std::size_t k = 0; k < kinks.size(); ++k) {
      if (mask & (std::size_t{1} << (kinks.size() - 1 - k))) {
        d[kinks[k].first] = 1.0;
        t[kinks[k].first] = kinks[k].second;
      }
    }
    out.jacobian.push_back({d.asDiagonal().toDenseMatrix(), t});
  }
  return out;
}

ProxResult ridge_prox(const Vector& x, double alpha, double theta) {
  if (!(alpha > 0.0) || !(theta > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "ridge prox needs positive alpha and theta");
  }
  const double s = 1.0 + 2.0 * alpha * theta;
  ProxResult out;
  out.value = x / s;
  out.jacobian.push_back({Matrix::Identity(x.size(), x.size()) / s,
                          Matrix(-2.0 * alpha * x / (s * s))});
  return out;
}

namespace {

double logdet_root(double d, double alpha) { return 0.5 * (d + std::sqrt(d * d + 4.0 * alpha)); }

double logdet_root_derivative(double d, double alpha) {
  return 0.5 * (1.0 + d / std::sqrt(d * d + 4.0 * alpha));
}

}  // namespace

Matrix logdet_prox(const Matrix& x, double alpha, const Matrix& c) {
  if (!(alpha > 0.0)) throw Error(ErrorKind::InvalidArgument, "alpha must be positive");
  require_symmetric(x, "X");
  require_symmetric(c, "C");
  if (x.rows() != c.rows()) throw Error(ErrorKind::DimensionMismatch, "X and C differ in size");
  const Matrix s = 0.5 * ((x - alpha * c) + (x - alpha * c).transpose());
  const auto eig = eigen_symmetric(s);
  const Vector d = eig.eigenvalues().unaryExpr([alpha](double t) { return logdet_root(t, alpha); });
  const Matrix& v = eig.eigenvectors();
  return v * d.asDiagonal() * v.transpose();
}

Matrix logdet_prox_jvp(const Matrix& x, double alpha, const Matrix& c, const Matrix& e) {
  if (!(alpha > 0.0)) throw Error(ErrorKind::InvalidArgument, "alpha must be positive");
  const Matrix s = 0.5 * ((x - alpha * c) + (x - alpha * c).transpose());
  return spectral_jvp(
      s, e, [alpha](double t) { return logdet_root(t, alpha); },
      [alpha](double t) { return logdet_root_derivative(t, alpha); });
}

Matrix spectral_jvp(const Matrix& s, const Matrix& e, const std::function<double(double)>& h,
                    const std::function<double(double)>& dh) {
  if (s.rows() != s.cols() || e.rows() != s.rows() || e.cols() != s.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "spectral_jvp needs square matrices of equal size");
  }
  const auto eig = eigen_symmetric(0.5 * (s + s.transpose()));
  const Vector& d = eig.eigenvalues();
  const Matrix& v = eig.eigenvectors();
  const auto n = d.size();
  Vector hd(n);
  Vector dhd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    hd[i] = h(d[i]);
    dhd[i] = dh(d[i]);
  }
  Matrix gamma(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double scale = std::max({1.0, std::abs(d[i]), std::abs(d[j])});
      if (std::abs(d[i] - d[j]) < 1e-9 * scale) {
        gamma(i, j) = 0.5 * (dhd[i] + dhd[j]);
      } else {
        gamma(i, j) = (hd[i] - hd[j]) / (d[i] - d[j]);
      }
    }
  }
  const Matrix inner = v.transpose() * e * v;
  return v * gamma.cwiseProduct(inner) * v.transpose();
}

SelectionFunction::SelectionFunction(std::vector<SelectionBranch> branches,
                                     std::function<std::size_t(const Vector&)> selector,
                                     double lipschitz, double activation_tol)
    : branches_(std::move(branches)),
      selector_(std::move(selector)),
      lipschitz_(lipschitz),
      activation_tol_(activation_tol) {
  if (branches_.empty()) throw Error(ErrorKind::EmptySet, "selection needs at least one branch");
  if (!(lipschitz_ >= 0.0) || !(activation_tol_ >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "selection constants must be nonnegative");
  }
}

std::size_t SelectionFunction::select(const Vector& x) const {
  const std::size_t i = selector_(x);
  if (i >= branches_.size()) throw Error(ErrorKind::InvalidArgument, "selector out of range");
  return i;
}

Vector SelectionFunction::operator()(const Vector& x) const {
  return branches_[select(x)].value(x);
}

std::vector<std::size_t> SelectionFunction::active_set(const Vector& x) const {
  const Vector fx = (*this)(x);
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    if ((branches_[i].value(x) - fx).norm() <= activation_tol_) active.push_back(i);
  }
  return active;
}

std::vector<Matrix> selection_jacobian(const SelectionFunction& f, const Vector& x) {
  const auto active = f.active_set(x);
  if (active.empty()) {
    throw Error(ErrorKind::EmptySet, "selection has an empty active set");
  }
  std::vector<Matrix> out;
  out.reserve(active.size());
  for (std::size_t i : active) out.push_back(f.branches()[i].jacobian(x));
  return out;
}

bool selection_lipschitz_check(const SelectionFunction& f, const Vector& x0, double radius,
                               int n_probes, std::uint64_t seed) {
  if (!(radius >= 0.0)) throw Error(ErrorKind::InvalidArgument, "radius must be nonnegative");
  const MatrixSet reference(selection_jacobian(f, x0));
  Rng rng(seed);
  for (int probe = 0; probe <= n_probes; ++probe) {
    Vector x = x0;
    if (probe > 0) {
      Vector dir = rng.normal_vector(x0.size());
      const double n = dir.norm();
      if (n > 0.0) dir /= n;
      const double r =
          radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(std::max<Eigen::Index>(1, x0.size())));
      x += r * dir;
    }
    const MatrixSet here(selection_jacobian(f, x));
    if (gap(here, reference) > f.lipschitz() * (x - x0).norm() + 1e-9) return false;
  }
  return true;
}

SelectionFunction abs_selection() {
  std::vector<SelectionBranch> branches{
      {[](const Vector& x) { return Vector(x); },
       [](const Vector&) { return Matrix(Matrix::Identity(1, 1)); }},
      {[](const Vector& x) { return Vector(-x); },
       [](const Vector&) { return Matrix(-Matrix::Identity(1, 1)); }}};
  return SelectionFunction(std::move(branches),
                           [](const Vector& x) -> std::size_t { return x[0] >= 0.0 ? 0 : 1; }, 0.0);
}

SelectionFunction hb_gradient_selection() {
  std::vector<SelectionBranch> branches{
      {[](const Vector& x) { return Vector(x); },
       [](const Vector&) { return Matrix(Matrix::Identity(1, 1)); }},
      {[](const Vector& x) { return Vector(x / 4.0); },
       [](const Vector&) { return Matrix(Matrix::Identity(1, 1) / 4.0); }}};
  return SelectionFunction(std::move(branches),
                           [](const Vector& x) -> std::size_t { return x[0] >= 0.0 ? 0 : 1; }, 0.0);
}

}  // namespace nspiggy
