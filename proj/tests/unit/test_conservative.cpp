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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "nspiggy/conservative.hpp"
#include "nspiggy/error.hpp"
#include "nspiggy/rng.hpp"
#include "test_support.hpp"

using namespace nspiggy;
using namespace nspiggy::testing;

namespace {

Matrix random_symmetric(Rng& rng, Eigen::Index n) {
  const Matrix g = rng.normal_matrix(n, n);
  return 0.5 * (g + g.transpose());
}

// Damped Newton on tr(CZ) − log det Z + ‖Z − X‖²/(2α), vectorized Hessian.
Matrix newton_logdet_prox(const Matrix& x, double alpha, const Matrix& c) {
  const auto n = x.rows();
  Matrix z = Matrix::Identity(n, n);
  auto objective = [&](const Matrix& m) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return (c * m).trace() - logdet + (m - x).squaredNorm() / (2 * alpha);
  };
  for (int it = 0; it < 100; ++it) {
    const Matrix zinv = z.inverse();
    const Matrix grad = c - zinv + (z - x) / alpha;
    if (grad.norm() < 1e-13) break;
    Matrix hess = Eigen::kroneckerProduct(zinv, zinv).eval();
    hess.diagonal().array() += 1.0 / alpha;
    const Vector step = hess.ldlt().solve(-grad.reshaped());
    Matrix dz = step.reshaped(n, n);
    dz = 0.5 * (dz + dz.transpose()).eval();
    double t = 1.0;
    const double f0 = objective(z);
    while (objective(z + t * dz) > f0 && t > 1e-12) t *= 0.5;
    z += t * dz;
  }
  return z;
}

}  // namespace

TEST_CASE("soft threshold values and derivative vertices") {
  auto r = soft_threshold(2.0, 1.0);
  CHECK(r.value == 1.0);
  REQUIRE(r.derivatives.size() == 1);
  CHECK(r.derivatives[0].dx == 1.0);
  CHECK(r.derivatives[0].dtau == -1.0);

  r = soft_threshold(0.5, 1.0);
  CHECK(r.value == 0.0);
  REQUIRE(r.derivatives.size() == 1);
  CHECK(r.derivatives[0].dx == 0.0);
  CHECK(r.derivatives[0].dtau == 0.0);

  r = soft_threshold(1.0, 1.0);
  CHECK(r.value == 0.0);
  REQUIRE(r.derivatives.size() == 2);
  CHECK(r.derivatives[0].dx == 0.0);
  CHECK(r.derivatives[0].dtau == 0.0);
  CHECK(r.derivatives[1].dx == 1.0);
  CHECK(r.derivatives[1].dtau == -1.0);

  r = soft_threshold(-3.0, 1.0);
  CHECK(r.value == -2.0);
  CHECK(r.derivatives[0].dtau == 1.0);

  CHECK(soft_threshold_value(-0.2, 0.0) == -0.2);
  CHECK_THROWS_AS(soft_threshold(1.0, -0.1), Error);
}

TEST_CASE("l1 prox is the coordinatewise soft threshold") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = 2.0 * rng.normal_vector(6);
    const double tau = rng.uniform(0.1, 1.5);
    const auto prox = l1_prox(x, tau);
    REQUIRE(prox.jacobian.size() == 1);
    const auto& e = prox.jacobian.front();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const auto st = soft_threshold(x[i], tau);
      CHECK(prox.value[i] == st.value);
      CHECK(e.a(i, i) == st.derivatives[0].dx);
      CHECK(e.b(i, 0) == st.derivatives[0].dtau);
      CHECK((e.a(i, i) == 0.0 || e.a(i, i) == 1.0));
    }
    Matrix off = e.a;
    off.diagonal().setZero();
    CHECK(off.norm() == 0.0);
  }
}

TEST_CASE("l1 prox enumerates kink vertices") {
  const auto prox = l1_prox(vec({1.0, 0.2, -1.0}), 1.0);
  REQUIRE(prox.jacobian.size() == 4);
  // first kinked coordinate varies slowest, dead zone first
  CHECK(prox.jacobian[0].a.diagonal() == vec({0, 0, 0}));
  CHECK(prox.jacobian[1].a.diagonal() == vec({0, 0, 1}));
  CHECK(prox.jacobian[2].a.diagonal() == vec({1, 0, 0}));
  CHECK(prox.jacobian[3].a.diagonal() == vec({1, 0, 1}));
  CHECK(prox.jacobian[3].b.col(0) == vec({-1, 0, 1}));
  CHECK_THROWS_AS(l1_prox(Vector::Ones(13), 1.0), Error);
}

TEST_CASE("ridge prox closed form") {
  const auto r = ridge_prox(vec({1.0, 0.0}), 1.0, 0.5);
  CHECK(r.value == vec({0.5, 0.0}));
  REQUIRE(r.jacobian.size() == 1);
  CHECK(r.jacobian[0].a.isApprox(0.5 * Matrix::Identity(2, 2)));
  CHECK(r.jacobian[0].b.col(0) == vec({-0.5, 0.0}));

  const auto near_zero = ridge_prox(vec({3.0, -1.0}), 1.0, 1e-14);
  CHECK((near_zero.value - vec({3.0, -1.0})).norm() < 1e-12);
  CHECK((near_zero.jacobian[0].a - Matrix::Identity(2, 2)).norm() < 1e-12);

  CHECK_THROWS_AS(ridge_prox(vec({1.0}), 0.0, 1.0), Error);
  CHECK_THROWS_AS(ridge_prox(vec({1.0}), 1.0, -1.0), Error);

  Rng rng(2);
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    const Vector x = rng.normal_vector(4);
    const double alpha = rng.uniform(0.1, 2.0);
    const double theta = rng.uniform(0.1, 2.0);
    const auto e = ridge_prox(x, alpha, theta).jacobian[0];
    Matrix fd_a(4, 4);
    for (int j = 0; j < 4; ++j) {
      Vector xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      fd_a.col(j) = (ridge_prox(xp, alpha, theta).value - ridge_prox(xm, alpha, theta).value) / (2 * h);
    }
    const Vector fd_b =
        (ridge_prox(x, alpha, theta + h).value - ridge_prox(x, alpha, theta - h).value) / (2 * h);
    CHECK((fd_a - e.a).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((fd_b - e.b.col(0)).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("prox maps are nonexpansive with bounded a-blocks") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Vector x = rng.normal_vector(5), y = rng.normal_vector(5);
    const double tau = rng.uniform(0.0, 1.0);
    const auto px = l1_prox(x, tau), py = l1_prox(y, tau);
    CHECK((px.value - py.value).norm() <= (1 + 1e-9) * (x - y).norm());
    for (const auto& e : px.jacobian) CHECK(operator_norm(e.a) <= 1 + 1e-10);

    const auto rx = ridge_prox(x, 0.7, tau + 0.1), ry = ridge_prox(y, 0.7, tau + 0.1);
    CHECK((rx.value - ry.value).norm() <= (1 + 1e-9) * (x - y).norm());
    CHECK(operator_norm(rx.jacobian[0].a) <= 1 + 1e-10);

    const Matrix c = random_symmetric(rng, 3);
    const Matrix a = random_symmetric(rng, 3), b = random_symmetric(rng, 3);
    const Matrix la = logdet_prox(a, 0.5, c), lb = logdet_prox(b, 0.5, c);
    CHECK((la - lb).norm() <= (1 + 1e-9) * (a - b).norm());
  }
}

TEST_CASE("logdet prox") {
  CHECK(logdet_prox(Matrix::Zero(1, 1), 1.0, Matrix::Zero(1, 1))(0, 0) == doctest::Approx(1.0));

  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = random_symmetric(rng, 5);
    const Matrix c = random_symmetric(rng, 5);
    const double alpha = rng.uniform(0.2, 2.0);
    const Matrix z = logdet_prox(x, alpha, c);
    CHECK((z - z.transpose()).norm() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(z);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
    const Matrix residual = z + alpha * (c - z.inverse()) - x;
    CHECK(residual.norm() < 1e-10);
    CHECK((z - newton_logdet_prox(x, alpha, c)).norm() < 1e-8);
  }
}

TEST_CASE("spectral jvp") {
  Rng rng(5);
  auto id = [](double t) { return t; };
  auto one = [](double) { return 1.0; };
  auto sq = [](double t) { return t * t; };
  auto two_t = [](double t) { return 2 * t; };

  const Matrix s = random_symmetric(rng, 4);
  const Matrix e = random_symmetric(rng, 4);
  CHECK((spectral_jvp(s, e, id, one) - e).norm() < 1e-12);

  const Matrix diag = vec({1.0, -2.0, 0.5, 3.0}).asDiagonal();
  CHECK((spectral_jvp(diag, e, sq, two_t) - (diag * e + e * diag)).norm() < 1e-12);
  CHECK((spectral_jvp(s, e, sq, two_t) - (s * e + e * s)).norm() < 1e-10);

  // repeated eigenvalues take the derivative branch
  const Matrix repeated = vec({2.0, 2.0, -1.0}).asDiagonal();
  const Matrix e3 = random_symmetric(rng, 3);
  CHECK((spectral_jvp(repeated, e3, sq, two_t) - (repeated * e3 + e3 * repeated)).norm() < 1e-10);

  const double alpha = 0.8;
  auto h = [alpha](double t) { return 0.5 * (t + std::sqrt(t * t + 4 * alpha)); };
  auto dh = [alpha](double t) { return 0.5 * (1 + t / std::sqrt(t * t + 4 * alpha)); };
  auto apply_h = [&](const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
    return Matrix(eig.eigenvectors() * eig.eigenvalues().unaryExpr(h).asDiagonal() *
                  eig.eigenvectors().transpose());
  };
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix sr = random_symmetric(rng, 5), er = random_symmetric(rng, 5);
    const double eps = 1e-5;
    const Matrix fd = (apply_h(sr + eps * er) - apply_h(sr - eps * er)) / (2 * eps);
    CHECK((spectral_jvp(sr, er, h, dh) - fd).cwiseAbs().maxCoeff() < 1e-6);

    const Matrix c = random_symmetric(rng, 5);
    const Matrix fd_prox =
        (logdet_prox(sr + eps * er, alpha, c) - logdet_prox(sr - eps * er, alpha, c)) / (2 * eps);
    CHECK((logdet_prox_jvp(sr, alpha, c, er) - fd_prox).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("selection jacobian examples") {
  const auto abs_f = abs_selection();
  auto j = selection_jacobian(abs_f, vec({2.0}));
  REQUIRE(j.size() == 1);
  CHECK(j[0](0, 0) == 1.0);
  j = selection_jacobian(abs_f, vec({0.0}));
  REQUIRE(j.size() == 2);
  CHECK(j[0](0, 0) == 1.0);
  CHECK(j[1](0, 0) == -1.0);
  CHECK(abs_f(vec({-3.0}))[0] == 3.0);

  const auto hb = hb_gradient_selection();
  j = selection_jacobian(hb, vec({0.0}));
  REQUIRE(j.size() == 2);
  CHECK(j[0](0, 0) == 1.0);
  CHECK(j[1](0, 0) == 0.25);
  CHECK(hb(vec({-4.0}))[0] == -1.0);
  CHECK(hb.active_set(vec({1.0})) == std::vector<std::size_t>{0});
}

TEST_CASE("selected branch is always active and reproduces the value") {
  Rng rng(6);
  for (const auto& f : {abs_selection(), hb_gradient_selection()}) {
    for (int trial = 0; trial < 100; ++trial) {
      const Vector x = trial % 10 == 0 ? vec({0.0}) : rng.normal_vector(1);
      const auto sel = f.select(x);
      const auto act = f.active_set(x);
      CHECK(std::find(act.begin(), act.end(), sel) != act.end());
      CHECK((f(x) - f.branches()[sel].value(x)).norm() <= 1e-12);
    }
  }
}

TEST_CASE("selection jacobians are Lipschitz-like") {
  // affine branches
  SelectionFunction affine(
      {{[](const Vector& x) { return Vector(2.0 * x); },
        [](const Vector& x) { return Matrix(2.0 * Matrix::Identity(x.size(), x.size())); }}},
      [](const Vector&) { return std::size_t{0}; }, 0.0);
  CHECK(selection_lipschitz_check(affine, vec({1.0, -1.0}), 3.0, 50, 1));
  CHECK(selection_lipschitz_check(abs_selection(), vec({0.0}), 10.0, 50, 2));
  CHECK(selection_lipschitz_check(hb_gradient_selection(), vec({0.0}), 1.0, 50, 3));

  // x² continued by its tangent line 2x − 1 beyond x = 1
  const std::vector<SelectionBranch> pieces{
      {[](const Vector& x) { return Vector(x.cwiseProduct(x)); },
       [](const Vector& x) { return Matrix::Constant(1, 1, 2.0 * x[0]); }},
      {[](const Vector& x) { return Vector(2.0 * x.array() - 1.0); },
       [](const Vector&) { return Matrix::Constant(1, 1, 2.0); }}};
  auto pick = [](const Vector& x) { return x[0] >= 1.0 ? std::size_t{1} : std::size_t{0}; };
  const SelectionFunction pq(pieces, pick, 2.0);
  CHECK(selection_jacobian(pq, vec({1.0})).size() == 2);
  CHECK(selection_lipschitz_check(pq, vec({0.2}), 0.5, 100, 4));
  CHECK(selection_lipschitz_check(pq, vec({1.0}), 0.5, 100, 5));
  CHECK(selection_lipschitz_check(pq, vec({0.9}), 0.5, 100, 6));
  // a constant too small is detected
  const SelectionFunction flat(pieces, pick, 0.5);
  CHECK_FALSE(selection_lipschitz_check(flat, vec({0.2}), 0.5, 100, 7));
}
