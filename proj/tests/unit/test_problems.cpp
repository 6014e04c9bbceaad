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

#include <cmath>

#include "nspiggy/error.hpp"
#include "nspiggy/piggyback.hpp"
#include "nspiggy/problems.hpp"
#include "test_support.hpp"

using namespace nspiggy;
using namespace nspiggy::testing;

namespace {

bool same_instance(const ScenarioInstance& a, const ScenarioInstance& b) {
  return a.seed == b.seed && a.data == b.data && a.response == b.response && a.theta == b.theta &&
         a.solution == b.solution && a.solution_jacobian == b.solution_jacobian;
}

}  // namespace

TEST_CASE("rng stream split and determinism") {
  CHECK(stream_seed(5, 0) == 5);
  CHECK(stream_seed(5, 1) == (5 ^ 0x9E3779B97F4A7C15ULL));
  Rng a(42), b(42);
  CHECK(a.normal_matrix(3, 4) == b.normal_matrix(3, 4));
  Rng c(43);
  CHECK(a.normal() != c.normal());
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    const int k = a.integer(-2, 3);
    CHECK((k >= -2 && k <= 3));
  }
}

TEST_CASE("ridge oracle") {
  const Matrix a = Matrix::Ones(1, 1);
  const Vector b = Vector::Ones(1);
  CHECK(ridge_solution(a, b, 0.5)[0] == doctest::Approx(0.5));
  CHECK(ridge_solution_derivative(a, b, 0.5)[0] == doctest::Approx(-0.5));
  CHECK(ridge_solution(a, b, 1e8).norm() < 1e-7);

  const auto inst = make_ridge(a, b, 0.5);
  const Vector x = run_iterates(inst.problem, inst.theta, 200).back();
  CHECK(std::abs(x[0] - 0.5) < 1e-12);

  // desk-scale default
  const auto desk = make_ridge(50, 30, 0.05, 1);
  const auto js = full_jacobian_sequence(desk.problem, desk.theta, 1500);
  CHECK((js.back() - desk.solution_jacobian).norm() < 1e-6);

  // optimality: Aᵀ(Ax − b) + 2θx = 0
  const Vector r = desk.data.transpose() * (desk.data * desk.solution - desk.response) +
                   2 * desk.theta[0] * desk.solution;
  CHECK(r.norm() < 1e-8);
  const Matrix fd = finite_difference_jacobian(desk.solve, desk.theta);
  CHECK((fd - desk.solution_jacobian).cwiseAbs().maxCoeff() < 1e-5);

  CHECK_THROWS_AS(make_ridge(0, 3, 0.1, 1), Error);
  CHECK_THROWS_AS(make_ridge(5, 3, -0.1, 1), Error);
}

TEST_CASE("lasso hand instance") {
  const Matrix a = Matrix::Identity(2, 2);
  const Vector b = vec({3.0, 1.0});
  const auto sol = solve_lasso(a, b, 2.0);
  CHECK((sol.x - vec({1.0, 0.0})).norm() < 1e-12);
  CHECK((sol.derivative - vec({-1.0, 0.0})).norm() < 1e-12);
  CHECK(sol.support == std::vector<Eigen::Index>{0});
  CHECK(sol.qualified);

  const auto inst = make_lasso(a, b, 2.0);
  const auto js = full_jacobian_sequence(inst.problem, inst.theta, 100);
  CHECK((js.back().col(0) - vec({-1.0, 0.0})).norm() < 1e-12);

  // at θ = 1 the second coordinate sits on the kink
  CHECK_FALSE(solve_lasso(a, b, 1.0).qualified);
}

TEST_CASE("lasso above the critical penalty") {
  const auto inst = make_lasso(10, 20, 1.5, 3);
  CHECK(inst.solution.norm() == 0.0);
  CHECK(inst.solution_jacobian.norm() == 0.0);
  Rng rng(4);
  const Matrix a = rng.normal_matrix(6, 9);
  const Vector b = rng.normal_vector(6);
  const double theta_max = (a.transpose() * b).cwiseAbs().maxCoeff();
  CHECK(solve_lasso(a, b, theta_max).x.norm() == 0.0);
}

TEST_CASE("lasso desk scale") {
  const auto inst = make_lasso(20, 50, 0.2, 1);
  REQUIRE(inst.qualified);
  const Matrix& a = inst.data;
  const Vector g = a.transpose() * (a * inst.solution - inst.response);
  const double theta = inst.theta[0];
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (inst.solution[i] != 0.0) {
      CHECK(std::abs(g[i] + theta * (inst.solution[i] > 0 ? 1.0 : -1.0)) < 1e-8);
    } else {
      CHECK(std::abs(g[i]) <= theta + 1e-8);
    }
  }
  const auto js = full_jacobian_sequence(inst.problem, inst.theta, 3000);
  CHECK((js.back() - inst.solution_jacobian).norm() < 1e-6);
  const Matrix fd = finite_difference_jacobian(inst.solve, inst.theta);
  CHECK((fd - inst.solution_jacobian).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("lasso redraw rule") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = make_lasso(8, 12, 0.3, seed);
    CHECK(inst.qualified);
    if (inst.redraws == 0) {
      CHECK(inst.seed == seed);
    } else {
      CHECK(inst.seed == stream_seed(seed, 1000003ULL + static_cast<std::uint64_t>(inst.redraws)));
    }
  }
}

TEST_CASE("sics in one dimension") {
  for (double c : {0.5, 2.0}) {
    for (double theta : {0.1, 0.7}) {
      const auto inst = make_sics(Matrix::Constant(1, 1, c), theta);
      const Vector x = inst.estimate(inst.solution, inst.theta);
      CHECK(x[0] == doctest::Approx(1.0 / (c + theta)).epsilon(1e-10));
      const Vector xd = jvp_forward(inst.problem, inst.theta, vec({1.0}), 400);
      const Vector xp = inst.estimate(inst.solve(vec({theta + 1e-6})), vec({theta + 1e-6}));
      const Vector xm = inst.estimate(inst.solve(vec({theta - 1e-6})), vec({theta - 1e-6}));
      CHECK((xp[0] - xm[0]) / 2e-6 == doctest::Approx(-1.0 / ((c + theta) * (c + theta))).epsilon(1e-5));
      // the state tangent maps to the estimate tangent through the prox
      const auto pr = l1_prox(inst.solution, theta);
      Vector est_dot = pr.jacobian[0].a * xd + pr.jacobian[0].b * 1.0;
      CHECK(est_dot[0] == doctest::Approx(-1.0 / ((c + theta) * (c + theta))).epsilon(1e-6));
    }
  }
}

TEST_CASE("sics desk scale") {
  const auto inst = make_sics(10, 0.1, 2);
  CHECK((inst.problem.step(inst.solution, inst.theta) - inst.solution).norm() < 1e-10);
  const Matrix x = inst.estimate(inst.solution, inst.theta).reshaped(10, 10);
  CHECK((x - x.transpose()).norm() < 1e-10);
  CHECK(x.llt().info() == Eigen::Success);
}

TEST_CASE("trend filtering limits") {
  Rng rng(5);
  const Vector theta = rng.normal_vector(8);
  const auto free_fit = make_trend_filter(theta, 0.0);
  CHECK((free_fit.estimate(free_fit.solution, free_fit.theta) - theta).norm() < 1e-8);

  const Vector obs = vec({1.0, 3.0, 2.0, 5.0});
  const auto flat = make_trend_filter(obs, 1e4);
  Matrix basis(4, 2);
  basis << 1, 1, 1, 2, 1, 3, 1, 4;
  const Vector affine = basis * basis.colPivHouseholderQr().solve(obs);
  CHECK((flat.estimate(flat.solution, flat.theta) - affine).norm() < 1e-8);

  const auto desk = make_trend_filter(40, 3.0, 1);
  CHECK((desk.problem.step(desk.solution, desk.theta) - desk.solution).norm() < 1e-10);
  CHECK_THROWS_AS(make_trend_filter(3, 1.0, 1), Error);
}

TEST_CASE("heavy-ball counterexample instance") {
  const auto inst = make_hb_counterexample();
  CHECK(inst.theta.size() == 1);
  CHECK(inst.theta[0] == 0.0);
  for (const auto& x : run_iterates(inst.problem, inst.theta, 40)) CHECK(x.norm() == 0.0);
  CHECK(inst.problem.initial_jacobian(inst.theta) == Matrix::Ones(2, 1));
  CHECK(kHbConstantTrajectoryDerivative == 0.0);
  CHECK(kHbSolutionMapDerivative == 1.0);

  // eight steps apply (M1 M1 M2 M2)² to (1, 1)ᵀ
  const Matrix period = hb_matrix_m1() * hb_matrix_m1() * hb_matrix_m2() * hb_matrix_m2();
  const Vector t8 = jvp_forward(inst.problem, inst.theta, vec({1.0}), 8);
  CHECK((t8 - period * period * Vector::Ones(2)).norm() < 1e-14);

  // asymptotic log growth per iteration
  const auto ts = jvp_forward_sequence(inst.problem, inst.theta, vec({1.0}), 400);
  const double slope = (std::log(ts[400].norm()) - std::log(ts[200].norm())) / 200.0;
  CHECK(slope == doctest::Approx(0.25 * std::log(9.0 / 8.0)).epsilon(1e-3));
  CHECK(ts[400].norm() / ts[392].norm() == doctest::Approx(81.0 / 64.0).epsilon(1e-6));

  const auto gd = make_gd_counterexample();
  const auto gs = jvp_forward_sequence(gd.problem, gd.theta, vec({1.0}), 400);
  CHECK(gs.back().norm() < 1.0 + 1e-12);
}

TEST_CASE("generation is a pure function of dims and seed") {
  CHECK(same_instance(make_ridge(7, 4, 0.1, 9), make_ridge(7, 4, 0.1, 9)));
  CHECK(same_instance(make_lasso(7, 9, 0.3, 9), make_lasso(7, 9, 0.3, 9)));
  CHECK(same_instance(make_sics(4, 0.1, 9), make_sics(4, 0.1, 9)));
  CHECK(same_instance(make_trend_filter(10, 1.0, 9), make_trend_filter(10, 1.0, 9)));
  CHECK_FALSE(same_instance(make_ridge(7, 4, 0.1, 9), make_ridge(7, 4, 0.1, 10)));
}
