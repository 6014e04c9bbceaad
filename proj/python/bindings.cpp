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

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <utility>

#include "nspiggy/cli.hpp"
#include "nspiggy/error.hpp"
#include "nspiggy/experiments.hpp"
#include "nspiggy/matrix_sets.hpp"
#include "nspiggy/piggyback.hpp"
#include "nspiggy/problems.hpp"
#include "nspiggy/rng.hpp"

namespace py = pybind11;
using namespace nspiggy;

namespace {

using ElementPair = std::pair<Matrix, Matrix>;

JacobianSet to_elements(const std::vector<ElementPair>& pairs) {
  JacobianSet out;
  out.reserve(pairs.size());
  for (const auto& [a, b] : pairs) out.push_back({a, b});
  return out;
}

std::vector<ElementPair> from_elements(const JacobianSet& elements) {
  std::vector<ElementPair> out;
  for (const auto& e : elements) out.emplace_back(e.a, e.b);
  return out;
}

py::tuple bounds(const DistanceBounds& d) { return py::make_tuple(d.lower, d.upper); }

ExperimentConfig to_config(const std::string& scenario, int reps, int iters, std::uint64_t seed,
                           const std::string& mode, std::vector<int> dims,
                           std::optional<double> weight, int threads) {
  ExperimentConfig cfg;
  cfg.scenario = parse_scenario(scenario);
  cfg.reps = reps;
  cfg.iters = iters;
  cfg.seed = seed;
  cfg.mode = parse_mode(mode);
  cfg.dims = std::move(dims);
  cfg.weight = weight;
  cfg.threads = threads;
  cfg.emit_csv = false;
  cfg.emit_svg = false;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Piggyback differentiation of nonsmooth fixed-point iterations";

  static py::exception<Error> error(m, "NspiggyError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  py::class_<MatrixPacket>(m, "MatrixPacket")
      .def(py::init([](const std::vector<ElementPair>& elements, double rho) {
             return MatrixPacket(to_elements(elements), rho);
           }),
           py::arg("elements"), py::arg("rho"))
      .def_static("certify",
                  [](const std::vector<ElementPair>& elements) {
                    return MatrixPacket::certify(to_elements(elements));
                  })
      .def_property_readonly("elements",
                             [](const MatrixPacket& p) { return from_elements(p.elements()); })
      .def_property_readonly("rho", &MatrixPacket::rho)
      .def("__len__", &MatrixPacket::size);

  m.def("hausdorff", [](const std::vector<Matrix>& x, const std::vector<Matrix>& y) {
    return hausdorff(MatrixSet(x), MatrixSet(y));
  });
  m.def("gap", [](const std::vector<Matrix>& x, const std::vector<Matrix>& y) {
    return gap(MatrixSet(x), MatrixSet(y));
  });
  m.def(
      "apply_packet",
      [](const MatrixPacket& p, const std::vector<Matrix>& x, double prune_tol) {
        return apply_packet(p, MatrixSet(x, prune_tol)).points();
      },
      py::arg("packet"), py::arg("points"), py::arg("prune_tol") = 0.0);
  m.def(
      "fixed_set",
      [](const MatrixPacket& p, const std::vector<Matrix>& x0, double tol,
         std::optional<double> prune_tol, std::size_t max_points) {
        FixedSetOptions options;
        options.prune_tol = prune_tol;
        options.max_points = max_points;
        return fixed_set(p, MatrixSet(x0), tol, options).set.points();
      },
      py::arg("packet"), py::arg("x0"), py::arg("tol"), py::arg("prune_tol") = py::none(),
      py::arg("max_points") = 200000);
  m.def("implicit_jacobian",
        [](const MatrixPacket& p) { return implicit_jacobian(p).points(); });
  m.def("distance_to_fixed_set", [](const MatrixPacket& p, const Matrix& q, double tol) {
    return bounds(distance_to_fixed_set(p, q, tol));
  });
  m.def("hausdorff_to_fixed_set",
        [](const MatrixPacket& p, const std::vector<Matrix>& x, double tol) {
          return bounds(hausdorff_to_fixed_set(p, MatrixSet(x), tol));
        });
  m.def(
      "verify_rate",
      [](const MatrixPacket& p, const std::vector<Matrix>& x0, int k_max, double prune_tol) {
        std::vector<std::tuple<int, double, double>> out;
        for (const auto& r : verify_rate(p, MatrixSet(x0, prune_tol), k_max)) {
          out.emplace_back(r.k, r.dist, r.bound);
        }
        return out;
      },
      py::arg("packet"), py::arg("x0"), py::arg("k_max"), py::arg("prune_tol") = 1e-3);

  py::class_<ScenarioInstance>(m, "Scenario")
      .def_readonly("name", &ScenarioInstance::name)
      .def_readonly("seed", &ScenarioInstance::seed)
      .def_readonly("theta", &ScenarioInstance::theta)
      .def_readonly("solution", &ScenarioInstance::solution)
      .def_readonly("solution_jacobian", &ScenarioInstance::solution_jacobian)
      .def_readonly("rate", &ScenarioInstance::rate)
      .def_readonly("qualified", &ScenarioInstance::qualified)
      .def("solve", [](const ScenarioInstance& s, const Vector& theta) { return s.solve(theta); })
      .def("iterates",
           [](const ScenarioInstance& s, int k) { return run_iterates(s.problem, s.theta, k); })
      .def("jacobians",
           [](const ScenarioInstance& s, int k) {
             return full_jacobian_sequence(s.problem, s.theta, k);
           })
      .def("jvp",
           [](const ScenarioInstance& s, const Vector& theta_dot, int k) {
             return jvp_forward(s.problem, s.theta, theta_dot, k);
           })
      .def("vjp", [](const ScenarioInstance& s, const Vector& wbar, int k) {
        return vjp_reverse(s.problem, s.theta, wbar, k);
      });

  m.def("make_ridge", py::overload_cast<int, int, double, std::uint64_t>(&make_ridge),
        py::arg("n") = 50, py::arg("p") = 30, py::arg("theta") = 0.05, py::arg("seed") = 0);
  m.def("make_lasso", py::overload_cast<int, int, double, std::uint64_t>(&make_lasso),
        py::arg("n") = 20, py::arg("p") = 50, py::arg("ratio") = 0.2, py::arg("seed") = 0);
  m.def("make_sics", py::overload_cast<int, double, std::uint64_t>(&make_sics),
        py::arg("n") = 10, py::arg("theta") = 0.1, py::arg("seed") = 0);
  m.def("make_trend_filter", py::overload_cast<int, double, std::uint64_t>(&make_trend_filter),
        py::arg("p") = 40, py::arg("lam") = 3.0, py::arg("seed") = 0);
  m.def("make_hb_counterexample", &make_hb_counterexample);
  m.def("strict_inclusion_packet", &strict_inclusion_packet);
  m.def("stream_seed", &stream_seed);

  m.def(
      "run_experiment",
      [](const std::string& scenario, int reps, int iters, std::uint64_t seed,
         const std::string& mode, std::vector<int> dims, std::optional<double> weight,
         int threads) {
        const auto result =
            run_experiment(to_config(scenario, reps, iters, seed, mode, std::move(dims), weight, threads));
        std::vector<std::tuple<std::string, int, int, std::string, double>> rows;
        for (const auto& r : result.records) {
          rows.emplace_back(r.scenario, r.rep, r.iter, to_string(r.metric), r.value);
        }
        return rows;
      },
      py::arg("scenario"), py::arg("reps") = 1, py::arg("iters") = 1000, py::arg("seed") = 0,
      py::arg("mode") = "full", py::arg("dims") = std::vector<int>{}, py::arg("weight") = py::none(),
      py::arg("threads") = 1);

  m.def("run_cli", &run_cli, py::arg("args"),
        "Runs the command-line tool in process; returns its exit code.");
}
