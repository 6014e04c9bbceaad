# Copyright 2026 The nspiggy Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python bindings for the nspiggy C++ library."""

from ._core import (
    MatrixPacket,
    NspiggyError,
    Scenario,
    apply_packet,
    distance_to_fixed_set,
    fixed_set,
    gap,
    hausdorff,
    hausdorff_to_fixed_set,
    implicit_jacobian,
    make_hb_counterexample,
    make_lasso,
    make_ridge,
    make_sics,
    make_trend_filter,
    run_cli,
    run_experiment,
    stream_seed,
    strict_inclusion_packet,
    verify_rate,
)

__all__ = [
    "MatrixPacket",
    "NspiggyError",
    "Scenario",
    "apply_packet",
    "distance_to_fixed_set",
    "fixed_set",
    "gap",
    "hausdorff",
    "hausdorff_to_fixed_set",
    "implicit_jacobian",
    "make_hb_counterexample",
    "make_lasso",
    "make_ridge",
    "make_sics",
    "make_trend_filter",
    "run_cli",
    "run_experiment",
    "stream_seed",
    "strict_inclusion_packet",
    "verify_rate",
]
