# Copyright 2026 The spinbus Authors. All Rights Reserved.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#     http://www.apache.org/licenses/LICENSE-2.0
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#

"""Spin-valley shuttling simulator: propagation, gate fidelity and pulse optimization."""

import json
import os

from ._core import (
    ConfigError,
    ControlVector,
    Device,
    Error,
    FidelityReport,
    FormatError,
    IoError,
    LandscapeProfile,
    NumericalError,
    OptimizationConfig,
    OptimizationTrace,
    RangeError,
    SimParams,
    TrajectorySpec,
    analytical_amplitude,
    analytical_gate_time,
    evaluate_sinusoid,
    evaluate_trajectory,
    frame_frequency,
    generate_landscape,
    infidelity_and_gradient,
    larmor_frequency,
    load_landscape,
    load_pulse,
    optimize_trajectory,
    save_pulse,
    sinusoid_controls,
    t2_star,
    zero_controls,
)
from . import _core


def run_experiment(config, overrides=None, workers=None, write=False):
    """Run an experiment config file. Returns (summary, records) as parsed JSON."""
    out = _core.run_config(os.fspath(config), json.dumps(overrides or {}), workers, write)
    return json.loads(out["summary"]), [json.loads(r) for r in out["records"]]


__all__ = [name for name in dir() if not name.startswith("_") and name not in ("json", "os")]
