/* Copyright 2026 The spinbus Authors. All Rights Reserved.
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at
    http://www.apache.org/licenses/LICENSE-2.0
Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "spinbus/fidelity.hpp"
#include "spinbus/hamiltonian.hpp"
#include "spinbus/params.hpp"
#include "spinbus/pulse.hpp"

namespace spinbus {

enum class GradientMode { kAdjoint, kFiniteDifference };

struct ObjectiveValue {
  double infidelity = 1.0;
  std::vector<double> gradient;  // d(infidelity)/d(knot), nm⁻¹
  double valley_excitation_max = 0.0;
};

struct GradientOptions {
  GradientMode mode = GradientMode::kAdjoint;
  std::size_t checkpoint_interval = 1000;  // steps between stored states
  double fd_step = 1e-6;                   // nm, central differences
  UpsampleOptions upsample{};
  Matrix2c U_G = pi_rotation_y();
};

// Infidelity of evaluate_trajectory and its exact derivative with respect to
// every knot (boundary knots included). Throws NumericalError on non-finite
// values.
ObjectiveValue infidelity_and_gradient(const ControlVector& controls, const Device& device,
                                       const SimParams& p, const GradientOptions& options = {});

// Same derivative taken with respect to the per-step positions.
ObjectiveValue step_gradient(const DiscretizedTrajectory& traj, const Device& device,
                             const SimParams& p, const GradientOptions& options = {});

struct OptimizationConfig {
  int max_iterations = 300;
  double knot_rate = kDefaultKnotRate;
  GradientMode gradient_mode = GradientMode::kAdjoint;
  double convergence_tol = 1e-10;  // relative change of the infidelity
  double control_bound = kDefaultControlBound;
  bool boundary_pinning = true;
  // Stop as soon as the best infidelity falls below this value (0 disables).
  double target_infidelity = 0.0;
  UpsampleOptions upsample{};
  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double infidelity = 1.0;
  double grad_norm = 0.0;
  double time_ms = 0.0;
};

struct OptimizationTrace {
  std::vector<IterationRecord> history;
  ControlVector best;
  double best_infidelity = 1.0;
  double initial_infidelity = 1.0;
  int evaluations = 0;
  bool line_search_failed = false;
  std::string termination;

  void write_jsonl(const std::filesystem::path& path) const;
};

OptimizationTrace optimize_trajectory(const ControlVector& initial, const Device& device,
                                      const SimParams& p, const OptimizationConfig& cfg = {});

// ---- Bayesian calibration of (ω, T_g) ----

struct CalibrationConfig {
  std::pair<double, double> omega_interval{0.0, 0.0};  // GHz
  std::pair<double, double> Tg_interval{0.0, 0.0};     // ns
  int budget = 60;
  int initial_points = 10;
  std::uint64_t seed = 1;
  double noise_floor = 1e-8;
  void validate() const;
};

// Intervals centred on the frame frequency (± omega_halfwidth GHz) and on the
// analytical gate time for amplitude x0 (± Tg_fraction of it).
CalibrationConfig default_calibration(const SimParams& p, double x0, double omega_halfwidth = 3e-3,
                                      double Tg_fraction = 0.15);

struct CalibrationResult {
  double omega = 0.0;
  double Tg = 0.0;
  double infidelity = 1.0;
  std::vector<std::pair<double, double>> evaluated;  // (ω, T_g)
  std::vector<double> values;
};

// Minimizes objective(ω, T_g) by GP regression (Matérn 5/2 on the unit square,
// log-transformed values) and expected improvement. Deterministic for a seed.
CalibrationResult bayesian_minimize(const std::function<double(double, double)>& objective,
                                    const CalibrationConfig& cfg);

// Calibrates the shaped sinusoid of amplitude x0 on a device.
CalibrationResult bayesian_calibrate(const CalibrationConfig& cfg, double x0, const Device& device,
                                     const SimParams& p);

}  // namespace spinbus
