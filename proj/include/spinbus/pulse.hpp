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

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace spinbus {

inline constexpr double kDefaultKnotRate = 10.0;     // knots per ns
inline constexpr double kDefaultControlBound = 35.0;  // nm

// Sinusoidal EDSR trajectory x0·sin(2π·omega·t + phi), shaped by the ramp envelope.
struct TrajectorySpec {
  double x0 = 10.0;     // nm
  double omega = 0.56;  // GHz, cyclic
  double phi = 0.0;     // rad
  double Tg = 18.0;     // ns
  double t_r = 1.0;     // ns
  void validate() const;
  double position(double t) const;  // shaped position at time t, nm
};

// Gaussian ramp: rises from 0 at t = 0 to 1 at t_r, flat until Tg − t_r, falls to
// 0 at Tg. Throws RangeError outside [0, Tg].
double envelope(double t, double Tg, double t_r);

// Optimizable trajectory knots. Knot k sits at t_k = k·Tg/intervals(), so the
// first and last knots coincide with the pulse boundaries.
struct ControlVector {
  std::vector<double> knots;  // nm
  double Tg = 0.0;            // ns
  double knot_rate = kDefaultKnotRate;

  std::size_t intervals() const { return knots.empty() ? 0 : knots.size() - 1; }
  double knot_spacing() const { return Tg / static_cast<double>(intervals()); }
  double time_of(std::size_t k) const { return static_cast<double>(k) * knot_spacing(); }
  // Throws ConfigError on inconsistent length, non-finite values, or |knot| > bound.
  void validate(double bound = kDefaultControlBound) const;
};

// Number of knot intervals for a gate time: max(1, round(Tg·rate)).
std::size_t knot_intervals(double Tg, double knot_rate);
ControlVector zero_controls(double Tg, double knot_rate = kDefaultKnotRate);
ControlVector sinusoid_controls(const TrajectorySpec& spec, double knot_rate = kDefaultKnotRate);

// Piecewise-constant positions on the dt grid; step n covers [n·dt, (n+1)·dt).
struct DiscretizedTrajectory {
  double dt = 0.0;
  std::vector<double> positions;  // nm
  double Tg = 0.0;

  double duration() const { return dt * static_cast<double>(positions.size()); }
};

// ceil(Tg/dt), tolerant to round-off in the ratio.
std::size_t step_count(double Tg, double dt);

struct UpsampleOptions {
  // Optional Gaussian low-pass applied after linear interpolation (width in ns).
  bool smoothing = false;
  double smoothing_width = 0.05;
};

// Step value = piecewise-linear interpolant of the knots at the step midpoint,
// clamped to the last knot beyond Tg. Throws ConfigError when dt > knot spacing.
DiscretizedTrajectory upsample(const ControlVector& controls, double dt,
                               const UpsampleOptions& options = {});

// Transpose of upsample's linear map: knot gradient from per-step gradient.
std::vector<double> upsample_adjoint(const ControlVector& controls, double dt,
                                     std::span<const double> step_gradient,
                                     const UpsampleOptions& options = {});

// Exact shaped sinusoid evaluated at the step midpoints.
DiscretizedTrajectory discretize_sinusoid(const TrajectorySpec& spec, double dt);

// JSON document {Tg_ns, knot_rate_per_ns, knots_nm} followed by a newline.
std::string pulse_to_string(const ControlVector& controls);
void save_pulse(const ControlVector& controls, const std::filesystem::path& path);
ControlVector load_pulse(const std::filesystem::path& path);

}  // namespace spinbus
