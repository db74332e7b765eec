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

#include "spinbus/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "spinbus/constants.hpp"
#include "spinbus/errors.hpp"

namespace spinbus {

void TrajectorySpec::validate() const {
  if (!(x0 >= 0.0) || !std::isfinite(x0)) throw ConfigError("trajectory: x0 must be >= 0");
  if (!(omega > 0.0)) throw ConfigError("trajectory: omega must be positive");
  if (!(t_r > 0.0)) throw ConfigError("trajectory: rise time must be positive");
  if (!(Tg > 2.0 * t_r)) throw ConfigError("trajectory: Tg must exceed twice the rise time");
}

double TrajectorySpec::position(double t) const {
  return envelope(t, Tg, t_r) * x0 * std::sin(kTwoPi * omega * t + phi);
}

double envelope(double t, double Tg, double t_r) {
  if (t < 0.0 || t > Tg) throw RangeError("envelope: t outside [0, Tg]");
  const double sigma = 0.25 * t_r;
  const double floor = std::exp(-t_r * t_r / (2.0 * sigma * sigma));
  const double alpha = 1.0 / (1.0 - floor);
  auto ramp = [&](double u) { return alpha * (std::exp(-u * u / (2.0 * sigma * sigma)) - floor); };
  if (t < t_r) return ramp(t - t_r);
  if (t > Tg - t_r) return ramp(t - Tg + t_r);
  return 1.0;
}

void ControlVector::validate(double bound) const {
  if (!(Tg > 0.0)) throw ConfigError("controls: Tg must be positive");
  if (!(knot_rate > 0.0)) throw ConfigError("controls: knot rate must be positive");
  if (knots.size() != knot_intervals(Tg, knot_rate) + 1)
    throw ConfigError("controls: expected " + std::to_string(knot_intervals(Tg, knot_rate) + 1) +
                      " knots, got " + std::to_string(knots.size()));
  for (double k : knots) {
    if (!std::isfinite(k)) throw ConfigError("controls: non-finite knot");
    if (std::abs(k) > bound) throw ConfigError("controls: knot exceeds hardware bound");
  }
}

std::size_t knot_intervals(double Tg, double knot_rate) {
  return static_cast<std::size_t>(std::max<long long>(1, std::llround(Tg * knot_rate)));
}

ControlVector zero_controls(double Tg, double knot_rate) {
  ControlVector c;
  c.Tg = Tg;
  c.knot_rate = knot_rate;
  c.knots.assign(knot_intervals(Tg, knot_rate) + 1, 0.0);
  return c;
}

ControlVector sinusoid_controls(const TrajectorySpec& spec, double knot_rate) {
  spec.validate();
  ControlVector c = zero_controls(spec.Tg, knot_rate);
  for (std::size_t k = 0; k < c.knots.size(); ++k)
    c.knots[k] = spec.position(std::min(c.time_of(k), spec.Tg));
  return c;
}

std::size_t step_count(double Tg, double dt) {
  if (!(dt > 0.0) || !(Tg > 0.0)) throw ConfigError("step_count: Tg and dt must be positive");
  return static_cast<std::size_t>(std::ceil(Tg / dt - 1e-9));
}

namespace {

struct Segment {
  std::size_t k;  // left knot
  double w;       // weight of the right knot
};

Segment locate(const ControlVector& c, double t) {
  const double u = t / c.knot_spacing();
  const std::size_t last = c.intervals();
  if (u >= static_cast<double>(last)) return {last - 1, 1.0};
  const auto k = static_cast<std::size_t>(u);
  return {k, u - static_cast<double>(k)};
}

void check_dt(const ControlVector& c, double dt) {
  if (c.knots.size() < 2) throw ConfigError("upsample: at least two knots required");
  if (!(dt > 0.0) || dt > c.knot_spacing() * (1.0 + 1e-12))
    throw ConfigError("upsample: dt must not exceed the knot spacing");
}

// Normalized Gaussian smoothing with truncated (renormalized) kernel at the edges.
// apply_transpose selects the adjoint of the same linear map.
std::vector<double> smooth(std::span<const double> in, double width, double dt, bool transpose) {
  const auto half = static_cast<std::ptrdiff_t>(std::ceil(4.0 * width / dt));
  const auto n = static_cast<std::ptrdiff_t>(in.size());
  std::vector<double> kernel(2 * half + 1);
  for (std::ptrdiff_t j = -half; j <= half; ++j) {
    const double r = static_cast<double>(j) * dt / width;
    kernel[j + half] = std::exp(-0.5 * r * r);
  }
  std::vector<double> out(in.size(), 0.0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::ptrdiff_t j = std::max(-half, -i); j <= std::min(half, n - 1 - i); ++j)
      total += kernel[j + half];
    for (std::ptrdiff_t j = std::max(-half, -i); j <= std::min(half, n - 1 - i); ++j) {
      const double w = kernel[j + half] / total;
      if (transpose)
        out[i + j] += w * in[i];
      else
        out[i] += w * in[i + j];
    }
  }
  return out;
}

}  // namespace

DiscretizedTrajectory upsample(const ControlVector& controls, double dt,
                               const UpsampleOptions& options) {
  check_dt(controls, dt);
  DiscretizedTrajectory traj;
  traj.dt = dt;
  traj.Tg = controls.Tg;
  traj.positions.resize(step_count(controls.Tg, dt));
  for (std::size_t n = 0; n < traj.positions.size(); ++n) {
    const Segment s = locate(controls, (static_cast<double>(n) + 0.5) * dt);
    traj.positions[n] = controls.knots[s.k] + s.w * (controls.knots[s.k + 1] - controls.knots[s.k]);
  }
  if (options.smoothing) traj.positions = smooth(traj.positions, options.smoothing_width, dt, false);
  return traj;
}

std::vector<double> upsample_adjoint(const ControlVector& controls, double dt,
                                     std::span<const double> step_gradient,
                                     const UpsampleOptions& options) {
  check_dt(controls, dt);
  if (step_gradient.size() != step_count(controls.Tg, dt))
    throw ConfigError("upsample_adjoint: gradient length mismatch");
  std::vector<double> smoothed;
  if (options.smoothing) {
    smoothed = smooth(step_gradient, options.smoothing_width, dt, true);
    step_gradient = smoothed;
  }
  std::vector<double> grad(controls.knots.size(), 0.0);
  for (std::size_t n = 0; n < step_gradient.size(); ++n) {
    const Segment s = locate(controls, (static_cast<double>(n) + 0.5) * dt);
    grad[s.k] += (1.0 - s.w) * step_gradient[n];
    grad[s.k + 1] += s.w * step_gradient[n];
  }
  return grad;
}

DiscretizedTrajectory discretize_sinusoid(const TrajectorySpec& spec, double dt) {
  spec.validate();
  DiscretizedTrajectory traj;
  traj.dt = dt;
  traj.Tg = spec.Tg;
  traj.positions.resize(step_count(spec.Tg, dt));
  for (std::size_t n = 0; n < traj.positions.size(); ++n)
    traj.positions[n] = spec.position(std::min((static_cast<double>(n) + 0.5) * dt, spec.Tg));
  return traj;
}

std::string pulse_to_string(const ControlVector& controls) {
  nlohmann::json doc{{"Tg_ns", controls.Tg},
                     {"knot_rate_per_ns", controls.knot_rate},
                     {"knots_nm", controls.knots}};
  return doc.dump() + "\n";
}

void save_pulse(const ControlVector& controls, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << pulse_to_string(controls);
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

ControlVector load_pulse(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pulse file '" + path.string() + "'");
  try {
    const auto doc = nlohmann::json::parse(in);
    ControlVector c;
    c.Tg = doc.at("Tg_ns").get<double>();
    c.knot_rate = doc.at("knot_rate_per_ns").get<double>();
    c.knots = doc.at("knots_nm").get<std::vector<double>>();
    c.validate(std::numeric_limits<double>::infinity());
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed pulse file '" + path.string() + "': " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError("malformed pulse file '" + path.string() + "': " + e.what());
  }
}

}  // namespace spinbus
