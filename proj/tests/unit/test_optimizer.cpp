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

#include <doctest.h>

#include "helpers.hpp"
#include "spinbus/errors.hpp"
#include "spinbus/optimizer.hpp"

using namespace spinbus;
using namespace spinbus::test;

namespace {

ControlVector random_controls(double Tg, std::mt19937_64& rng, double scale = 8.0) {
  ControlVector c = zero_controls(Tg);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& k : c.knots) k = u(rng);
  return c;
}

// Random amplitudes on a resonant carrier. White-noise knots give gradients
// so small that h = 1e-6 differences are dominated by roundoff.
ControlVector random_drive(double Tg, std::mt19937_64& rng, const SimParams& p) {
  ControlVector c = zero_controls(Tg);
  std::uniform_real_distribution<double> amp(0.0, 15.0);
  for (std::size_t i = 0; i < c.knots.size(); ++i)
    c.knots[i] = amp(rng) * std::sin(kTwoPi * frame_frequency(p) * static_cast<double>(i) / c.knot_rate);
  return c;
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return num / den;
}

}  // namespace

TEST_CASE("adjoint gradient matches central differences") {
  std::mt19937_64 rng(21);
  const Device dev = generated_device(19, 60.0);
  SimParams p;
  p.kappa_z = 5e-6;
  const ControlVector c = random_drive(5.0, rng, p);
  GradientOptions adj;
  const ObjectiveValue a = infidelity_and_gradient(c, dev, p, adj);
  CHECK(a.infidelity == doctest::Approx(evaluate_trajectory(c, dev, p).infidelity).epsilon(1e-13));

  // 20 random knots by central differences with h = 1e-6 nm.
  std::uniform_int_distribution<std::size_t> pick(0, c.knots.size() - 1);
  std::vector<double> fd, ad;
  for (int i = 0; i < 20; ++i) {
    const std::size_t k = pick(rng);
    ControlVector plus = c, minus = c;
    plus.knots[k] += 1e-6;
    minus.knots[k] -= 1e-6;
    fd.push_back((evaluate_trajectory(plus, dev, p).infidelity - evaluate_trajectory(minus, dev, p).infidelity) / 2e-6);
    ad.push_back(a.gradient[k]);
  }
  CHECK(relative_error(ad, fd) < 1e-5);

  GradientOptions fdm;
  fdm.mode = GradientMode::kFiniteDifference;
  fdm.fd_step = 1e-4;
  CHECK(relative_error(a.gradient, infidelity_and_gradient(c, dev, p, fdm).gradient) < 1e-5);
}

TEST_CASE("checkpoint interval does not change the gradient") {
  std::mt19937_64 rng(2);
  const Device dev = generated_device(3);
  SimParams p;
  const ControlVector c = random_controls(3.0, rng);
  GradientOptions a, b;
  b.checkpoint_interval = 37;
  const auto ga = infidelity_and_gradient(c, dev, p, a).gradient;
  const auto gb = infidelity_and_gradient(c, dev, p, b).gradient;
  CHECK(relative_error(ga, gb) < 1e-12);
}

TEST_CASE("gradient is antisymmetric under control sign flip on a symmetric landscape") {
  std::mt19937_64 rng(8);
  const Device dev = flat_device(0.05);
  SimParams p;
  const ControlVector c = random_controls(4.0, rng);
  ControlVector flipped = c;
  for (double& k : flipped.knots) k = -k;
  const ObjectiveValue a = infidelity_and_gradient(c, dev, p);
  const ObjectiveValue b = infidelity_and_gradient(flipped, dev, p);
  CHECK(a.infidelity == doctest::Approx(b.infidelity).epsilon(1e-12));
  std::vector<double> neg(b.gradient.size());
  for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -b.gradient[i];
  CHECK(relative_error(a.gradient, neg) < 1e-9);
  for (double g : infidelity_and_gradient(zero_controls(4.0), dev, p).gradient) CHECK(std::abs(g) < 1e-14);
}

TEST_CASE("non-finite controls are reported") {
  const Device dev = flat_device(0.05);
  ControlVector c = zero_controls(2.0);
  c.knots[4] = NAN;
  CHECK_THROWS_AS(infidelity_and_gradient(c, dev, SimParams{}), Error);
}

TEST_CASE("optimizer respects bounds and pinned boundaries") {
  const Device dev = flat_device(0.05);
  SimParams p;
  TrajectorySpec s;
  s.x0 = 10.0;
  s.omega = frame_frequency(p);
  s.Tg = 12.0;
  OptimizationConfig cfg;
  cfg.max_iterations = 25;
  cfg.control_bound = 9.0;
  const OptimizationTrace t = optimize_trajectory(sinusoid_controls(s), dev, p, cfg);
  for (double k : t.best.knots) CHECK(std::abs(k) <= cfg.control_bound);
  CHECK(t.best.knots.front() == 0.0);
  CHECK(t.best.knots.back() == 0.0);
  CHECK(t.best_infidelity <= t.initial_infidelity);
  CHECK(t.best_infidelity < t.initial_infidelity);
  CHECK(!t.history.empty());
  CHECK(t.evaluations > 0);
  // The reported infidelity is the one of the returned controls.
  CHECK(std::abs(evaluate_trajectory(t.best, dev, p).infidelity - t.best_infidelity) < 1e-12);
}

TEST_CASE("optimizer converges to a stationary point") {
  const Device dev = flat_device(0.05);
  SimParams p = closed_params();
  TrajectorySpec s;
  s.x0 = 10.0;
  s.omega = frame_frequency(p);
  s.Tg = 6.0;
  s.x0 = analytical_amplitude(p, s.Tg);
  OptimizationConfig cfg;
  cfg.max_iterations = 300;
  cfg.convergence_tol = 1e-14;
  const OptimizationTrace t = optimize_trajectory(sinusoid_controls(s), dev, p, cfg);
  CHECK(t.best_infidelity < 1e-6);
  const ObjectiveValue v = infidelity_and_gradient(t.best, dev, p);
  for (std::size_t k = 1; k + 1 < v.gradient.size(); ++k) CHECK(std::abs(v.gradient[k]) < 1e-6);
}

TEST_CASE("optimizer stops at the target infidelity") {
  const Device dev = flat_device(0.05);
  SimParams p;
  TrajectorySpec s;
  s.omega = frame_frequency(p);
  s.Tg = 10.0;
  OptimizationConfig cfg;
  cfg.target_infidelity = 1e-2;
  const OptimizationTrace t = optimize_trajectory(sinusoid_controls(s), dev, p, cfg);
  CHECK(t.best_infidelity < 1e-2);
  CHECK(t.history.size() < 50);
}

TEST_CASE("optimization config validation") {
  OptimizationConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.max_iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = OptimizationConfig{};
  cfg.control_bound = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = OptimizationConfig{};
  cfg.knot_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("calibration finds the minimum of a bowl") {
  CalibrationConfig cfg;
  cfg.omega_interval = {0.550, 0.570};
  cfg.Tg_interval = {10.0, 30.0};
  cfg.budget = 30;
  cfg.seed = 4;
  auto bowl = [](double w, double T) {
    const double a = (w - 0.5612) / 0.02, b = (T - 22.7) / 20.0;
    return 1e-4 + a * a + b * b;
  };
  const CalibrationResult r = bayesian_minimize(bowl, cfg);
  CHECK(r.values.size() <= 30);
  CHECK(std::abs(r.omega - 0.5612) < 0.01 * 0.02);
  CHECK(std::abs(r.Tg - 22.7) < 0.01 * 20.0);
}

TEST_CASE("calibration is invariant under affine rescaling of the intervals") {
  auto run = [](std::pair<double, double> wi, std::pair<double, double> ti) {
    CalibrationConfig cfg;
    cfg.omega_interval = wi;
    cfg.Tg_interval = ti;
    cfg.budget = 20;
    cfg.seed = 9;
    auto f = [&](double w, double T) {
      const double u = (w - wi.first) / (wi.second - wi.first), v = (T - ti.first) / (ti.second - ti.first);
      return 1e-3 + (u - 0.3) * (u - 0.3) + 2.0 * (v - 0.6) * (v - 0.6) + 0.1 * std::sin(7 * u);
    };
    std::vector<std::pair<double, double>> unit;
    for (auto [w, T] : bayesian_minimize(f, cfg).evaluated)
      unit.emplace_back((w - wi.first) / (wi.second - wi.first), (T - ti.first) / (ti.second - ti.first));
    return unit;
  };
  const auto a = run({0.55, 0.57}, {10.0, 30.0});
  const auto b = run({0.1, 5.0}, {100.0, 1000.0});
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == doctest::Approx(b[i].first).epsilon(1e-9));
    CHECK(a[i].second == doctest::Approx(b[i].second).epsilon(1e-9));
  }
}

TEST_CASE("calibration config validation") {
  CalibrationConfig cfg;
  cfg.omega_interval = {0.56, 0.56};
  cfg.Tg_interval = {10.0, 20.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.omega_interval = {0.55, 0.57};
  cfg.budget = 5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("calibration recovers the resonance") {
  const Device dev = flat_device(0.05);
  for (double kappa : {0.0, 5e-6}) {
    SimParams p;
    p.kappa_z = kappa;
    p.T2_s = t2_star(p);
    CalibrationConfig cfg = default_calibration(p, 10.0);
    const CalibrationResult r = bayesian_calibrate(cfg, 10.0, dev, p);
    const double expected = kappa == 0.0 ? 0.5598 : 0.5622;
    CHECK(std::abs(r.omega - expected) < 0.5e-3);
    CHECK(r.infidelity < 1e-3);
  }
}
