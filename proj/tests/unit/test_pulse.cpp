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

#include <filesystem>
#include <fstream>
#include <random>

#include "spinbus/constants.hpp"
#include "spinbus/errors.hpp"
#include "spinbus/pulse.hpp"

using namespace spinbus;

TEST_CASE("envelope values") {
  CHECK(envelope(0.0, 18.0, 1.0) == 0.0);
  CHECK(envelope(1.0, 18.0, 1.0) == 1.0);
  CHECK(envelope(18.0, 18.0, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
  // α[e^{−2} − e^{−8}] with α = 1/(1 − e^{−8}).
  const double expected = (std::exp(-2.0) - std::exp(-8.0)) / (1.0 - std::exp(-8.0));
  CHECK(envelope(0.5, 18.0, 1.0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(envelope(0.5, 18.0, 1.0) == doctest::Approx(0.13506).epsilon(1e-4));
  for (double t = 1.0; t <= 17.0; t += 0.01) CHECK(envelope(t, 18.0, 1.0) == 1.0);
  CHECK(envelope(17.5, 18.0, 1.0) == doctest::Approx(envelope(0.5, 18.0, 1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(envelope(-0.1, 18.0, 1.0), RangeError);
  CHECK_THROWS_AS(envelope(18.1, 18.0, 1.0), RangeError);
}

TEST_CASE("sinusoid trajectory") {
  TrajectorySpec s;
  s.x0 = 10.0;
  s.omega = 0.5598;
  s.Tg = 18.0;
  CHECK(s.position(0.0) == 0.0);
  CHECK(std::abs(s.position(s.Tg)) < 1e-15);
  // A crest inside the flat top.
  const double crest = (5.0 + 0.25) / s.omega;
  CHECK(s.position(crest) == doctest::Approx(10.0).epsilon(1e-12));
  for (double t = 0.0; t <= s.Tg; t += 0.001) CHECK(std::abs(s.position(t)) <= s.x0 + 1e-12);

  const ControlVector c = sinusoid_controls(s);
  CHECK(c.knots.front() == 0.0);
  CHECK(std::abs(c.knots.back()) < 1e-15);
  CHECK(c.knots.size() == 181);

  s.x0 = 0.0;
  for (double k : sinusoid_controls(s).knots) CHECK(k == 0.0);

  s.Tg = 1.5;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("discretized sinusoid starts and ends near zero") {
  TrajectorySpec s;
  s.omega = 0.56;
  s.Tg = 17.86;
  const DiscretizedTrajectory d = discretize_sinusoid(s, 8e-4);
  // Midpoint sampling leaves an O(dt) residue at the boundaries.
  CHECK(std::abs(d.positions.front()) < 1e-4);
  CHECK(std::abs(d.positions.back()) < 1e-4);
}

TEST_CASE("step counts") {
  CHECK(step_count(18.0, 8e-4) == 22500);
  CHECK(step_count(17.86, 8e-4) == 22325);
  CHECK_THROWS_AS(step_count(0.0, 8e-4), ConfigError);
}

TEST_CASE("upsampling") {
  ControlVector c = zero_controls(2.0);
  for (double& k : c.knots) k = 3.25;
  for (double x : upsample(c, 8e-4).positions) CHECK(x == 3.25);

  ControlVector ramp;
  ramp.Tg = 1.0;
  ramp.knot_rate = 1.0;
  ramp.knots = {0.0, 1.0};
  const DiscretizedTrajectory d = upsample(ramp, 0.1);
  REQUIRE(d.positions.size() == 10);
  for (int n = 0; n < 10; ++n) CHECK(d.positions[n] == doctest::Approx(0.05 + 0.1 * n).epsilon(1e-14));

  CHECK_THROWS_AS(upsample(zero_controls(2.0), 0.2), ConfigError);
}

TEST_CASE("upsampling is linear and its adjoint is the transpose") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  for (bool smoothing : {false, true}) {
    UpsampleOptions opt;
    opt.smoothing = smoothing;
    ControlVector u = zero_controls(3.0), v = zero_controls(3.0);
    for (std::size_t k = 0; k < u.knots.size(); ++k) {
      u.knots[k] = n(rng);
      v.knots[k] = n(rng);
    }
    ControlVector w = u;
    for (std::size_t k = 0; k < w.knots.size(); ++k) w.knots[k] = 2.0 * u.knots[k] - 0.5 * v.knots[k];
    const auto pu = upsample(u, 8e-4, opt).positions, pv = upsample(v, 8e-4, opt).positions;
    const auto pw = upsample(w, 8e-4, opt).positions;
    double worst = 0.0;
    for (std::size_t i = 0; i < pw.size(); ++i) worst = std::max(worst, std::abs(pw[i] - (2.0 * pu[i] - 0.5 * pv[i])));
    CHECK(worst < 1e-12);

    std::vector<double> g(pu.size());
    for (double& x : g) x = n(rng);
    const auto back = upsample_adjoint(u, 8e-4, g, opt);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) lhs += pu[i] * g[i];
    for (std::size_t k = 0; k < back.size(); ++k) rhs += u.knots[k] * back[k];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
  }
}

TEST_CASE("control vector validation") {
  ControlVector c = zero_controls(2.0);
  CHECK(c.knots.size() == 21);
  CHECK_NOTHROW(c.validate());
  c.knots[3] = 40.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_NOTHROW(c.validate(50.0));
  c.knots[3] = NAN;
  CHECK_THROWS_AS(c.validate(50.0), ConfigError);
  c = zero_controls(2.0);
  c.knots.pop_back();
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("pulse files") {
  TrajectorySpec s;
  s.Tg = 6.0;
  const ControlVector c = sinusoid_controls(s);
  const auto path = std::filesystem::temp_directory_path() / "spinbus_test_pulse.json";
  save_pulse(c, path);
  const ControlVector back = load_pulse(path);
  CHECK(back.knots == c.knots);
  CHECK(back.Tg == c.Tg);
  CHECK(back.knot_rate == c.knot_rate);
  std::ofstream(path) << R"({"Tg_ns": 6.0, "knot_rate_per_ns": 10, "knots_nm": [0, 1]})";
  CHECK_THROWS_AS(load_pulse(path), FormatError);
  std::ofstream(path) << "{";
  CHECK_THROWS_AS(load_pulse(path), FormatError);
}
