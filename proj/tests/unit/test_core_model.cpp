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

#include <Eigen/Eigenvalues>

#include "helpers.hpp"
#include "spinbus/errors.hpp"

using namespace spinbus;
using namespace spinbus::test;

TEST_CASE("zeeman-only hamiltonian is diagonal") {
  const Device dev = flat_device(0.0);
  SimParams p;
  const Matrix4c h = hamiltonian_at(0.0, dev, p);
  const double e = zeeman_half_splitting(p);
  CHECK(e == doctest::Approx(1.1577e-3).epsilon(1e-4));
  Matrix4c expected = Matrix4c::Zero();
  expected.diagonal() << e, -e, e, -e;
  CHECK(max_abs(h - expected) < 1e-15);
}

TEST_CASE("valley coupling opens the valley gap in the spin-diagonal blocks") {
  const Device dev = flat_device(0.027265);
  SimParams p;
  p.B_z = 0.0;
  const Matrix4c h = hamiltonian_at(0.0, dev, p);
  // Spin-up block: rows/cols {0, 2}.
  Eigen::Matrix2cd block;
  block << h(0, 0), h(0, 2), h(2, 0), h(2, 2);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(block);
  CHECK(es.eigenvalues()(1) - es.eigenvalues()(0) == doctest::Approx(0.05453).epsilon(1e-12));
}

TEST_CASE("transverse drive term") {
  const Device dev = flat_device(0.0);
  SimParams p;
  p.B_z = 0.0;
  p.drive = DriveNormalization::kHalfPrefactor;
  CHECK(hamiltonian_at(10.0, dev, p)(0, 1).real() == doctest::Approx(5.788e-5).epsilon(1e-3));
  p.drive = DriveNormalization::kMatchedRabi;
  CHECK(hamiltonian_at(10.0, dev, p)(0, 1).real() == doctest::Approx(2 * 5.788e-5).epsilon(1e-3));
}

TEST_CASE("hamiltonian rejects positions outside the landscape") {
  const Device dev = flat_device(0.05, 0.0, 20.0);
  CHECK_THROWS_AS(hamiltonian_at(11.0, dev, SimParams{}), RangeError);
  CHECK_THROWS_AS(valley_splitting(*dev.landscape, -10.5), RangeError);
}

TEST_CASE("valley splitting and phase") {
  CHECK(valley_phase(0.0, 0.0) == 0.0);
  CHECK(valley_splitting(*flat_device(0.0).landscape, 0.0) == 0.0);
  const Device d = flat_device(0.0, 1e-3);
  CHECK(valley_splitting(*d.landscape, 3.0) == doctest::Approx(2e-3).epsilon(1e-14));
  CHECK(valley_phase(*d.landscape, 3.0) == doctest::Approx(kPi / 2).epsilon(1e-14));
  CHECK(valley_phase(-1.0, -0.0) == doctest::Approx(kPi));
}

TEST_CASE("local valley frame") {
  const double r = 1.0 / std::sqrt(2.0);
  const ValleyFrame f0 = valley_frame_for_phase(0.0);
  CHECK(std::abs(f0.ground(0) - cd(r, 0)) < 1e-15);
  CHECK(std::abs(f0.ground(1) - cd(-r, 0)) < 1e-15);
  const ValleyFrame f1 = valley_frame_for_phase(kPi / 2);
  CHECK(std::abs(f1.ground(1) - cd(0, -r)) < 1e-15);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int i = 0; i < 20; ++i) {
    const double phi = u(rng), mag = 0.01 + 0.1 * std::abs(u(rng));
    const Matrix2c hv = mag * (std::cos(phi) * pauli::x() + std::sin(phi) * pauli::y());
    const ValleyFrame f = valley_frame_for_phase(phi);
    CHECK(std::abs((f.ground.adjoint() * hv * f.ground)(0) + mag) < 1e-12);
    CHECK(std::abs((f.excited.adjoint() * hv * f.excited)(0) - mag) < 1e-12);
  }
  CHECK_THROWS_AS(local_valley_frame(*flat_device(0.0).landscape, 0.0), NumericalError);
}

TEST_CASE("valley jump operators") {
  Matrix2c literal;
  literal << 1, 1, 1, -1;
  CHECK(max_abs(jump_operator_for_phase(0.0, ValleyJump::kLiteralMatrix) - literal) < 1e-15);
  Matrix2c lowering;
  lowering << 0.5, 0.5, -0.5, -0.5;
  CHECK(max_abs(jump_operator_for_phase(0.0, ValleyJump::kTrueLowering) - lowering) < 1e-15);

  for (double phi : {-2.5, -0.3, 0.7, 1.9, 3.1}) {
    const Matrix2c m = jump_operator_for_phase(phi, ValleyJump::kLiteralMatrix);
    CHECK(max_abs(m - m.adjoint()) < 1e-15);
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(m);
    CHECK(es.eigenvalues()(0) == doctest::Approx(-std::sqrt(2.0)));
    CHECK(es.eigenvalues()(1) == doctest::Approx(std::sqrt(2.0)));
    // True lowering maps the excited state to the ground state.
    const ValleyFrame f = valley_frame_for_phase(phi);
    const Matrix2c l = jump_operator_for_phase(phi, ValleyJump::kTrueLowering);
    CHECK((l * f.excited - f.ground).norm() < 1e-15);
    CHECK((l * f.ground).norm() < 1e-15);
  }
}

TEST_CASE("frequencies") {
  SimParams p;
  CHECK(larmor_frequency(p) == doctest::Approx(0.5598).epsilon(2e-4));
  CHECK(larmor_frequency(p) >= 0.5593);
  CHECK(larmor_frequency(p) <= 0.5603);
  CHECK(rabi_frequency(p, 10.0) == doctest::Approx(0.02799).epsilon(2e-4));
  CHECK(generalized_rabi(p, 10.0, 0.0) == rabi_frequency(p, 10.0));
  CHECK(generalized_rabi(p, 10.0, 0.01) > rabi_frequency(p, 10.0));
  CHECK_THROWS_AS(rabi_frequency(p, -1.0), RangeError);
  p.kappa_z = 5e-6;
  CHECK((frame_frequency(p) - larmor_frequency(p)) * 1e3 == doctest::Approx(2.418).epsilon(1e-3));
}

TEST_CASE("analytical gate time and amplitude") {
  SimParams p;
  CHECK(analytical_gate_time(p, 10.0) == doctest::Approx(17.86).epsilon(3e-4));
  CHECK(analytical_amplitude(p, 360.0) == doctest::Approx(0.496).epsilon(1e-3));
  CHECK(analytical_gate_time(p, 20.0) == doctest::Approx(0.5 * analytical_gate_time(p, 10.0)).epsilon(1e-15));
  for (double x0 : {0.5, 3.0, 10.0, 35.7}) {
    const double back = analytical_amplitude(p, analytical_gate_time(p, x0));
    CHECK(std::abs(back - x0) / x0 < 1e-12);
  }
  CHECK_THROWS_AS(analytical_gate_time(p, 0.0), RangeError);
  CHECK_THROWS_AS(analytical_amplitude(p, -1.0), RangeError);
  p.db_perp = 0.0;
  CHECK_THROWS_AS(analytical_gate_time(p, 10.0), RangeError);
}

TEST_CASE("t2 star") {
  SimParams p;
  p.db_par = 0.2;
  CHECK(t2_star(p) == doctest::Approx(2.37e4).epsilon(5e-3));
  p.db_par = 0.02;
  CHECK(t2_star(p) == doctest::Approx(2.37e5).epsilon(5e-3));
  const double base = t2_star(p);
  p.dx_rms *= 2;
  CHECK(t2_star(p) == doctest::Approx(0.5 * base).epsilon(1e-14));
  p.db_par = 0.0;
  CHECK_THROWS_AS(t2_star(p), RangeError);
}

TEST_CASE("hamiltonian invariants on a generated landscape") {
  const Device dev = generated_device(17);
  SimParams p;
  p.kappa_z = 5e-6;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-60.0, 60.0);
  for (int i = 0; i < 50; ++i) {
    const double x = u(rng);
    const Matrix4c h = hamiltonian_at(x, dev, p);
    CHECK(max_abs(h - h.adjoint()) < 1e-14);

    // Valley part: eigenvalues ±E_V/2, each twice.
    SimParams q;
    q.B_z = 0.0;
    q.db_perp = 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix4c> es(hamiltonian_at(x, dev, q));
    const double ev = valley_splitting(*dev.landscape, dev.position(x));
    CHECK(std::abs(es.eigenvalues()(0) + 0.5 * ev) < 1e-12);
    CHECK(std::abs(es.eigenvalues()(3) - 0.5 * ev) < 1e-12);
  }
}

TEST_CASE("spin and valley sectors commute without coupling") {
  const Device dev = flat_device(0.0);
  SimParams p;
  const Matrix4c h = hamiltonian_at(7.0, dev, p);
  const Matrix4c valley_op = kron(pauli::x(), pauli::identity());
  CHECK(max_abs(h * valley_op - valley_op * h) < 1e-14);
}

TEST_CASE("spin-valley term anticommutes with the quadrature valley term") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  SimParams bare;
  bare.B_z = 0.0;
  bare.db_perp = 0.0;
  SimParams coupled = bare;
  coupled.kappa_z = 5e-6;
  for (int i = 0; i < 10; ++i) {
    const double phi = u(rng), mag = 0.03;
    const Device a = flat_device(mag * std::cos(phi), mag * std::sin(phi));
    const Device b = flat_device(mag * std::cos(phi + kPi / 2), mag * std::sin(phi + kPi / 2));
    const Matrix4c h_sv = hamiltonian_at(0.0, a, coupled) - hamiltonian_at(0.0, a, bare);
    const Matrix4c h_v = hamiltonian_at(0.0, b, bare);
    CHECK(max_abs(h_sv * h_v + h_v * h_sv) < 1e-14);
  }
}

TEST_CASE("parameter validation") {
  SimParams p;
  CHECK_NOTHROW(p.validate());
  p.dt = 5e-3;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = SimParams{};
  p.T1_v = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = SimParams{};
  p.q_linked = true;
  p.Q = -1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = SimParams{};
  p.q_linked = true;
  p.db_par = 0.03;
  CHECK(p.effective_db_perp() == doctest::Approx(0.15));
}
