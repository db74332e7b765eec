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
#include <unsupported/Eigen/MatrixFunctions>

#include "helpers.hpp"
#include "spinbus/errors.hpp"

using namespace spinbus;
using namespace spinbus::test;

namespace {

DiscretizedTrajectory constant_trajectory(double x, double duration, double dt) {
  DiscretizedTrajectory t;
  t.dt = dt;
  t.Tg = duration;
  t.positions.assign(step_count(duration, dt), x);
  return t;
}

Matrix2c spin_plus() {
  Vector2c v;
  v << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  return pure_state(v);
}

double excited_population(const DensityMatrix& rho, const Vector2c& excited) {
  const Matrix4c proj = kron(excited * excited.adjoint(), pauli::identity());
  return (proj * rho.matrix).trace().real();
}

}  // namespace

TEST_CASE("zero hamiltonian and no decay leave the state unchanged") {
  const Device dev = flat_device(0.0);
  SimParams p = closed_params();
  p.B_z = 0.0;
  p.db_perp = 0.0;
  std::mt19937_64 rng(1);
  const DensityMatrix rho{random_density(rng)};
  CHECK(max_abs(step(rho, 3.0, p.dt, dev, p).matrix - rho.matrix) < 1e-14);
}

TEST_CASE("zeeman precession phase") {
  const Device dev = flat_device(0.05);
  const SimParams p = closed_params();
  const DensityMatrix rho = valley_ground_state(dev, 0.0, spin_plus());
  const DensityMatrix one = step(rho, 0.0, p.dt, dev, p);
  const cd expected = 0.5 * std::polar(1.0, -kTwoPi * larmor_frequency(p) * p.dt);
  CHECK(std::abs(one.spin()(0, 1) - expected) < 1e-14);

  const EvolutionResult r = evolve(rho, constant_trajectory(0.0, 1.0, p.dt), dev, p);
  const double t = p.dt * static_cast<double>(r.step_count);
  CHECK(std::abs(r.rho_final.spin()(0, 1) - 0.5 * std::polar(1.0, -kTwoPi * larmor_frequency(p) * t)) < 1e-11);
}

TEST_CASE("spin dephasing decay") {
  const Device dev = flat_device(0.05);
  SimParams p = closed_params();
  p.T2_s = 100.0;
  const DensityMatrix rho = valley_ground_state(dev, 0.0, spin_plus());
  CHECK(std::abs(step(rho, 0.0, p.dt, dev, p).spin()(0, 1)) ==
        doctest::Approx(0.5 * std::exp(-2.0 * p.dt / p.T2_s)).epsilon(1e-12));
  const EvolutionResult r = evolve(rho, constant_trajectory(0.0, 10.0, p.dt), dev, p);
  CHECK(std::abs(r.rho_final.spin()(0, 1)) == doctest::Approx(0.5 * std::exp(-0.2)).epsilon(1e-9));
}

TEST_CASE("valley relaxation") {
  const Device dev = flat_device(0.05);
  SimParams p = closed_params();
  p.T1_v = 100.0;
  const ValleyFrame f = local_valley_frame(*dev.landscape, 0.0);
  const DensityMatrix rho = product_state(f.excited, pure_state(Vector2c(1, 0)));
  const EvolutionResult r = evolve(rho, constant_trajectory(0.0, 100.0, p.dt), dev, p);
  CHECK(std::abs(excited_population(r.rho_final, f.excited) - std::exp(-1.0)) < 1e-3);
  CHECK(r.valley_excitation_max == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("landau-zener sweep") {
  const double slope = 1e-3, gap_half = 1e-3, half_range = 20.0, T = 6.0;
  const Device dev = sampled_device(-30.0, 30.0, [&](double x) { return slope * x; }, [&](double) { return gap_half; });
  SimParams p = closed_params();
  p.B_z = 0.0;
  p.db_perp = 0.0;
  DiscretizedTrajectory traj;
  traj.dt = p.dt;
  traj.Tg = T;
  const std::size_t n = step_count(T, p.dt);
  for (std::size_t i = 0; i < n; ++i)
    traj.positions.push_back(-half_range + 2.0 * half_range * (static_cast<double>(i) + 0.5) / static_cast<double>(n));

  const ValleyFrame start = local_valley_frame(*dev.landscape, -half_range);
  const ValleyFrame end = local_valley_frame(*dev.landscape, half_range);
  const EvolutionResult r = evolve(product_state(start.ground, pure_state(Vector2c(1, 0))), traj, dev, p);
  const double P = excited_population(r.rho_final, end.excited);

  // Fine-step Schrödinger oracle for the bare two-level sweep.
  const double hbar = p.constants.hbar;
  Vector2c psi = start.ground;
  const int fine = 16 * static_cast<int>(n);
  const double h = T / fine;
  for (int i = 0; i < fine; ++i) {
    const double re = slope * (-half_range + 2.0 * half_range * (i + 0.5) / fine);
    const double mag = std::hypot(re, gap_half);
    psi = su2_exp(mag * h / hbar, re / mag, gap_half / mag, 0.0) * psi;
  }
  const double P_oracle = std::norm(end.excited.dot(psi));

  const double rate = 2.0 * slope * 2.0 * half_range / T;  // d(diabatic gap)/dt
  const double P_lz = std::exp(-kTwoPi * gap_half * gap_half / (hbar * rate));
  CHECK(std::abs(P - P_oracle) < 1e-4);
  CHECK(std::abs(P - P_lz) / P_lz < 0.02);
}

TEST_CASE("step agrees with the dense liouvillian oracle") {
  const Device dev = generated_device(23);
  SimParams p;
  p.kappa_z = 5e-6;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (auto mode : {Anticommutator::kStandard, Anticommutator::kLiteral})
    for (auto jump : {ValleyJump::kTrueLowering, ValleyJump::kLiteralMatrix}) {
      p.dissipator = {jump, mode};
      for (int i = 0; i < 5; ++i) {
        const DensityMatrix rho{random_density(rng)};
        const double x = u(rng);
        const DensityMatrix a = step(rho, x, 8e-4, dev, p);
        const DensityMatrix b = dense_oracle_step(rho, x, 8e-4, dev, p);
        CHECK(a.trace_distance(b) < 1e-8);
      }
    }
  // Strong decay: the splitting error grows with the rates but stays small.
  p.T1_v = 2.0;
  p.T2_s = 5.0;
  const DensityMatrix rho{random_density(rng)};
  CHECK(step(rho, 4.0, 8e-4, dev, p).trace_distance(dense_oracle_step(rho, 4.0, 8e-4, dev, p)) < 1e-6);
}

TEST_CASE("splitting error is at least second order") {
  const Device dev = generated_device(23);
  SimParams p;
  p.kappa_z = 5e-6;
  p.T1_v = 2.0;
  p.T2_s = 5.0;
  std::mt19937_64 rng(8);
  const DensityMatrix rho{random_density(rng)};
  const double x = 12.0;
  const double e1 = step(rho, x, 2e-3, dev, p).trace_distance(dense_oracle_step(rho, x, 2e-3, dev, p));
  const double e2 = step(rho, x, 1e-3, dev, p).trace_distance(dense_oracle_step(rho, x, 1e-3, dev, p));
  CHECK(e1 / e2 > 4.0);
}

TEST_CASE("oracle without decay is unitary conjugation") {
  const Device dev = generated_device(4);
  const SimParams p = closed_params();
  std::mt19937_64 rng(6);
  const DensityMatrix rho{random_density(rng)};
  const Matrix4c h = hamiltonian_at(5.0, dev, p);
  const Matrix4c u = (cd(0, -1e-3 / p.constants.hbar) * h).exp();
  CHECK(max_abs(dense_oracle_step(rho, 5.0, 1e-3, dev, p).matrix - u * rho.matrix * u.adjoint()) < 1e-12);
}

TEST_CASE("long evolutions keep a physical state") {
  const Device dev = generated_device(31);
  SimParams p;
  p.kappa_z = 5e-6;
  TrajectorySpec s;
  s.x0 = 15.0;
  s.omega = frame_frequency(p);
  s.Tg = 80.0;
  std::mt19937_64 rng(3);
  const DensityMatrix rho{random_density(rng)};
  const EvolutionResult r = evolve(rho, discretize_sinusoid(s, p.dt), dev, p);
  CHECK(r.step_count == 100000);
  CHECK(r.trace_drift < 1e-9);
  CHECK(max_abs(r.rho_final.matrix - r.rho_final.matrix.adjoint()) < 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(r.rho_final.matrix);
  CHECK(es.eigenvalues()(0) > -1e-8);
}

TEST_CASE("purity is conserved without decay") {
  const Device dev = generated_device(31);
  SimParams p = closed_params();
  p.kappa_z = 5e-6;
  TrajectorySpec s;
  s.x0 = 20.0;
  s.omega = 0.56;
  s.Tg = 20.0;
  std::mt19937_64 rng(12);
  const DensityMatrix rho{random_density(rng)};
  const EvolutionResult r = evolve(rho, discretize_sinusoid(s, p.dt), dev, p);
  CHECK(std::abs(r.rho_final.purity() - rho.purity()) < 1e-9);
}

TEST_CASE("halving dt converges at second order") {
  const Device dev = generated_device(31);
  SimParams p;
  p.kappa_z = 5e-6;
  p.T1_v = 20.0;
  TrajectorySpec s;
  s.x0 = 15.0;
  s.omega = 0.56;
  s.Tg = 5.0;
  const DensityMatrix rho = valley_ground_state(dev, 0.0, pure_state(Vector2c(1, 0)));
  std::vector<DensityMatrix> finals;
  for (double dt : {2e-3, 1e-3, 5e-4}) {
    p.dt = dt;
    finals.push_back(evolve(rho, discretize_sinusoid(s, dt), dev, p).rho_final);
  }
  const double ratio = finals[0].trace_distance(finals[1]) / finals[1].trace_distance(finals[2]);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.125));
}

TEST_CASE("spin phase rotation commutes with evolution at constant splitting") {
  const Device dev = flat_device(0.04);
  SimParams p;
  p.T1_v = 5.0;
  p.T2_s = 20.0;
  std::mt19937_64 rng(15);
  const DensityMatrix rho{random_density(rng)};
  const Matrix4c r = kron(pauli::identity(), su2_exp(0.37, 0, 0, 1));
  const auto traj = constant_trajectory(0.0, 4.0, p.dt);
  const DensityMatrix a = evolve(DensityMatrix{r * rho.matrix * r.adjoint()}, traj, dev, p).rho_final;
  const DensityMatrix b = evolve(rho, traj, dev, p).rho_final;
  CHECK(max_abs(a.matrix - r * b.matrix * r.adjoint()) < 1e-9);
}

TEST_CASE("batch evolution") {
  const Device dev = generated_device(2);
  SimParams p;
  TrajectorySpec s;
  s.Tg = 3.0;
  s.omega = 0.56;
  const DiscretizedTrajectory traj = discretize_sinusoid(s, p.dt);
  std::mt19937_64 rng(7);
  std::vector<DensityMatrix> states;
  for (int i = 0; i < 4; ++i) states.push_back(DensityMatrix{random_density(rng)});
  const auto serial = evolve_batch(states, traj, dev, p, 1);
  const auto threaded = evolve_batch(states, traj, dev, p, 4);
  for (int i = 0; i < 4; ++i) {
    const EvolutionResult single = evolve(states[i], traj, dev, p);
    CHECK(serial[i].rho_final.matrix == single.rho_final.matrix);
    CHECK(threaded[i].rho_final.matrix == single.rho_final.matrix);
  }
  const std::vector<DensityMatrix> same(3, states[0]);
  const auto copies = evolve_batch(same, traj, dev, p);
  CHECK(copies[1].rho_final.matrix == copies[0].rho_final.matrix);
  CHECK(copies[2].rho_final.matrix == copies[0].rho_final.matrix);
}

TEST_CASE("bloch axis states are unchanged by identity dynamics") {
  const Device dev = flat_device(0.0);
  SimParams p = closed_params();
  p.B_z = 0.0;
  p.db_perp = 0.0;
  std::vector<DensityMatrix> states;
  Vector2c v(1, 0);
  for (const Matrix2c& s : {pure_state(Vector2c(1, 0)), pure_state(Vector2c(0, 1)), spin_plus(),
                            pure_state(Vector2c(1 / std::sqrt(2.0), cd(0, 1 / std::sqrt(2.0))))})
    states.push_back(product_state(v, s));
  const auto out = evolve_batch(states, constant_trajectory(4.0, 2.0, p.dt), dev, p);
  for (std::size_t i = 0; i < states.size(); ++i) CHECK(max_abs(out[i].rho_final.matrix - states[i].matrix) < 1e-13);
}

TEST_CASE("invalid inputs") {
  const Device dev = flat_device(0.05);
  const SimParams p;
  DensityMatrix bad;
  bad.matrix(0, 1) = 1.0;
  bad.matrix(0, 0) = 1.0;
  CHECK_THROWS_AS(step(bad, 0.0, p.dt, dev, p), NumericalError);
  DensityMatrix negative;
  negative.matrix.diagonal() << 1.5, -0.5, 0, 0;
  CHECK_THROWS_AS(negative.validate(), NumericalError);
  const DensityMatrix ok = valley_ground_state(dev, 0.0, pure_state(Vector2c(1, 0)));
  CHECK_THROWS_AS(evolve(ok, constant_trajectory(0.0, 1.0, 1e-3), dev, p), ConfigError);
  CHECK_THROWS_AS(evolve(ok, constant_trajectory(150.0, 1.0, p.dt), dev, p), RangeError);
}
