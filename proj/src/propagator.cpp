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

#include "spinbus/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "spinbus/detail/step_table.hpp"
#include "spinbus/errors.hpp"
#include "spinbus/parallel.hpp"

namespace spinbus {

using detail::FrameState;
using detail::StepTable;

void DensityMatrix::validate(double tol, double eig_tol) const {
  if (!matrix.allFinite()) throw NumericalError("density matrix has non-finite entries");
  const double herm = (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol) throw NumericalError("density matrix is not Hermitian (deviation " + std::to_string(herm) + ")");
  const double tr = std::abs(matrix.trace() - 1.0);
  if (tr > tol) throw NumericalError("density matrix trace differs from 1 by " + std::to_string(tr));
  const Matrix4c h = 0.5 * (matrix + matrix.adjoint());
  const double lowest = Eigen::SelfAdjointEigenSolver<Matrix4c>(h, Eigen::EigenvaluesOnly).eigenvalues()(0);
  if (lowest < -eig_tol)
    throw NumericalError("density matrix has negative eigenvalue " + std::to_string(lowest));
}

double DensityMatrix::trace_distance(const DensityMatrix& other) const {
  const Matrix4c d = matrix - other.matrix;
  const Matrix4c h = 0.5 * (d + d.adjoint());
  return 0.5 * Eigen::SelfAdjointEigenSolver<Matrix4c>(h, Eigen::EigenvaluesOnly)
                   .eigenvalues()
                   .cwiseAbs()
                   .sum();
}

double DensityMatrix::purity() const { return (matrix * matrix).trace().real(); }

Matrix2c DensityMatrix::spin() const {
  return matrix.block<2, 2>(0, 0) + matrix.block<2, 2>(2, 2);
}

Matrix2c pure_state(const Vector2c& psi) { return psi * psi.adjoint(); }

DensityMatrix product_state(const Vector2c& valley, const Matrix2c& spin) {
  return DensityMatrix{kron(pure_state(valley), spin)};
}

DensityMatrix valley_ground_state(const Device& device, double x, const Matrix2c& spin) {
  const double phase = valley_phase(*device.landscape, device.position(x));
  return product_state(valley_frame_for_phase(phase).ground, spin);
}

namespace detail {

StepTable build_step_table(std::span<const double> positions, double dt, const Device& device,
                           const SimParams& p, bool keep_geometry) {
  if (positions.empty()) throw ConfigError("trajectory has no steps");
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  StepTable t;
  t.coeff = sector_coefficients(p, dt);
  t.dissipator = make_dissipator(p, dt);
  const std::size_t n = positions.size();
  t.half.resize(n);
  t.rotation.resize(n);
  t.delta.assign(n, 0.0);
  if (keep_geometry) t.geometry.resize(n);
  t.phase_ref = step_geometry(device, 0.0).phase;

  double prev_phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = positions[i];
    if (!std::isfinite(x)) throw NumericalError("non-finite position at step " + std::to_string(i));
    const StepGeometry g = step_geometry(device, x);
    if (keep_geometry) t.geometry[i] = g;
    t.half[i] = half_step(t.coeff, g.magnitude, t.coeff.drive * x);
    if (i == 0) {
      t.initial_delta = g.phase - t.phase_ref;
    } else {
      t.delta[i - 1] = g.phase - prev_phase;
      t.rotation[i - 1] = frame_rotation(t.delta[i - 1]);
    }
    prev_phase = g.phase;
  }
  return t;
}

void attach_derivatives(StepTable& t, std::span<const double> positions) {
  if (t.geometry.size() != t.size()) throw ConfigError("step table was built without geometry");
  t.d_half.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double b = t.coeff.drive * positions[i];
    // Stored as G = u†∂u/∂b; the valley phase factor cancels.
    const Su2Exp g = su2_exp_zx(t.coeff.k, t.coeff.a_ground, b, true);
    const Su2Exp e = su2_exp_zx(t.coeff.k, t.coeff.a_excited, b, true);
    t.d_half[i].ug = g.value.adjoint() * g.d_b;
    t.d_half[i].ue = e.value.adjoint() * e.d_b;
  }
}

FrameState initial_frame_state(const StepTable& t, const Matrix2c& spin) {
  FrameState st;
  st.gg = spin;
  rotate(st, frame_rotation(t.initial_delta));
  return st;
}

FrameState to_local(const Matrix4c& rho, double phase) {
  const ValleyFrame f = valley_frame_for_phase(phase);
  Matrix2c v;
  v.col(0) = f.ground;
  v.col(1) = f.excited;
  const Matrix4c u = kron(v, Matrix2c::Identity());
  const Matrix4c loc = u.adjoint() * rho * u;
  FrameState st;
  st.gg = loc.block<2, 2>(0, 0);
  st.ge = loc.block<2, 2>(0, 2);
  st.ee = loc.block<2, 2>(2, 2);
  return st;
}

Matrix4c to_fixed(const FrameState& st, double phase) {
  const ValleyFrame f = valley_frame_for_phase(phase);
  Matrix2c v;
  v.col(0) = f.ground;
  v.col(1) = f.excited;
  const Matrix4c u = kron(v, Matrix2c::Identity());
  Matrix4c loc;
  loc.block<2, 2>(0, 0) = st.gg;
  loc.block<2, 2>(0, 2) = st.ge;
  loc.block<2, 2>(2, 0) = st.ge.adjoint();
  loc.block<2, 2>(2, 2) = st.ee;
  return u * loc * u.adjoint();
}

}  // namespace detail

DensityMatrix step(const DensityMatrix& rho, double x, double dt, const Device& device,
                   const SimParams& p) {
  rho.validate(1e-9, 1e-8);
  const detail::StepGeometry g = detail::step_geometry(device, x);
  const detail::SectorCoefficients c = detail::sector_coefficients(p, dt);
  const detail::HalfStep u = detail::half_step(c, g.magnitude, c.drive * x);
  const detail::Dissipator d = detail::make_dissipator(p, dt);
  FrameState st = detail::to_local(rho.matrix, g.phase);
  detail::apply_unitary(st, u);
  d.apply(st);
  detail::apply_unitary(st, u);
  return DensityMatrix{detail::to_fixed(st, g.phase)};
}

namespace {

EvolutionResult run(const DensityMatrix& rho0, const StepTable& t, double first_phase,
                    double last_phase) {
  FrameState st = detail::to_local(rho0.matrix, first_phase);
  double excited = st.excited_population();
  const std::size_t n = t.size();
  for (std::size_t i = 0; i < n; ++i) {
    detail::forward_step(st, t, i);
    excited = std::max(excited, st.excited_population());
  }
  EvolutionResult r;
  r.rho_final = DensityMatrix{detail::to_fixed(st, last_phase)};
  r.trace_drift = std::abs(st.trace() - 1.0);
  r.valley_excitation_max = std::clamp(excited, 0.0, 1.0);
  r.step_count = n;
  if (!r.rho_final.matrix.allFinite()) throw NumericalError("evolution produced non-finite state");
  return r;
}

void check_trajectory(const DiscretizedTrajectory& traj, const SimParams& p) {
  if (traj.positions.empty()) throw ConfigError("trajectory has no steps");
  if (std::abs(traj.dt - p.dt) > 1e-12 * p.dt)
    throw ConfigError("trajectory time step does not match SimParams.dt");
}

}  // namespace

EvolutionResult evolve(const DensityMatrix& rho0, const DiscretizedTrajectory& traj,
                       const Device& device, const SimParams& p) {
  std::vector<EvolutionResult> out = evolve_batch(std::span(&rho0, 1), traj, device, p);
  return out.front();
}

std::vector<EvolutionResult> evolve_batch(std::span<const DensityMatrix> rho0,
                                          const DiscretizedTrajectory& traj, const Device& device,
                                          const SimParams& p, unsigned workers) {
  p.validate();
  check_trajectory(traj, p);
  for (const DensityMatrix& r : rho0) r.validate(1e-9, 1e-8);
  const StepTable t = detail::build_step_table(traj.positions, traj.dt, device, p);
  const double first = valley_phase(*device.landscape, device.position(traj.positions.front()));
  const double last = valley_phase(*device.landscape, device.position(traj.positions.back()));
  std::vector<EvolutionResult> out(rho0.size());
  parallel_for(rho0.size(), workers, [&](std::size_t k) { out[k] = run(rho0[k], t, first, last); });
  return out;
}

namespace {

using Matrix16c = Eigen::Matrix<cd, 16, 16>;

Matrix16c kron4(const Matrix4c& a, const Matrix4c& b) {
  Matrix16c out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out.block<4, 4>(4 * i, 4 * j) = a(i, j) * b;
  return out;
}

// Column-major vec: vec(AρB) = (Bᵀ ⊗ A) vec ρ.
void add_dissipator(Matrix16c& gen, const Matrix4c& l, const Matrix4c& m, double rate) {
  const Matrix4c one = Matrix4c::Identity();
  gen += rate * (kron4(l.conjugate(), l) - 0.5 * kron4(one, m) - 0.5 * kron4(m.transpose(), one));
}

}  // namespace

DensityMatrix dense_oracle_step(const DensityMatrix& rho, double x, double dt, const Device& device,
                                const SimParams& p) {
  const Matrix4c h = hamiltonian_at(x, device, p) / p.constants.hbar;
  const Matrix4c one = Matrix4c::Identity();
  Matrix16c gen = -kI * (kron4(one, h) - kron4(h.transpose(), one));
  if (!std::isinf(p.T1_v)) {
    const double phase = valley_phase(*device.landscape, device.position(x));
    const Matrix4c l = kron(jump_operator_for_phase(phase, p.dissipator.jump), Matrix2c::Identity());
    const Matrix4c m = p.dissipator.anticommutator == Anticommutator::kStandard
                           ? Matrix4c(l.adjoint() * l)
                           : Matrix4c(l * l.adjoint());
    add_dissipator(gen, l, m, 1.0 / p.T1_v);
  }
  if (!std::isinf(p.T2_s)) {
    const Matrix4c l = kron(Matrix2c::Identity(), pauli::z());
    add_dissipator(gen, l, l.adjoint() * l, 1.0 / p.T2_s);
  }
  const Matrix16c prop = (gen * dt).exp();
  Eigen::Matrix<cd, 16, 1> v = Eigen::Map<const Eigen::Matrix<cd, 16, 1>>(rho.matrix.data());
  v = prop * v;
  DensityMatrix out;
  Eigen::Map<Eigen::Matrix<cd, 16, 1>>(out.matrix.data()) = v;
  return out;
}

}  // namespace spinbus
