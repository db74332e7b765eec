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

#include "spinbus/fidelity.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "spinbus/detail/spin_batch.hpp"
#include "spinbus/errors.hpp"

namespace spinbus {

Matrix2c pi_rotation_y() { return su2_exp(0.5 * kPi, 0.0, 1.0, 0.0); }

void GateTarget::validate() const {
  const double dev = (U_G.adjoint() * U_G - Matrix2c::Identity()).cwiseAbs().maxCoeff();
  if (dev > 1e-12) throw ConfigError("target gate is not unitary");
  if (!(Omega_R >= 0.0)) throw ConfigError("target precession rate must be nonnegative");
  if (!(Tg >= 0.0)) throw ConfigError("target gate time must be nonnegative");
}

GateTarget make_target(const SimParams& p, double duration, const Matrix2c& U_G) {
  GateTarget t;
  t.U_G = U_G;
  t.Omega_R = kTwoPi * frame_frequency(p);
  t.Tg = duration;
  return t;
}

std::array<Matrix2c, 4> default_spin_inputs() {
  const double r = 1.0 / std::sqrt(2.0);
  return {pure_state(Vector2c(1.0, 0.0)), pure_state(Vector2c(0.0, 1.0)),
          pure_state(Vector2c(r, r)), pure_state(Vector2c(r, cd(0.0, r)))};
}

Matrix2c SpinChannel::apply(const Matrix2c& rho) const {
  Matrix2c out = Matrix2c::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out += rho(i, j) * basis_images[2 * i + j];
  return out;
}

double SpinChannel::trace_defect() const {
  double worst = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      worst = std::max(worst, std::abs(basis_images[2 * i + j].trace() - (i == j ? 1.0 : 0.0)));
  return worst;
}

Eigen::Matrix4cd reconstruction_coefficients(std::span<const Matrix2c> inputs) {
  if (inputs.size() != 4) throw ConfigError("channel reconstruction needs exactly four input states");
  Eigen::Matrix4cd m;
  for (int k = 0; k < 4; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) m(2 * i + j, k) = inputs[k](i, j);
  Eigen::FullPivLU<Eigen::Matrix4cd> lu(m);
  lu.setThreshold(1e-9);
  if (!lu.isInvertible())
    throw NumericalError("input spin states are not tomographically complete");
  // Column (2i+j) of M⁻¹ holds the weights of |i⟩⟨j| over the inputs.
  return lu.inverse().transpose();
}

SpinChannel spin_channel_from_outputs(std::span<const Matrix2c> inputs,
                                      std::span<const Matrix2c> outputs) {
  if (outputs.size() != inputs.size()) throw ConfigError("channel reconstruction: size mismatch");
  const Eigen::Matrix4cd a = reconstruction_coefficients(inputs);
  SpinChannel ch;
  for (int ij = 0; ij < 4; ++ij) {
    ch.basis_images[ij] = Matrix2c::Zero();
    for (int k = 0; k < 4; ++k) ch.basis_images[ij] += a(ij, k) * outputs[k];
  }
  return ch;
}

SpinChannel spin_channel_from_batch(std::span<const EvolutionResult> results,
                                    std::span<const Matrix2c> inputs) {
  std::vector<Matrix2c> outputs;
  outputs.reserve(results.size());
  for (const EvolutionResult& r : results) outputs.push_back(r.rho_final.spin());
  return spin_channel_from_outputs(inputs, outputs);
}

Matrix2c counter_rotation(const GateTarget& target) {
  return su2_exp(0.5 * target.Omega_R * target.Tg, 0.0, 0.0, 1.0);
}

FidelityReport average_gate_fidelity(const SpinChannel& channel, const GateTarget& target) {
  const Matrix2c u = counter_rotation(target) * target.U_G;
  cd f = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      // Tr(U|j⟩⟨i|U† E_ij) = ⟨i|U† E_ij U|j⟩
      f += (u.adjoint() * channel.basis_images[2 * i + j] * u)(i, j);
    }
  FidelityReport r;
  r.F_ent = 0.25 * f.real();
  r.F_avg = (2.0 * r.F_ent + 1.0) / 3.0;
  r.infidelity = 1.0 - r.F_avg;
  return r;
}

double unitary_entanglement_fidelity(const Matrix2c& U, const Matrix2c& V) {
  return 0.25 * std::norm((U.adjoint() * V).trace());
}

namespace detail {

SpinBatchOutput propagate_spin_batch(const StepTable& t, const std::array<Matrix2c, 4>& inputs) {
  SpinBatchOutput out;
  for (int k = 0; k < 4; ++k) {
    FrameState st = initial_frame_state(t, inputs[k]);
    double excited = st.excited_population();
    for (std::size_t n = 0; n < t.size(); ++n) {
      forward_step(st, t, n);
      excited = std::max(excited, st.excited_population());
    }
    out.spin[k] = st.spin();
    out.valley_excitation_max = std::max(out.valley_excitation_max, excited);
    out.trace_drift = std::max(out.trace_drift, std::abs(st.trace() - 1.0));
  }
  out.valley_excitation_max = std::clamp(out.valley_excitation_max, 0.0, 1.0);
  return out;
}

}  // namespace detail

FidelityReport evaluate_discretized(const DiscretizedTrajectory& traj, const Device& device,
                                    const SimParams& p, const Matrix2c& U_G) {
  p.validate();
  if (std::abs(traj.dt - p.dt) > 1e-12 * p.dt)
    throw ConfigError("trajectory time step does not match SimParams.dt");
  const detail::StepTable t = detail::build_step_table(traj.positions, traj.dt, device, p);
  const auto inputs = default_spin_inputs();
  const detail::SpinBatchOutput out = detail::propagate_spin_batch(t, inputs);
  for (const Matrix2c& s : out.spin)
    if (!s.allFinite()) throw NumericalError("propagation produced non-finite spin state");
  const SpinChannel ch = spin_channel_from_outputs(inputs, out.spin);
  FidelityReport r = average_gate_fidelity(ch, make_target(p, traj.duration(), U_G));
  r.valley_excitation_max = out.valley_excitation_max;
  return r;
}

FidelityReport evaluate_trajectory(const ControlVector& controls, const Device& device,
                                   const SimParams& p, const Matrix2c& U_G,
                                   const UpsampleOptions& options) {
  return evaluate_discretized(upsample(controls, p.dt, options), device, p, U_G);
}

FidelityReport evaluate_sinusoid(const TrajectorySpec& spec, const Device& device,
                                 const SimParams& p, const Matrix2c& U_G) {
  return evaluate_discretized(discretize_sinusoid(spec, p.dt), device, p, U_G);
}

}  // namespace spinbus
