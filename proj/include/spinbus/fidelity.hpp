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

#include <array>
#include <span>
#include <vector>

#include "spinbus/hamiltonian.hpp"
#include "spinbus/linalg.hpp"
#include "spinbus/params.hpp"
#include "spinbus/propagator.hpp"
#include "spinbus/pulse.hpp"

namespace spinbus {

// exp(−iπσy/2), a π rotation about y.
Matrix2c pi_rotation_y();

struct GateTarget {
  Matrix2c U_G = pi_rotation_y();
  double Omega_R = 0.0;  // rad/ns, ħΩ_R = gμ_B B_z + 2κ_z
  double Tg = 0.0;       // ns, time over which the frame precesses
  void validate() const;
};

// Target for a propagation of `duration` ns under p.
GateTarget make_target(const SimParams& p, double duration, const Matrix2c& U_G = pi_rotation_y());

// Default tomographic inputs |0⟩, |1⟩, |+⟩, |+i⟩.
std::array<Matrix2c, 4> default_spin_inputs();

// Linear map on 2×2 operators stored through its action on |i⟩⟨j| (index 2i + j).
struct SpinChannel {
  std::array<Matrix2c, 4> basis_images;
  Matrix2c apply(const Matrix2c& rho) const;
  // max |Tr E(|i⟩⟨j|) − δ_ij|
  double trace_defect() const;
};

// Coefficients a with |i⟩⟨j| = Σ_k a(2i+j, k) ρ_k. Throws NumericalError when
// the inputs are not tomographically complete.
Eigen::Matrix4cd reconstruction_coefficients(std::span<const Matrix2c> inputs);

SpinChannel spin_channel_from_outputs(std::span<const Matrix2c> inputs,
                                      std::span<const Matrix2c> outputs);
SpinChannel spin_channel_from_batch(std::span<const EvolutionResult> results,
                                    std::span<const Matrix2c> inputs);

// U_R = exp(−i Ω_R T_g σz/2): free precession of the spin in the valley ground
// state over the gate. The comparison unitary is U_R·U_G.
Matrix2c counter_rotation(const GateTarget& target);

struct FidelityReport {
  double F_ent = 0.0;
  double F_avg = 0.0;
  double infidelity = 1.0;
  double valley_excitation_max = 0.0;
};

FidelityReport average_gate_fidelity(const SpinChannel& channel, const GateTarget& target);
// Entanglement fidelity of a unitary channel V against U: |Tr(U†V)|²/4.
double unitary_entanglement_fidelity(const Matrix2c& U, const Matrix2c& V);

// Piecewise-constant trajectory → channel → fidelity, with the valley starting
// in its local ground state at displacement 0 and the frame matched to the
// propagated duration.
FidelityReport evaluate_discretized(const DiscretizedTrajectory& traj, const Device& device,
                                    const SimParams& p, const Matrix2c& U_G = pi_rotation_y());

FidelityReport evaluate_trajectory(const ControlVector& controls, const Device& device,
                                   const SimParams& p, const Matrix2c& U_G = pi_rotation_y(),
                                   const UpsampleOptions& options = {});

// Analytical pulse: shaped sinusoid sampled exactly on the time grid.
FidelityReport evaluate_sinusoid(const TrajectorySpec& spec, const Device& device,
                                 const SimParams& p, const Matrix2c& U_G = pi_rotation_y());

}  // namespace spinbus
