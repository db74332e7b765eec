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

#include <memory>
#include <utility>

#include "spinbus/landscape.hpp"
#include "spinbus/linalg.hpp"
#include "spinbus/params.hpp"

namespace spinbus {

// A landscape together with the device position the drive oscillates around.
// The electron at displacement x sits at landscape position origin + x and sees
// the transverse field ∂b⊥·x.
struct Device {
  std::shared_ptr<const LandscapeProfile> landscape;
  double origin = 0.0;  // nm

  double position(double displacement) const { return origin + displacement; }
};

Device make_device(LandscapeProfile profile, double origin = 0.0);

// Valley basis {|+k_z⟩, |−k_z⟩} ⊗ spin basis {|0⟩, |1⟩}, meV.
Matrix4c hamiltonian_at(double x, const Device& device, const SimParams& p);

// Drive coefficient c such that H_drive = c·x·σx (meV/nm).
double drive_coefficient(const SimParams& p);
// ½ g μ_B B_z, meV.
double zeeman_half_splitting(const SimParams& p);

// E_V = 2|Δ(x)| in meV and φ_V = arg Δ(x) in (−π, π]; φ_V = 0 where Δ = 0.
double valley_splitting(const LandscapeProfile& landscape, double x);
double valley_phase(const LandscapeProfile& landscape, double x);
double valley_phase(double delta_re, double delta_im);

struct ValleyFrame {
  Vector2c ground;   // eigenvalue −E_V/2 of H_valley
  Vector2c excited;  // eigenvalue +E_V/2
};

// Eigenvectors of cos φ τx + sin φ τy with the |+k_z⟩ component real and positive.
ValleyFrame valley_frame_for_phase(double phase);
// Throws NumericalError at a degenerate point (E_V = 0).
ValleyFrame local_valley_frame(const LandscapeProfile& landscape, double x);

Matrix2c jump_operator_for_phase(double phase, ValleyJump mode);
Matrix2c jump_operator_valley(const LandscapeProfile& landscape, double x,
                              ValleyJump mode = ValleyJump::kTrueLowering);

// Cyclic frequencies in GHz.
double larmor_frequency(const SimParams& p);
double rabi_frequency(const SimParams& p, double x0);
// √(δ² + f_Rabi²) with the detuning δ = f_drive − f_Larmor (GHz).
double generalized_rabi(const SimParams& p, double x0, double detuning);
// Precession frequency of the spin with the valley in its ground state,
// (gμ_B B_z + 2κ_z)/h.
double frame_frequency(const SimParams& p);

// π time of a constant-amplitude drive: T_g = πħ/(gμ_B ∂b⊥ x0), ns.
double analytical_gate_time(const SimParams& p, double x0);
// Inverse of analytical_gate_time, nm.
double analytical_amplitude(const SimParams& p, double Tg);

// Charge-noise limited dephasing time 2h√ln2/(π gμ_B ∂b∥ δx_rms), ns.
double t2_star(const SimParams& p);
// Same quantity written through Q and the transverse gradient.
double t2_star_from_transverse(const SimParams& p);

}  // namespace spinbus
