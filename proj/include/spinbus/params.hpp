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

#include <limits>

#include "spinbus/constants.hpp"

namespace spinbus {

// Prefactor of the transverse drive term relative to gμ_B ∂b⊥ x.
//  kMatchedRabi: H_drive = gμ_B ∂b⊥ x σx. With a linear drive this gives the
//                rotating-frame Rabi rate gμ_B ∂b⊥ x0 / ħ, i.e. a π rotation after
//                πħ/(gμ_B ∂b⊥ x0).
//  kHalfPrefactor: H_drive = ½ gμ_B ∂b⊥ x σx, the same prefactor as the Zeeman
//                term; the π time is then twice as long.
enum class DriveNormalization { kMatchedRabi, kHalfPrefactor };

// Valley jump operator used in the relaxation channel.
//  kTrueLowering: |g(x)⟩⟨e(x)| in the local valley eigenbasis.
//  kLiteralMatrix: [[1, e^{-iφ}], [e^{iφ}, -1]] (Hermitian).
enum class ValleyJump { kTrueLowering, kLiteralMatrix };

// Anticommutator in D[L]ρ = LρL† − ½{M, ρ}.
//  kStandard: M = L†L.  kLiteral: M = LL†.
enum class Anticommutator { kStandard, kLiteral };

struct DissipatorMode {
  ValleyJump jump = ValleyJump::kTrueLowering;
  Anticommutator anticommutator = Anticommutator::kStandard;
};

inline constexpr double kNoDecay = std::numeric_limits<double>::infinity();

struct SimParams {
  double B_z = 20.0;       // mT
  double db_perp = 0.1;    // mT/nm
  double db_par = 0.02;    // mT/nm
  double Q = 5.0;          // ∂b⊥/∂b∥
  bool q_linked = false;   // when set, db_perp is derived as Q·db_par
  double kappa_z = 0.0;    // meV
  double T1_v = 100.0;     // ns; kNoDecay disables valley relaxation
  double T2_s = 2.0e4;     // ns; kNoDecay disables spin dephasing
  double dx_rms = 4.0e-3;  // nm
  double dt = 8.0e-4;      // ns
  DriveNormalization drive = DriveNormalization::kMatchedRabi;
  DissipatorMode dissipator{};
  PhysicalConstants constants{};

  // Transverse gradient actually used by the drive term.
  double effective_db_perp() const { return q_linked ? Q * db_par : db_perp; }

  // Throws ConfigError when an invariant is violated.
  void validate() const;
};

inline constexpr double kMaxTimeStep = 2.0e-3;  // ns

}  // namespace spinbus
