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

#include <span>
#include <vector>

#include "spinbus/detail/frame_kernel.hpp"

namespace spinbus::detail {

// Everything the forward loop needs, tabulated once per trajectory.
struct StepTable {
  SectorCoefficients coeff;
  Dissipator dissipator;
  std::vector<HalfStep> half;
  std::vector<FrameRotation> rotation;  // frame n → n+1; identity on the last step
  std::vector<StepGeometry> geometry;   // filled only when requested
  std::vector<HalfStep> d_half;         // u†∂u/∂b per sector, filled by attach_derivatives
  std::vector<double> delta;            // φ_{n+1} − φ_n
  double phase_ref = 0.0;               // valley phase at displacement 0
  double initial_delta = 0.0;           // φ_0 − phase_ref
  std::size_t size() const { return half.size(); }
};

StepTable build_step_table(std::span<const double> positions, double dt, const Device& device,
                           const SimParams& p, bool keep_geometry = false);

// Requires geometry; positions must be the ones the table was built from.
void attach_derivatives(StepTable& t, std::span<const double> positions);

inline void forward_step(FrameState& st, const StepTable& t, std::size_t n) {
  const HalfStep& u = t.half[n];
  apply_unitary(st, u);
  t.dissipator.apply(st);
  apply_unitary(st, u);
  if (t.rotation[n].s2 != 0.0) rotate(st, t.rotation[n]);
}

// Valley ground state at displacement 0 carrying spin σ, expressed in the
// local frame of the first step.
FrameState initial_frame_state(const StepTable& t, const Matrix2c& spin);

// Conversions between the fixed basis and the local frame with phase φ.
FrameState to_local(const Matrix4c& rho, double phase);
Matrix4c to_fixed(const FrameState& st, double phase);

}  // namespace spinbus::detail
