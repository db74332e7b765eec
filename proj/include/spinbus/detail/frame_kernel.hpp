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

// Hot-loop kernel of the propagator. The state is stored in the local valley
// eigenbasis {|g(x)⟩, |e(x)⟩} of the current step, as three spin blocks
// (gg, ge, ee); the eg block is ge†. In that basis every term of H(x) is
// block diagonal, so a step is two 2×2 SU(2) exponentials, and both valley
// jump operators are independent of the valley phase.

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "spinbus/hamiltonian.hpp"
#include "spinbus/linalg.hpp"
#include "spinbus/params.hpp"

namespace spinbus::detail {

struct FrameState {
  Matrix2c gg = Matrix2c::Zero();
  Matrix2c ge = Matrix2c::Zero();
  Matrix2c ee = Matrix2c::Zero();

  cd trace() const { return gg.trace() + ee.trace(); }
  double excited_population() const { return ee.trace().real(); }
  Matrix2c spin() const { return gg + ee; }
};

// Landscape-derived quantities at one step.
struct StepGeometry {
  double magnitude = 0.0;   // |Δ|, meV
  double phase = 0.0;       // φ_V, rad
  double d_magnitude = 0.0;  // d|Δ|/dx, meV/nm
  double d_phase = 0.0;      // dφ_V/dx, rad/nm
};

StepGeometry step_geometry(const Device& device, double displacement);

// exp(-i k (a σz + b σx)) and its derivative with respect to b.
struct Su2Exp {
  Matrix2c value;
  Matrix2c d_b;
};
Su2Exp su2_exp_zx(double k, double a, double b, bool with_derivative);

// Half-step unitaries of the ground (s = −1) and excited (s = +1) sectors:
// u_s = exp(-i k (s|Δ| + (ε − sκ) σz + b σx)), k = dt/(2ħ).
struct HalfStep {
  Matrix2c ug;
  Matrix2c ue;
};

struct SectorCoefficients {
  double k = 0.0;          // dt/(2ħ), rad/meV
  double a_ground = 0.0;  // ε + κ
  double a_excited = 0.0;  // ε − κ
  double drive = 0.0;     // meV/nm
};
SectorCoefficients sector_coefficients(const SimParams& p, double dt);

HalfStep half_step(const SectorCoefficients& c, double magnitude, double b);

// Rotation of the valley frame by δ = φ_new − φ_old.
struct FrameRotation {
  double c2 = 1.0;  // cos²(δ/2)
  double s2 = 0.0;  // sin²(δ/2)
  double sd = 0.0;  // sin δ; the off-diagonal coefficient is q = −(i/2) sin δ
};
inline FrameRotation frame_rotation(double delta) {
  const double c = std::cos(0.5 * delta);
  const double s = std::sin(0.5 * delta);
  return {c * c, s * s, std::sin(delta)};
}

inline void rotate(FrameState& st, const FrameRotation& r) {
  const cd q(0.0, -0.5 * r.sd);
  const Matrix2c eg = st.ge.adjoint();
  const Matrix2c gg = r.c2 * st.gg + r.s2 * st.ee + q * st.ge + std::conj(q) * eg;
  const Matrix2c ge = q * st.gg + r.c2 * st.ge + r.s2 * eg + std::conj(q) * st.ee;
  const Matrix2c ee = r.s2 * st.gg + r.c2 * st.ee + std::conj(q) * st.ge + q * eg;
  st.gg = gg;
  st.ge = ge;
  st.ee = ee;
}

// Derivative of rotate() with respect to δ, applied to `st`.
inline FrameState rotate_derivative(const FrameState& st, double delta) {
  const double hs = 0.5 * std::sin(delta);
  const cd dq(0.0, -0.5 * std::cos(delta));
  const Matrix2c eg = st.ge.adjoint();
  FrameState d;
  d.gg = -hs * st.gg + hs * st.ee + dq * st.ge + std::conj(dq) * eg;
  d.ge = dq * st.gg - hs * st.ge + hs * eg + std::conj(dq) * st.ee;
  d.ee = hs * st.gg - hs * st.ee + std::conj(dq) * st.ge + dq * eg;
  return d;
}

inline void apply_unitary(FrameState& st, const HalfStep& u) {
  st.gg = u.ug * st.gg * u.ug.adjoint();
  st.ge = u.ug * st.ge * u.ue.adjoint();
  st.ee = u.ue * st.ee * u.ue.adjoint();
}

inline void apply_unitary_adjoint(FrameState& st, const HalfStep& u) {
  st.gg = u.ug.adjoint() * st.gg * u.ug;
  st.ge = u.ug.adjoint() * st.ge * u.ue;
  st.ee = u.ue.adjoint() * st.ee * u.ue;
}

// Exact dissipative map over one full step in the local frame: valley channel
// (4×4 superoperator over the valley pairs gg, ge, eg, ee) times spin
// dephasing of the off-diagonal spin elements.
struct Dissipator {
  Eigen::Matrix4cd valley = Eigen::Matrix4cd::Identity();
  double spin_coherence = 1.0;  // exp(−2 dt / T2_s)
  bool amplitude_damping = true;  // valley map has the sparse amplitude-damping form
  double damp_p = 0.0;            // 1 − exp(−dt/T1_v)

  void apply(FrameState& st) const;
  void apply_adjoint(FrameState& st) const;
};

Dissipator make_dissipator(const SimParams& p, double dt);

// Valley jump operator in the local frame (rows and columns ordered g, e).
Matrix2c local_jump(ValleyJump mode);

// Re⟨λ, X⟩ = Re Tr(λ† X) for states with the Hermitian block structure.
inline double inner(const FrameState& lam, const FrameState& x) {
  return (lam.gg.adjoint() * x.gg).trace().real() + 2.0 * (lam.ge.adjoint() * x.ge).trace().real() +
         (lam.ee.adjoint() * x.ee).trace().real();
}

}  // namespace spinbus::detail
