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

#include "spinbus/detail/frame_kernel.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace spinbus::detail {

StepGeometry step_geometry(const Device& device, double displacement) {
  const ValleyCoupling c = device.landscape->coupling_at(device.position(displacement));
  StepGeometry g;
  const double m2 = c.re * c.re + c.im * c.im;
  g.magnitude = std::sqrt(m2);
  g.phase = valley_phase(c.re, c.im);
  if (m2 > 0.0) {
    g.d_magnitude = (c.re * c.d_re + c.im * c.d_im) / g.magnitude;
    g.d_phase = (c.re * c.d_im - c.im * c.d_re) / m2;
  }
  return g;
}

Su2Exp su2_exp_zx(double k, double a, double b, bool with_derivative) {
  Su2Exp out;
  const double r = std::hypot(a, b);
  if (r == 0.0) {
    out.value = Matrix2c::Identity();
    if (with_derivative) out.d_b = Matrix2c(-kI * k * pauli::x());
    return out;
  }
  const double theta = k * r;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double nz = a / r;
  const double nx = b / r;
  out.value << cd(c, -s * nz), cd(0.0, -s * nx), cd(0.0, -s * nx), cd(c, s * nz);
  if (!with_derivative) return out;
  // U = c·1 − i s (nz σz + nx σx); dθ/db = k nx, dnz/db = −nz nx / r, dnx/db = nz² / r.
  const double dtheta = k * nx;
  const double dc = -s * dtheta;
  const double ds = c * dtheta;
  const double dnz = -nz * nx / r;
  const double dnx = nz * nz / r;
  const double gz = ds * nz + s * dnz;
  const double gx = ds * nx + s * dnx;
  out.d_b << cd(dc, -gz), cd(0.0, -gx), cd(0.0, -gx), cd(dc, gz);
  return out;
}

SectorCoefficients sector_coefficients(const SimParams& p, double dt) {
  SectorCoefficients c;
  c.k = 0.5 * dt / p.constants.hbar;
  const double eps = zeeman_half_splitting(p);
  c.a_ground = eps + p.kappa_z;
  c.a_excited = eps - p.kappa_z;
  c.drive = drive_coefficient(p);
  return c;
}

HalfStep half_step(const SectorCoefficients& c, double magnitude, double b) {
  const cd phase = std::polar(1.0, magnitude * c.k);
  HalfStep h;
  h.ug = phase * su2_exp_zx(c.k, c.a_ground, b, false).value;
  h.ue = std::conj(phase) * su2_exp_zx(c.k, c.a_excited, b, false).value;
  return h;
}

Matrix2c local_jump(ValleyJump mode) {
  Matrix2c l;
  if (mode == ValleyJump::kTrueLowering) {
    l << 0.0, 1.0, 0.0, 0.0;
  } else {
    l << -1.0, 1.0, 1.0, 1.0;
  }
  return l;
}

Dissipator make_dissipator(const SimParams& p, double dt) {
  Dissipator d;
  d.spin_coherence = std::isinf(p.T2_s) ? 1.0 : std::exp(-2.0 * dt / p.T2_s);
  if (std::isinf(p.T1_v)) {
    d.amplitude_damping = true;
    d.damp_p = 0.0;
    return d;
  }
  const double rate = 1.0 / p.T1_v;
  if (p.dissipator.jump == ValleyJump::kTrueLowering &&
      p.dissipator.anticommutator == Anticommutator::kStandard) {
    d.amplitude_damping = true;
    d.damp_p = -std::expm1(-rate * dt);
    return d;
  }
  // Generic valley Lindbladian on vec ordering (gg, ge, eg, ee) = 2a + b.
  const Matrix2c l = local_jump(p.dissipator.jump);
  const Matrix2c m = p.dissipator.anticommutator == Anticommutator::kStandard
                         ? Matrix2c(l.adjoint() * l)
                         : Matrix2c(l * l.adjoint());
  Eigen::Matrix4cd gen = Eigen::Matrix4cd::Zero();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int e = 0; e < 2; ++e) {
          cd v = l(a, c) * std::conj(l(b, e));
          if (b == e) v -= 0.5 * m(a, c);
          if (a == c) v -= 0.5 * m(e, b);
          gen(2 * a + b, 2 * c + e) = v;
        }
  d.amplitude_damping = false;
  d.valley = (gen * (rate * dt)).exp();
  return d;
}

void Dissipator::apply(FrameState& st) const {
  if (amplitude_damping) {
    if (damp_p != 0.0) {
      st.gg += damp_p * st.ee;
      st.ge *= std::sqrt(1.0 - damp_p);
      st.ee *= 1.0 - damp_p;
    }
  } else {
    const Matrix2c eg = st.ge.adjoint();
    Matrix2c gg, ge, ee;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const Eigen::Vector4cd v(st.gg(i, j), st.ge(i, j), eg(i, j), st.ee(i, j));
        gg(i, j) = (valley.row(0) * v)(0);
        ge(i, j) = (valley.row(1) * v)(0);
        ee(i, j) = (valley.row(3) * v)(0);
      }
    st.gg = gg;
    st.ge = ge;
    st.ee = ee;
  }
  if (spin_coherence != 1.0) {
    for (Matrix2c* b : {&st.gg, &st.ge, &st.ee}) {
      (*b)(0, 1) *= spin_coherence;
      (*b)(1, 0) *= spin_coherence;
    }
  }
}

void Dissipator::apply_adjoint(FrameState& st) const {
  if (spin_coherence != 1.0) {
    for (Matrix2c* b : {&st.gg, &st.ge, &st.ee}) {
      (*b)(0, 1) *= spin_coherence;
      (*b)(1, 0) *= spin_coherence;
    }
  }
  if (amplitude_damping) {
    if (damp_p != 0.0) {
      st.ee = (1.0 - damp_p) * st.ee + damp_p * st.gg;
      st.ge *= std::sqrt(1.0 - damp_p);
    }
    return;
  }
  const Eigen::Matrix4cd adj = valley.adjoint();
  const Matrix2c eg = st.ge.adjoint();
  Matrix2c gg, ge, ee;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const Eigen::Vector4cd v(st.gg(i, j), st.ge(i, j), eg(i, j), st.ee(i, j));
      gg(i, j) = (adj.row(0) * v)(0);
      ge(i, j) = (adj.row(1) * v)(0);
      ee(i, j) = (adj.row(3) * v)(0);
    }
  st.gg = gg;
  st.ge = ge;
  st.ee = ee;
}

}  // namespace spinbus::detail
