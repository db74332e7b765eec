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

#include "spinbus/hamiltonian.hpp"

#include <cmath>

#include "spinbus/errors.hpp"

namespace spinbus {

Device make_device(LandscapeProfile profile, double origin) {
  return Device{std::make_shared<const LandscapeProfile>(std::move(profile)), origin};
}

double drive_coefficient(const SimParams& p) {
  const double full = p.constants.g * p.constants.mu_B * p.effective_db_perp();
  return p.drive == DriveNormalization::kMatchedRabi ? full : 0.5 * full;
}

double zeeman_half_splitting(const SimParams& p) {
  return 0.5 * p.constants.g * p.constants.mu_B * p.B_z;
}

Matrix4c hamiltonian_at(double x, const Device& device, const SimParams& p) {
  const ValleyCoupling c = device.landscape->coupling_at(device.position(x));
  const double phase = valley_phase(c.re, c.im);
  const Matrix2c tau_tilde = std::cos(phase) * pauli::x() + std::sin(phase) * pauli::y();
  const Matrix2c one = pauli::identity();

  Matrix4c h = zeeman_half_splitting(p) * kron(one, pauli::z());
  h += drive_coefficient(p) * x * kron(one, pauli::x());
  h += kron(c.re * pauli::x() + c.im * pauli::y(), one);
  h -= p.kappa_z * kron(tau_tilde, pauli::z());
  return h;
}

double valley_phase(double delta_re, double delta_im) {
  if (delta_re == 0.0 && delta_im == 0.0) return 0.0;
  const double phase = std::atan2(delta_im, delta_re);
  // atan2 returns −π for (negative, −0.0); fold onto the half-open interval.
  return phase == -kPi ? kPi : phase;
}

double valley_splitting(const LandscapeProfile& landscape, double x) {
  const ValleyCoupling c = landscape.coupling_at(x);
  return 2.0 * std::hypot(c.re, c.im);
}

double valley_phase(const LandscapeProfile& landscape, double x) {
  const ValleyCoupling c = landscape.coupling_at(x);
  return valley_phase(c.re, c.im);
}

ValleyFrame valley_frame_for_phase(double phase) {
  const double r = 1.0 / std::sqrt(2.0);
  const cd e = std::polar(1.0, phase);
  ValleyFrame f;
  f.ground << r, -r * e;
  f.excited << r, r * e;
  return f;
}

ValleyFrame local_valley_frame(const LandscapeProfile& landscape, double x) {
  const ValleyCoupling c = landscape.coupling_at(x);
  if (c.re == 0.0 && c.im == 0.0)
    throw NumericalError("degenerate valley at x = " + std::to_string(x) + " nm (E_V = 0)");
  return valley_frame_for_phase(valley_phase(c.re, c.im));
}

Matrix2c jump_operator_for_phase(double phase, ValleyJump mode) {
  const cd e = std::polar(1.0, phase);
  Matrix2c m;
  if (mode == ValleyJump::kLiteralMatrix) {
    m << 1.0, std::conj(e), e, -1.0;
  } else {
    const ValleyFrame f = valley_frame_for_phase(phase);
    m = f.ground * f.excited.adjoint();
  }
  return m;
}

Matrix2c jump_operator_valley(const LandscapeProfile& landscape, double x, ValleyJump mode) {
  return jump_operator_for_phase(valley_phase(landscape, x), mode);
}

double larmor_frequency(const SimParams& p) {
  return p.constants.g * p.constants.mu_B * p.B_z / p.constants.h;
}

double rabi_frequency(const SimParams& p, double x0) {
  if (x0 < 0.0) throw RangeError("rabi_frequency: amplitude must be nonnegative");
  return p.constants.g * p.constants.mu_B * p.effective_db_perp() * x0 / p.constants.h;
}

double generalized_rabi(const SimParams& p, double x0, double detuning) {
  return std::hypot(detuning, rabi_frequency(p, x0));
}

double frame_frequency(const SimParams& p) {
  return (p.constants.g * p.constants.mu_B * p.B_z + 2.0 * p.kappa_z) / p.constants.h;
}

double analytical_gate_time(const SimParams& p, double x0) {
  if (!(x0 > 0.0)) throw RangeError("analytical_gate_time: amplitude must be positive");
  const double gradient = p.effective_db_perp();
  if (!(gradient > 0.0)) throw RangeError("analytical_gate_time: gradient must be positive");
  return kPi * p.constants.hbar / (p.constants.g * p.constants.mu_B * gradient * x0);
}

double analytical_amplitude(const SimParams& p, double Tg) {
  if (!(Tg > 0.0)) throw RangeError("analytical_amplitude: gate time must be positive");
  const double gradient = p.effective_db_perp();
  if (!(gradient > 0.0)) throw RangeError("analytical_amplitude: gradient must be positive");
  return kPi * p.constants.hbar / (p.constants.g * p.constants.mu_B * gradient * Tg);
}

double t2_star(const SimParams& p) {
  if (!(p.db_par > 0.0)) throw RangeError("t2_star: longitudinal gradient must be positive");
  if (!(p.dx_rms > 0.0)) throw RangeError("t2_star: dx_rms must be positive");
  const auto& k = p.constants;
  return 2.0 * k.h * std::sqrt(std::log(2.0)) / (kPi * k.g * k.mu_B * p.db_par * p.dx_rms);
}

double t2_star_from_transverse(const SimParams& p) {
  const double gradient = p.effective_db_perp();
  if (!(gradient > 0.0)) throw RangeError("t2_star: transverse gradient must be positive");
  if (!(p.dx_rms > 0.0) || !(p.Q > 0.0)) throw RangeError("t2_star: Q and dx_rms must be positive");
  const auto& k = p.constants;
  return 2.0 * k.h * p.Q * std::sqrt(std::log(2.0)) /
         (kPi * k.g * k.mu_B * gradient * p.dx_rms);
}

}  // namespace spinbus
