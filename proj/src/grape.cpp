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

#include <algorithm>
#include <cmath>
#include <string>

#include "spinbus/detail/spin_batch.hpp"
#include "spinbus/errors.hpp"
#include "spinbus/optimizer.hpp"

namespace spinbus {

namespace {

using detail::FrameState;
using detail::HalfStep;
using detail::StepTable;

// With λ' = W†λW (the costate before the map) and G = diag(ug†∂ug, ue†∂ue),
// Re Tr(λ ∂W ρ W†) + c.c. = 2 Re Tr(λ' G ρ).
double unitary_sensitivity(const FrameState& lam, const FrameState& rho, const HalfStep& g) {
  const Matrix2c g_gg = g.ug * rho.gg;
  const Matrix2c g_ge = g.ug * rho.ge;
  const Matrix2c e_eg = g.ue * rho.ge.adjoint();
  const Matrix2c e_ee = g.ue * rho.ee;
  auto tr = [](const Matrix2c& a, const Matrix2c& b) { return (a.transpose().cwiseProduct(b)).sum(); };
  const cd t = tr(lam.gg, g_gg) + tr(lam.ge, e_eg) + tr(Matrix2c(lam.ge.adjoint()), g_ge) + tr(lam.ee, e_ee);
  return 2.0 * t.real();
}

struct StepSensitivity {
  std::vector<double> m;      // ∂J/∂|Δ|_n
  std::vector<double> b;      // ∂J/∂b_n
  std::vector<double> delta;  // ∂J/∂δ_n, δ_n = φ_{n+1} − φ_n
  double initial_delta = 0.0;
};

struct ForwardRun {
  std::vector<FrameState> checkpoints;
  Matrix2c spin;
  double excited = 0.0;
  double trace_drift = 0.0;
};

// Same operation sequence as propagate_spin_batch, keeping every K-th state.
ForwardRun forward(const StepTable& t, const Matrix2c& input, std::size_t checkpoint) {
  ForwardRun run;
  const std::size_t n = t.size();
  run.checkpoints.reserve(n / checkpoint + 1);
  FrameState st = detail::initial_frame_state(t, input);
  run.excited = st.excited_population();
  for (std::size_t i = 0; i < n; ++i) {
    if (i % checkpoint == 0) run.checkpoints.push_back(st);
    detail::forward_step(st, t, i);
    run.excited = std::max(run.excited, st.excited_population());
  }
  run.spin = st.spin();
  run.trace_drift = std::abs(st.trace() - 1.0);
  return run;
}

// Backward sweep for one input state with costate λ_N = diag(C, C).
void accumulate(const StepTable& t, const Matrix2c& input, const ForwardRun& run,
                const Matrix2c& costate, std::size_t checkpoint, StepSensitivity& s) {
  const std::size_t n = t.size();
  const double k = t.coeff.k;

  FrameState lam;
  lam.gg = costate;
  lam.ee = costate;

  std::vector<FrameState> segment;
  segment.reserve(checkpoint);
  for (std::size_t seg = run.checkpoints.size(); seg-- > 0;) {
    const std::size_t begin = seg * checkpoint;
    const std::size_t end = std::min(n, begin + checkpoint);
    segment.clear();
    FrameState r = run.checkpoints[seg];
    for (std::size_t i = begin; i < end; ++i) {
      segment.push_back(r);
      if (i + 1 < end) detail::forward_step(r, t, i);
    }
    for (std::size_t i = end; i-- > begin;) {
      const HalfStep& w = t.half[i];
      const HalfStep& g = t.d_half[i];
      FrameState ra = segment[i - begin];
      detail::apply_unitary(ra, w);
      FrameState rb = ra;
      t.dissipator.apply(rb);

      if (i + 1 < n) {
        FrameState rc = rb;
        detail::apply_unitary(rc, w);
        s.delta[i] += detail::inner(lam, detail::rotate_derivative(rc, t.delta[i]));
        detail::rotate(lam, detail::frame_rotation(-t.delta[i]));
      }

      // ∂/∂m: ug carries e^{+imk} and ue carries e^{−imk}, so each half step
      // contributes −4k Im Tr(λ'_ge† ρ_ge) with ρ the state before it.
      detail::apply_unitary_adjoint(lam, w);
      s.m[i] += -4.0 * k * (lam.ge.adjoint() * rb.ge).trace().imag();
      s.b[i] += unitary_sensitivity(lam, rb, g);
      t.dissipator.apply_adjoint(lam);
      detail::apply_unitary_adjoint(lam, w);
      const FrameState& r0 = segment[i - begin];
      s.m[i] += -4.0 * k * (lam.ge.adjoint() * r0.ge).trace().imag();
      s.b[i] += unitary_sensitivity(lam, r0, g);
    }
  }
  FrameState start;
  start.gg = input;
  s.initial_delta += detail::inner(lam, detail::rotate_derivative(start, t.initial_delta));
}

}  // namespace

ObjectiveValue step_gradient(const DiscretizedTrajectory& traj, const Device& device,
                             const SimParams& p, const GradientOptions& options) {
  p.validate();
  if (std::abs(traj.dt - p.dt) > 1e-12 * p.dt)
    throw ConfigError("trajectory time step does not match SimParams.dt");
  if (options.checkpoint_interval == 0) throw ConfigError("checkpoint interval must be positive");
  StepTable t = detail::build_step_table(traj.positions, traj.dt, device, p, true);
  detail::attach_derivatives(t, traj.positions);
  const std::size_t n = t.size();

  const auto inputs = default_spin_inputs();
  const std::size_t K = options.checkpoint_interval;
  std::array<ForwardRun, 4> runs;
  detail::SpinBatchOutput out;
  for (int kk = 0; kk < 4; ++kk) {
    runs[kk] = forward(t, inputs[kk], K);
    out.spin[kk] = runs[kk].spin;
    out.valley_excitation_max = std::max(out.valley_excitation_max, runs[kk].excited);
  }
  out.valley_excitation_max = std::clamp(out.valley_excitation_max, 0.0, 1.0);
  const SpinChannel ch = spin_channel_from_outputs(inputs, out.spin);
  const GateTarget target = make_target(p, traj.duration(), options.U_G);
  const FidelityReport rep = average_gate_fidelity(ch, target);

  // F_ent = Σ_k Tr(C_k σ_k) with C_k = Herm(¼ Σ_ij a(ij,k) U|j⟩⟨i|U†).
  const Matrix2c u = counter_rotation(target) * target.U_G;
  const Eigen::Matrix4cd a = reconstruction_coefficients(inputs);
  std::array<Matrix2c, 4> costate;
  for (int kk = 0; kk < 4; ++kk) {
    Matrix2c c = Matrix2c::Zero();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        Matrix2c ji = Matrix2c::Zero();
        ji(j, i) = 1.0;
        c += a(2 * i + j, kk) * (u * ji * u.adjoint());
      }
    c *= 0.25;
    costate[kk] = 0.5 * (c + c.adjoint());
  }

  StepSensitivity s;
  s.m.assign(n, 0.0);
  s.b.assign(n, 0.0);
  s.delta.assign(n, 0.0);
  for (int kk = 0; kk < 4; ++kk)
    accumulate(t, inputs[kk], runs[kk], costate[kk], K, s);

  ObjectiveValue v;
  v.infidelity = rep.infidelity;
  v.valley_excitation_max = out.valley_excitation_max;
  v.gradient.resize(n);
  const double scale = -2.0 / 3.0;  // d(1 − F_avg)/dF_ent
  for (std::size_t i = 0; i < n; ++i) {
    const detail::StepGeometry& g = t.geometry[i];
    const double d_phase = (i == 0 ? s.initial_delta : s.delta[i - 1]) - s.delta[i];
    const double dj = s.m[i] * g.d_magnitude + s.b[i] * t.coeff.drive + d_phase * g.d_phase;
    v.gradient[i] = scale * dj;
    if (!std::isfinite(v.gradient[i]))
      throw NumericalError("non-finite gradient at step " + std::to_string(i) + " (x = " +
                           std::to_string(traj.positions[i]) + " nm)");
  }
  return v;
}

ObjectiveValue infidelity_and_gradient(const ControlVector& controls, const Device& device,
                                       const SimParams& p, const GradientOptions& options) {
  if (options.mode == GradientMode::kFiniteDifference) {
    ObjectiveValue v;
    const FidelityReport base = evaluate_trajectory(controls, device, p, options.U_G, options.upsample);
    v.infidelity = base.infidelity;
    v.valley_excitation_max = base.valley_excitation_max;
    v.gradient.resize(controls.knots.size());
    ControlVector c = controls;
    for (std::size_t i = 0; i < c.knots.size(); ++i) {
      const double x = controls.knots[i];
      c.knots[i] = x + options.fd_step;
      const double up = evaluate_trajectory(c, device, p, options.U_G, options.upsample).infidelity;
      c.knots[i] = x - options.fd_step;
      const double down = evaluate_trajectory(c, device, p, options.U_G, options.upsample).infidelity;
      c.knots[i] = x;
      v.gradient[i] = (up - down) / (2.0 * options.fd_step);
    }
    return v;
  }
  const DiscretizedTrajectory traj = upsample(controls, p.dt, options.upsample);
  ObjectiveValue v = step_gradient(traj, device, p, options);
  v.gradient = upsample_adjoint(controls, p.dt, v.gradient, options.upsample);
  return v;
}

}  // namespace spinbus
