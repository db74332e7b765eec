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

#include <cstddef>
#include <span>
#include <vector>

#include "spinbus/hamiltonian.hpp"
#include "spinbus/linalg.hpp"
#include "spinbus/params.hpp"
#include "spinbus/pulse.hpp"

namespace spinbus {

// 4×4 density matrix in the valley ⊗ spin basis of hamiltonian_at.
struct DensityMatrix {
  Matrix4c matrix = Matrix4c::Zero();

  // Throws NumericalError unless Hermitian and unit-trace to `tol` with
  // eigenvalues ≥ −eig_tol.
  void validate(double tol = 1e-12, double eig_tol = 1e-10) const;
  double trace_distance(const DensityMatrix& other) const;
  double purity() const;
  // Reduced spin state Tr_valley ρ.
  Matrix2c spin() const;
};

DensityMatrix product_state(const Vector2c& valley, const Matrix2c& spin);
// Spin state `spin` with the valley in the local ground state at displacement x.
DensityMatrix valley_ground_state(const Device& device, double x, const Matrix2c& spin);
Matrix2c pure_state(const Vector2c& psi);

struct EvolutionResult {
  DensityMatrix rho_final;
  double valley_excitation_max = 0.0;  // max over steps of the local excited-valley population
  double trace_drift = 0.0;            // |Tr ρ_final − 1|
  std::size_t step_count = 0;
};

// One piecewise-constant step at displacement x (Strang splitting: half unitary,
// exact dissipative map, half unitary). Throws NumericalError on an invalid rho.
DensityMatrix step(const DensityMatrix& rho, double x, double dt, const Device& device,
                   const SimParams& p);

EvolutionResult evolve(const DensityMatrix& rho0, const DiscretizedTrajectory& traj,
                       const Device& device, const SimParams& p);

// Same as calling evolve for each state; the step table is built once.
std::vector<EvolutionResult> evolve_batch(std::span<const DensityMatrix> rho0,
                                          const DiscretizedTrajectory& traj, const Device& device,
                                          const SimParams& p, unsigned workers = 1);

// Exact exponential of the 16×16 Liouvillian of one step. Test oracle only.
DensityMatrix dense_oracle_step(const DensityMatrix& rho, double x, double dt, const Device& device,
                                const SimParams& p);

}  // namespace spinbus
