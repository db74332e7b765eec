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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinbus/hamiltonian.hpp"
#include "spinbus/landscape.hpp"
#include "spinbus/linalg.hpp"
#include "spinbus/params.hpp"
#include "spinbus/propagator.hpp"

namespace spinbus::test {

// Constant coupling Δ = re + i·im on [−length/2, length/2], device origin at 0.
inline Device flat_device(double re, double im = 0.0, double length = 200.0) {
  const std::size_t n = static_cast<std::size_t>(std::llround(length / 0.5)) + 1;
  return make_device(LandscapeProfile(-0.5 * length, 0.5, std::vector<double>(n, re), std::vector<double>(n, im)), 0.0);
}

// Coupling given by callables on [x0, x1] with 0.1 nm spacing.
template <class Re, class Im>
Device sampled_device(double x0, double x1, Re re, Im im, double origin = 0.0) {
  std::vector<double> r, i;
  for (double x = x0; x <= x1 + 1e-9; x += 0.1) {
    r.push_back(re(x));
    i.push_back(im(x));
  }
  return make_device(LandscapeProfile(x0, 0.1, std::move(r), std::move(i)), origin);
}

inline Device generated_device(std::uint64_t seed, double origin = 100.0) {
  return make_device(generate_ge_diffusion(GeDiffusionConfig{}, seed), origin);
}

// The pinned 7 µeV fixture, positioned at its operating point.
inline Device lvsp_device() {
  const auto dir = std::filesystem::path(SPINBUS_DATA_DIR) / "fixtures";
  std::ifstream in(dir / "fixtures.json");
  const auto meta = nlohmann::json::parse(in);
  return make_device(load_landscape(dir / meta["lvsp"]["file"].get<std::string>()),
                     meta["lvsp"]["origin_nm"].get<double>());
}

// No decay channels.
inline SimParams closed_params() {
  SimParams p;
  p.T1_v = kNoDecay;
  p.T2_s = kNoDecay;
  return p;
}

inline Matrix4c random_density(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Matrix4c a;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a(i, j) = cd(n(rng), n(rng));
  Matrix4c rho = a * a.adjoint();
  return rho / rho.trace().real();
}

inline Matrix2c random_unitary(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  double v[4];
  for (double& c : v) c = n(rng);
  const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return su2_exp(std::abs(v[3]) + 0.1, v[0] / norm, v[1] / norm, v[2] / norm);
}

inline double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace spinbus::test
