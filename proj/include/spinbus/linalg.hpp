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

#include <complex>

#include <Eigen/Core>

namespace spinbus {

using cd = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;
using Matrix4c = Eigen::Matrix4cd;
using Vector2c = Eigen::Vector2cd;

inline constexpr cd kI{0.0, 1.0};

namespace pauli {
inline Matrix2c identity() { return Matrix2c::Identity(); }
inline Matrix2c x() {
  Matrix2c m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}
inline Matrix2c y() {
  Matrix2c m;
  m << 0.0, -kI, kI, 0.0;
  return m;
}
inline Matrix2c z() {
  Matrix2c m;
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}
}  // namespace pauli

// a ⊗ b with a acting on the valley and b on the spin factor.
inline Matrix4c kron(const Matrix2c& a, const Matrix2c& b) {
  Matrix4c out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

// exp(-i θ (n̂·σ)) for a real axis n = (nx, ny, nz) of unit length.
inline Matrix2c su2_exp(double theta, double nx, double ny, double nz) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Matrix2c m;
  m << cd(c, -s * nz), cd(-s * ny, -s * nx), cd(s * ny, -s * nx), cd(c, s * nz);
  return m;
}

}  // namespace spinbus
