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

#include <numbers>

namespace spinbus {

// Internal units: meV, ns, nm, mT. Frequencies exposed to users are cyclic (GHz).
struct PhysicalConstants {
  double g = 2.0;                      // Landé factor
  double mu_B = 5.7883818060e-5;       // Bohr magneton, meV/mT
  double hbar = 6.582119569509066e-4;  // meV ns
  double h = 4.135667696923859e-3;     // meV ns
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace spinbus
