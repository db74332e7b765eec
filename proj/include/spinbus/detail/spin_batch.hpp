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

#include <array>

#include "spinbus/detail/step_table.hpp"

namespace spinbus::detail {

struct SpinBatchOutput {
  std::array<Matrix2c, 4> spin;
  double valley_excitation_max = 0.0;
  double trace_drift = 0.0;
};

// Forward propagation of the four tomographic inputs through a step table.
SpinBatchOutput propagate_spin_batch(const StepTable& t, const std::array<Matrix2c, 4>& inputs);

}  // namespace spinbus::detail
