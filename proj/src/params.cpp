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

#include "spinbus/params.hpp"

#include <cmath>
#include <string>

#include "spinbus/errors.hpp"

namespace spinbus {

namespace {
void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid SimParams: " + what);
}
}  // namespace

void SimParams::validate() const {
  require(std::isfinite(B_z), "B_z must be finite");
  require(std::isfinite(db_perp) && std::isfinite(db_par), "gradients must be finite");
  require(std::isfinite(kappa_z), "kappa_z must be finite");
  require(T1_v > 0.0, "T1_v must be positive");
  require(T2_s > 0.0, "T2_s must be positive");
  require(dx_rms > 0.0, "dx_rms must be positive");
  require(dt > 0.0, "dt must be positive");
  require(dt <= kMaxTimeStep, "dt must not exceed 2e-3 ns");
  if (q_linked) require(Q > 0.0 && std::isfinite(Q), "Q must be positive in Q-linked mode");
  require(constants.g > 0 && constants.mu_B > 0 && constants.hbar > 0 && constants.h > 0,
          "constants must be positive");
}

}  // namespace spinbus
