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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spinbus {

enum class ValleyModel { kGeDiffusion, kStep, kExplicit };

const char* to_string(ValleyModel model);
ValleyModel valley_model_from_string(const std::string& name);

// Interpolated intervalley coupling Δ = re + i·im (meV) and its slope (meV/nm).
struct ValleyCoupling {
  double re = 0.0;
  double im = 0.0;
  double d_re = 0.0;
  double d_im = 0.0;
};

// Complex intervalley coupling sampled on a uniform position grid. Immutable
// after construction; values between grid points come from a cubic Hermite
// (Catmull-Rom) interpolant so that the coupling and its slope are continuous.
class LandscapeProfile {
 public:
  LandscapeProfile(double x_start_nm, double spacing_nm, std::vector<double> delta_real_meV,
                   std::vector<double> delta_imag_meV, ValleyModel model = ValleyModel::kExplicit,
                   std::uint64_t seed = 0, std::string config_json = "{}");

  double x_start() const { return x_start_; }
  double x_end() const { return x_start_ + spacing_ * static_cast<double>(size() - 1); }
  double spacing() const { return spacing_; }
  std::size_t size() const { return re_.size(); }
  double x_at(std::size_t i) const { return x_start_ + spacing_ * static_cast<double>(i); }
  std::span<const double> delta_real() const { return re_; }
  std::span<const double> delta_imag() const { return im_; }
  ValleyModel model() const { return model_; }
  std::uint64_t seed() const { return seed_; }
  // Canonical JSON of the generator configuration ("{}" for explicit profiles).
  const std::string& config_json() const { return config_json_; }
  // 16 hex digits, FNV-1a over config_json and the model tag.
  const std::string& config_digest() const { return digest_; }

  bool contains(double x) const;
  // Throws RangeError when x is outside [x_start, x_end].
  ValleyCoupling coupling_at(double x) const;

  // E_V = 2|Δ| on grid point i, meV.
  double grid_splitting(std::size_t i) const;

 private:
  double x_start_;
  double spacing_;
  std::vector<double> re_;
  std::vector<double> im_;
  ValleyModel model_;
  std::uint64_t seed_;
  std::string config_json_;
  std::string digest_;
};

struct GeDiffusionConfig {
  double length = 200.0;             // nm
  double correlation_length = 20.0;  // nm
  double mean_splitting = 0.088;     // meV, mean of E_V
  double grid_spacing = 0.1;         // nm
  void validate() const;
};

struct StepModelConfig {
  double length = 200.0;              // nm
  double mean_step_spacing = 50.0;    // nm
  double phase_jump_per_step = 2.577;  // rad
  double base_splitting = 0.130;      // meV, calibrated to the 100±44 µeV center statistic
  double dot_smoothing_width = 10.0;  // nm, Gaussian standard deviation
  double magnitude_jitter = 0.25;     // relative std of the terrace magnitude
  double grid_spacing = 0.1;          // nm
  void validate() const;
};

LandscapeProfile generate_ge_diffusion(const GeDiffusionConfig& cfg, std::uint64_t seed);
LandscapeProfile generate_step_model(const StepModelConfig& cfg, std::uint64_t seed);

// Piecewise-constant profile of the step model before wavefunction smoothing,
// sampled on the padded generation grid.
struct RawStepProfile {
  double x_start = 0.0;
  double spacing = 0.0;
  std::vector<double> step_positions;  // sorted, nm
  std::vector<double> magnitude;       // |Δ| per grid point, meV
  std::vector<double> phase;           // unwrapped phase per grid point, rad
};
RawStepProfile generate_step_model_raw(const StepModelConfig& cfg, std::uint64_t seed);

// Tagged union of the two generator configurations.
struct LandscapeModelSpec {
  ValleyModel model = ValleyModel::kGeDiffusion;
  GeDiffusionConfig ge{};
  StepModelConfig step{};
};

LandscapeProfile generate(const LandscapeModelSpec& spec, std::uint64_t seed);

// Seed of device `index` in an ensemble. Independent of ensemble size and order.
std::uint64_t device_seed(std::uint64_t base_seed, std::uint64_t index);

// n profiles from independent per-device substreams; workers ≤ 1 runs inline.
std::vector<LandscapeProfile> sample_ensemble(const LandscapeModelSpec& spec, std::size_t n,
                                              std::uint64_t base_seed, unsigned workers = 1);

// E_V = 2|Δ(x)| from the interpolant, meV.
double valley_splitting_at(const LandscapeProfile& profile, double x);

inline constexpr double kDefaultLvspThreshold = 0.015;  // meV

struct LowSplittingPoint {
  double x = 0.0;          // nm, position of the local minimum
  double splitting = 0.0;  // meV
};

struct LandscapeStats {
  std::size_t devices = 0;
  double center_mean = 0.0;  // meV, mean E_V at the device center
  double center_std = 0.0;
  double full_mean = 0.0;  // meV, mean over devices of the per-device spatial mean
  double full_std = 0.0;   // meV, std over devices of the per-device spatial mean
  double spatial_std = 0.0;  // meV, std of E_V pooled over all grid points
  double min_splitting = 0.0;
  double fraction_center_below = 0.0;  // fraction of center splittings below `center_threshold`
  std::vector<LowSplittingPoint> lvsp;  // only for single profiles, sorted by x
};

struct StatsOptions {
  double lvsp_threshold = kDefaultLvspThreshold;
  double center_threshold = 0.033;  // meV
  double center = -1.0;             // nm; negative means midpoint of the profile
};

LandscapeStats landscape_stats(const LandscapeProfile& profile, const StatsOptions& opt = {});
LandscapeStats landscape_stats(std::span<const LandscapeProfile> ensemble,
                               const StatsOptions& opt = {});

inline constexpr int kLandscapeFormatVersion = 1;

void save_landscape(const LandscapeProfile& profile, const std::filesystem::path& path);
LandscapeProfile load_landscape(const std::filesystem::path& path);

}  // namespace spinbus
