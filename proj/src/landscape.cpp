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

#include "spinbus/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spinbus/constants.hpp"
#include "spinbus/errors.hpp"
#include "spinbus/parallel.hpp"
#include "spinbus/util.hpp"

namespace spinbus {

using nlohmann::json;

const char* to_string(ValleyModel model) {
  switch (model) {
    case ValleyModel::kGeDiffusion:
      return "ge-diffusion";
    case ValleyModel::kStep:
      return "step";
    case ValleyModel::kExplicit:
      return "explicit";
  }
  return "explicit";
}

ValleyModel valley_model_from_string(const std::string& name) {
  if (name == "ge-diffusion") return ValleyModel::kGeDiffusion;
  if (name == "step") return ValleyModel::kStep;
  if (name == "explicit") return ValleyModel::kExplicit;
  throw ConfigError("unknown valley model '" + name + "'");
}

LandscapeProfile::LandscapeProfile(double x_start_nm, double spacing_nm,
                                   std::vector<double> delta_real_meV,
                                   std::vector<double> delta_imag_meV, ValleyModel model,
                                   std::uint64_t seed, std::string config_json)
    : x_start_(x_start_nm),
      spacing_(spacing_nm),
      re_(std::move(delta_real_meV)),
      im_(std::move(delta_imag_meV)),
      model_(model),
      seed_(seed),
      config_json_(std::move(config_json)) {
  if (re_.size() != im_.size()) throw FormatError("landscape: real and imaginary grids differ");
  if (re_.size() < 2) throw FormatError("landscape: at least two grid points required");
  if (!(spacing_ > 0.0) || !std::isfinite(spacing_) || !std::isfinite(x_start_))
    throw FormatError("landscape: grid spacing must be positive and finite");
  for (std::size_t i = 0; i < re_.size(); ++i)
    if (!std::isfinite(re_[i]) || !std::isfinite(im_[i]))
      throw FormatError("landscape: non-finite coupling at index " + std::to_string(i));
  const std::string tag = to_string(model_);
  digest_ = hex64(fnv1a64(config_json_, fnv1a64(tag)));
}

bool LandscapeProfile::contains(double x) const {
  const double tol = 1e-9 * std::max(1.0, std::abs(x));
  return x >= x_start_ - tol && x <= x_end() + tol;
}

namespace {

struct Hermite {
  double value;
  double slope;  // per unit index
};

Hermite catmull_rom(std::span<const double> v, std::size_t i, double t) {
  const std::size_t n = v.size();
  const double p1 = v[i];
  const double p2 = v[i + 1];
  const double p0 = i > 0 ? v[i - 1] : 2.0 * p1 - p2;
  const double p3 = i + 2 < n ? v[i + 2] : 2.0 * p2 - p1;
  const double m1 = 0.5 * (p2 - p0);
  const double m2 = 0.5 * (p3 - p1);
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double value = (2 * t3 - 3 * t2 + 1) * p1 + (t3 - 2 * t2 + t) * m1 +
                       (-2 * t3 + 3 * t2) * p2 + (t3 - t2) * m2;
  const double slope = (6 * t2 - 6 * t) * p1 + (3 * t2 - 4 * t + 1) * m1 +
                       (-6 * t2 + 6 * t) * p2 + (3 * t2 - 2 * t) * m2;
  return {value, slope};
}

}  // namespace

ValleyCoupling LandscapeProfile::coupling_at(double x) const {
  if (!contains(x)) {
    std::ostringstream msg;
    msg << "position " << x << " nm outside landscape range [" << x_start_ << ", " << x_end()
        << "]";
    throw RangeError(msg.str());
  }
  const double u = std::clamp((x - x_start_) / spacing_, 0.0, static_cast<double>(size() - 1));
  auto i = static_cast<std::size_t>(u);
  if (i >= size() - 1) i = size() - 2;
  const double t = u - static_cast<double>(i);
  const Hermite r = catmull_rom(re_, i, t);
  const Hermite m = catmull_rom(im_, i, t);
  return {r.value, m.value, r.slope / spacing_, m.slope / spacing_};
}

double LandscapeProfile::grid_splitting(std::size_t i) const {
  return 2.0 * std::hypot(re_[i], im_[i]);
}

// --- generators -------------------------------------------------------------

void GeDiffusionConfig::validate() const {
  if (!(length > 0) || !(grid_spacing > 0) || !(mean_splitting > 0))
    throw ConfigError("ge-diffusion: length, grid_spacing and mean_splitting must be positive");
  if (!(correlation_length > grid_spacing))
    throw ConfigError("ge-diffusion: correlation_length must exceed grid_spacing");
}

void StepModelConfig::validate() const {
  if (!(length > 0) || !(mean_step_spacing > 0) || !(phase_jump_per_step > 0) ||
      !(base_splitting > 0) || !(dot_smoothing_width > 0) || !(magnitude_jitter > 0) ||
      !(grid_spacing > 0))
    throw ConfigError("step model: all parameters must be positive");
  if (dot_smoothing_width < grid_spacing)
    throw ConfigError("step model: dot_smoothing_width must be at least grid_spacing");
}

namespace {

json to_json(const GeDiffusionConfig& c) {
  return {{"length_nm", c.length},
          {"correlation_length_nm", c.correlation_length},
          {"mean_splitting_meV", c.mean_splitting},
          {"grid_spacing_nm", c.grid_spacing}};
}

json to_json(const StepModelConfig& c) {
  return {{"length_nm", c.length},
          {"mean_step_spacing_nm", c.mean_step_spacing},
          {"phase_jump_per_step_rad", c.phase_jump_per_step},
          {"base_splitting_meV", c.base_splitting},
          {"dot_smoothing_width_nm", c.dot_smoothing_width},
          {"magnitude_jitter", c.magnitude_jitter},
          {"grid_spacing_nm", c.grid_spacing}};
}

std::size_t grid_points(double length, double spacing) {
  return static_cast<std::size_t>(std::llround(length / spacing)) + 1;
}

// Discrete Gaussian kernel exp(-(j h)^2 / (2 s^2)), j = -w..w.
std::vector<double> gaussian_kernel(double s, double h, std::size_t w) {
  std::vector<double> k(2 * w + 1);
  for (std::size_t j = 0; j < k.size(); ++j) {
    const double r = (static_cast<double>(j) - static_cast<double>(w)) * h;
    k[j] = std::exp(-0.5 * r * r / (s * s));
  }
  return k;
}

// out[i] = Σ_j k[j] in[i + j], for i in [0, n).
std::vector<double> correlate(std::span<const double> in, std::span<const double> k,
                              std::size_t n) {
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* src = in.data() + i;
    double acc = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) acc += k[j] * src[j];
    out[i] = acc;
  }
  return out;
}

}  // namespace

LandscapeProfile generate_ge_diffusion(const GeDiffusionConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const double h = cfg.grid_spacing;
  const std::size_t n = grid_points(cfg.length, h);
  // White noise filtered by exp(-r²/ℓ²) has autocorrelation exp(-r²/(2ℓ²)).
  const double s = cfg.correlation_length / std::sqrt(2.0);
  const auto w = static_cast<std::size_t>(std::ceil(5.0 * s / h));
  std::vector<double> kernel = gaussian_kernel(s, h, w);
  const double norm = std::sqrt(std::inner_product(kernel.begin(), kernel.end(), kernel.begin(), 0.0));
  // |Δ| is Rayleigh with scale σ, so E[E_V] = 2σ√(π/2).
  const double sigma = cfg.mean_splitting / (2.0 * std::sqrt(kPi / 2.0));
  for (double& v : kernel) v *= sigma / norm;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> noise(n + 2 * w);
  auto component = [&] {
    for (double& v : noise) v = normal(rng);
    return correlate(noise, kernel, n);
  };
  std::vector<double> re = component();
  std::vector<double> im = component();
  return LandscapeProfile(0.0, h, std::move(re), std::move(im), ValleyModel::kGeDiffusion, seed,
                          to_json(cfg).dump());
}

RawStepProfile generate_step_model_raw(const StepModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const double h = cfg.grid_spacing;
  const auto pad_points =
      static_cast<std::size_t>(std::ceil(5.0 * cfg.dot_smoothing_width / h));
  const double pad = static_cast<double>(pad_points) * h;
  const std::size_t n = grid_points(cfg.length, h) + 2 * pad_points;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::exponential_distribution<double> gap(1.0 / cfg.mean_step_spacing);

  RawStepProfile raw;
  raw.x_start = -pad;
  raw.spacing = h;
  const double x_stop = cfg.length + pad;
  for (double x = raw.x_start + gap(rng); x < x_stop; x += gap(rng)) raw.step_positions.push_back(x);

  const double initial_phase = kTwoPi * uniform(rng);
  std::vector<double> terrace_magnitude(raw.step_positions.size() + 1);
  for (double& m : terrace_magnitude)
    m = std::max(0.0, 0.5 * cfg.base_splitting * (1.0 + cfg.magnitude_jitter * normal(rng)));

  raw.magnitude.resize(n);
  raw.phase.resize(n);
  std::size_t terrace = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = raw.x_start + static_cast<double>(i) * h;
    while (terrace < raw.step_positions.size() && raw.step_positions[terrace] <= x) ++terrace;
    raw.magnitude[i] = terrace_magnitude[terrace];
    raw.phase[i] = initial_phase + static_cast<double>(terrace) * cfg.phase_jump_per_step;
  }
  return raw;
}

LandscapeProfile generate_step_model(const StepModelConfig& cfg, std::uint64_t seed) {
  const RawStepProfile raw = generate_step_model_raw(cfg, seed);
  const double h = cfg.grid_spacing;
  const std::size_t n = grid_points(cfg.length, h);
  const std::size_t w = (raw.magnitude.size() - n) / 2;
  std::vector<double> kernel = gaussian_kernel(cfg.dot_smoothing_width, h, w);
  const double total = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  for (double& v : kernel) v /= total;

  std::vector<double> re_raw(raw.magnitude.size()), im_raw(raw.magnitude.size());
  for (std::size_t i = 0; i < re_raw.size(); ++i) {
    re_raw[i] = raw.magnitude[i] * std::cos(raw.phase[i]);
    im_raw[i] = raw.magnitude[i] * std::sin(raw.phase[i]);
  }
  std::vector<double> re = correlate(re_raw, kernel, n);
  std::vector<double> im = correlate(im_raw, kernel, n);
  return LandscapeProfile(0.0, h, std::move(re), std::move(im), ValleyModel::kStep, seed,
                          to_json(cfg).dump());
}

LandscapeProfile generate(const LandscapeModelSpec& spec, std::uint64_t seed) {
  switch (spec.model) {
    case ValleyModel::kGeDiffusion:
      return generate_ge_diffusion(spec.ge, seed);
    case ValleyModel::kStep:
      return generate_step_model(spec.step, seed);
    case ValleyModel::kExplicit:
      break;
  }
  throw ConfigError("explicit landscapes cannot be generated; load them from a file");
}

std::uint64_t device_seed(std::uint64_t base_seed, std::uint64_t index) {
  return mix64(mix64(base_seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

std::vector<LandscapeProfile> sample_ensemble(const LandscapeModelSpec& spec, std::size_t n,
                                              std::uint64_t base_seed, unsigned workers) {
  if (n == 0) throw ConfigError("sample_ensemble: n must be at least 1");
  std::vector<std::optional<LandscapeProfile>> slots(n);
  parallel_for(n, workers, [&](std::size_t i) { slots[i].emplace(generate(spec, device_seed(base_seed, i))); });
  std::vector<LandscapeProfile> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// --- statistics ----------------------------------------------------------------

namespace {

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

Moments moments(std::span<const double> v) {
  Moments m;
  if (v.empty()) return m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(v.size()));
  return m;
}

double center_of(const LandscapeProfile& p, const StatsOptions& opt) {
  return opt.center < 0.0 ? 0.5 * (p.x_start() + p.x_end()) : opt.center;
}

std::vector<LowSplittingPoint> find_lvsp(const LandscapeProfile& p, double threshold) {
  std::vector<LowSplittingPoint> out;
  std::size_t i = 0;
  while (i < p.size()) {
    if (p.grid_splitting(i) >= threshold) {
      ++i;
      continue;
    }
    LowSplittingPoint best{p.x_at(i), p.grid_splitting(i)};
    for (; i < p.size() && p.grid_splitting(i) < threshold; ++i)
      if (p.grid_splitting(i) < best.splitting) best = {p.x_at(i), p.grid_splitting(i)};
    out.push_back(best);
  }
  return out;
}

}  // namespace

LandscapeStats landscape_stats(const LandscapeProfile& profile, const StatsOptions& opt) {
  LandscapeStats s = landscape_stats(std::span<const LandscapeProfile>(&profile, 1), opt);
  s.lvsp = find_lvsp(profile, opt.lvsp_threshold);
  return s;
}

LandscapeStats landscape_stats(std::span<const LandscapeProfile> ensemble, const StatsOptions& opt) {
  if (ensemble.empty()) throw ConfigError("landscape_stats: empty input");
  LandscapeStats s;
  s.devices = ensemble.size();
  std::vector<double> centers, device_means, pooled;
  s.min_splitting = std::numeric_limits<double>::infinity();
  std::size_t below = 0;
  for (const auto& p : ensemble) {
    const double c = valley_splitting_at(p, center_of(p, opt));
    centers.push_back(c);
    if (c < opt.center_threshold) ++below;
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double ev = p.grid_splitting(i);
      sum += ev;
      pooled.push_back(ev);
      s.min_splitting = std::min(s.min_splitting, ev);
    }
    device_means.push_back(sum / static_cast<double>(p.size()));
  }
  const Moments c = moments(centers);
  const Moments f = moments(device_means);
  const Moments sp = moments(pooled);
  s.center_mean = c.mean;
  s.center_std = c.std;
  s.full_mean = f.mean;
  s.full_std = f.std;
  s.spatial_std = sp.std;
  s.fraction_center_below = static_cast<double>(below) / static_cast<double>(s.devices);
  return s;
}

double valley_splitting_at(const LandscapeProfile& p, double x) {
  const ValleyCoupling c = p.coupling_at(x);
  return 2.0 * std::hypot(c.re, c.im);
}

// --- file format -----------------------------------------------------------------

void save_landscape(const LandscapeProfile& profile, const std::filesystem::path& path) {
  json doc;
  doc["format_version"] = kLandscapeFormatVersion;
  doc["model_tag"] = to_string(profile.model());
  doc["seed"] = profile.seed();
  doc["config"] = json::parse(profile.config_json());
  doc["x_start_nm"] = profile.x_start();
  doc["x_grid_spacing_nm"] = profile.spacing();
  doc["delta_real_meV"] = std::vector<double>(profile.delta_real().begin(), profile.delta_real().end());
  doc["delta_imag_meV"] = std::vector<double>(profile.delta_imag().begin(), profile.delta_imag().end());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << doc.dump() << '\n';
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

LandscapeProfile load_landscape(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open landscape file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("malformed landscape file '" + path.string() + "': " + e.what());
  }
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kLandscapeFormatVersion)
      throw FormatError("landscape file version " + std::to_string(version) +
                        " is not supported (expected " +
                        std::to_string(kLandscapeFormatVersion) + ")");
    const json config = doc.contains("config") ? doc["config"] : json::object();
    return LandscapeProfile(doc.at("x_start_nm").get<double>(),
                            doc.at("x_grid_spacing_nm").get<double>(),
                            doc.at("delta_real_meV").get<std::vector<double>>(),
                            doc.at("delta_imag_meV").get<std::vector<double>>(),
                            valley_model_from_string(doc.at("model_tag").get<std::string>()),
                            doc.value("seed", std::uint64_t{0}), config.dump());
  } catch (const json::exception& e) {
    throw FormatError("malformed landscape file '" + path.string() + "': " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError("malformed landscape file '" + path.string() + "': " + e.what());
  }
}

}  // namespace spinbus
