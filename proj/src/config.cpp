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

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "spinbus/errors.hpp"
#include "spinbus/experiments.hpp"
#include "spinbus/util.hpp"

namespace spinbus {

using nlohmann::json;

namespace {

constexpr std::pair<ExperimentKind, const char*> kKinds[] = {
    {ExperimentKind::kDephasingStudy, "dephasing-study"}, {ExperimentKind::kFreqSweep, "freq-sweep"},
    {ExperimentKind::kGridSweep, "grid-sweep"},           {ExperimentKind::kMagnetScan, "magnet-scan"},
    {ExperimentKind::kEnsemble, "ensemble"},              {ExperimentKind::kOptimizeOne, "optimize-one"},
    {ExperimentKind::kCalibrateOne, "calibrate-one"},
};

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

double number(const json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(where + "." + key + ": expected a number");
  const double v = j[key].get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + "." + key + ": must be finite");
  return v;
}

// Number, or "none" for an infinite lifetime.
double lifetime(const json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (j[key].is_string() && j[key].get<std::string>() == "none") return kNoDecay;
  return number(j, key, fallback, where);
}

bool boolean(const json& j, const char* key, bool fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) throw ConfigError(where + "." + key + ": expected true or false");
  return j[key].get<bool>();
}

int integer(const json& j, const char* key, int fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
  return j[key].get<int>();
}

std::string text(const json& j, const char* key, const std::string& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return j[key].get<std::string>();
}

void parse_params(const json& j, ExperimentConfig& cfg) {
  const std::string w = "params";
  check_keys(j, {"B_z", "db_perp", "db_par", "Q", "q_linked", "kappa_z", "T1_v", "T2_s", "dx_rms", "dt",
                 "drive", "valley_jump", "anticommutator"},
             w);
  SimParams& p = cfg.params;
  p.B_z = number(j, "B_z", p.B_z, w);
  p.db_perp = number(j, "db_perp", p.db_perp, w);
  p.db_par = number(j, "db_par", p.db_par, w);
  p.Q = number(j, "Q", p.Q, w);
  p.q_linked = boolean(j, "q_linked", p.q_linked, w);
  p.kappa_z = number(j, "kappa_z", p.kappa_z, w);
  p.T1_v = lifetime(j, "T1_v", p.T1_v, w);
  if (j.contains("T2_s") && j["T2_s"].is_string() && j["T2_s"].get<std::string>() == "t2_star") {
    cfg.t2_from_gradient = true;
  } else if (j.contains("T2_s")) {
    cfg.t2_from_gradient = false;
    p.T2_s = lifetime(j, "T2_s", p.T2_s, w);
  }
  p.dx_rms = number(j, "dx_rms", p.dx_rms, w);
  p.dt = number(j, "dt", p.dt, w);
  const std::string drive = text(j, "drive", "matched-rabi", w);
  if (drive == "matched-rabi") p.drive = DriveNormalization::kMatchedRabi;
  else if (drive == "half-prefactor") p.drive = DriveNormalization::kHalfPrefactor;
  else throw ConfigError("params.drive: expected 'matched-rabi' or 'half-prefactor'");
  const std::string jump = text(j, "valley_jump", "true-lowering", w);
  if (jump == "true-lowering") p.dissipator.jump = ValleyJump::kTrueLowering;
  else if (jump == "literal") p.dissipator.jump = ValleyJump::kLiteralMatrix;
  else throw ConfigError("params.valley_jump: expected 'true-lowering' or 'literal'");
  const std::string anti = text(j, "anticommutator", "standard", w);
  if (anti == "standard") p.dissipator.anticommutator = Anticommutator::kStandard;
  else if (anti == "literal") p.dissipator.anticommutator = Anticommutator::kLiteral;
  else throw ConfigError("params.anticommutator: expected 'standard' or 'literal'");
}

GeDiffusionConfig parse_ge(const json& j) {
  const std::string w = "landscape.ge";
  check_keys(j, {"length_nm", "correlation_length_nm", "mean_splitting_meV", "grid_spacing_nm"}, w);
  GeDiffusionConfig c;
  c.length = number(j, "length_nm", c.length, w);
  c.correlation_length = number(j, "correlation_length_nm", c.correlation_length, w);
  c.mean_splitting = number(j, "mean_splitting_meV", c.mean_splitting, w);
  c.grid_spacing = number(j, "grid_spacing_nm", c.grid_spacing, w);
  try {
    c.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

StepModelConfig parse_step(const json& j) {
  const std::string w = "landscape.step";
  check_keys(j, {"length_nm", "mean_step_spacing_nm", "phase_jump_per_step_rad", "base_splitting_meV",
                 "dot_smoothing_width_nm", "magnitude_jitter", "grid_spacing_nm"},
             w);
  StepModelConfig c;
  c.length = number(j, "length_nm", c.length, w);
  c.mean_step_spacing = number(j, "mean_step_spacing_nm", c.mean_step_spacing, w);
  c.phase_jump_per_step = number(j, "phase_jump_per_step_rad", c.phase_jump_per_step, w);
  c.base_splitting = number(j, "base_splitting_meV", c.base_splitting, w);
  c.dot_smoothing_width = number(j, "dot_smoothing_width_nm", c.dot_smoothing_width, w);
  c.magnitude_jitter = number(j, "magnitude_jitter", c.magnitude_jitter, w);
  c.grid_spacing = number(j, "grid_spacing_nm", c.grid_spacing, w);
  try {
    c.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

void parse_landscape(const json& j, const std::filesystem::path& base, LandscapeSource& src) {
  const std::string w = "landscape";
  check_keys(j, {"source", "splitting_ueV", "length_nm", "path", "model", "seed", "origin_nm", "ge", "step"}, w);
  const std::string source = text(j, "source", "flat", w);
  if (source == "flat") {
    src.kind = LandscapeSource::Kind::kFlat;
    src.flat_splitting = 1e-3 * number(j, "splitting_ueV", 1e3 * src.flat_splitting, w);
    src.flat_length = number(j, "length_nm", src.flat_length, w);
    if (!(src.flat_splitting >= 0.0) || !(src.flat_length > 0.0))
      throw ConfigError("landscape: flat splitting must be >= 0 and length > 0");
  } else if (source == "file") {
    src.kind = LandscapeSource::Kind::kFile;
    if (!j.contains("path")) throw ConfigError("landscape: source 'file' needs 'path'");
    src.file = base / text(j, "path", "", w);
    if (!std::filesystem::exists(src.file))
      throw ConfigError("landscape: file '" + src.file.string() + "' does not exist");
  } else if (source == "generate") {
    src.kind = LandscapeSource::Kind::kGenerate;
  } else {
    throw ConfigError("landscape.source: expected 'flat', 'file' or 'generate'");
  }
  try {
    src.model.model = valley_model_from_string(text(j, "model", "ge-diffusion", w));
  } catch (const Error& e) {
    throw ConfigError(std::string("landscape.model: ") + e.what());
  }
  if (src.model.model == ValleyModel::kExplicit && src.kind == LandscapeSource::Kind::kGenerate)
    throw ConfigError("landscape.model: cannot generate an explicit profile");
  if (j.contains("ge")) src.model.ge = parse_ge(j["ge"]);
  if (j.contains("step")) src.model.step = parse_step(j["step"]);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      throw ConfigError("landscape.seed: expected a nonnegative integer");
    src.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("origin_nm")) src.origin = number(j, "origin_nm", 0.0, w);
}

void parse_optimizer(const json& j, OptimizationConfig& o) {
  const std::string w = "optimizer";
  check_keys(j, {"max_iterations", "knot_rate", "convergence_tol", "control_bound_nm", "boundary_pinning",
                 "target_infidelity", "gradient_mode"},
             w);
  o.max_iterations = integer(j, "max_iterations", o.max_iterations, w);
  o.knot_rate = number(j, "knot_rate", o.knot_rate, w);
  o.convergence_tol = number(j, "convergence_tol", o.convergence_tol, w);
  o.control_bound = number(j, "control_bound_nm", o.control_bound, w);
  o.boundary_pinning = boolean(j, "boundary_pinning", o.boundary_pinning, w);
  o.target_infidelity = number(j, "target_infidelity", o.target_infidelity, w);
  const std::string mode = text(j, "gradient_mode", "adjoint", w);
  if (mode == "adjoint") o.gradient_mode = GradientMode::kAdjoint;
  else if (mode == "finite-difference") o.gradient_mode = GradientMode::kFiniteDifference;
  else throw ConfigError("optimizer.gradient_mode: expected 'adjoint' or 'finite-difference'");
  try {
    o.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

json range_json(double start, double stop, int count, bool log = false) {
  return {{"start", start}, {"stop", stop}, {"count", count}, {"log", log}};
}

// Merges user sweep settings over the defaults of an experiment; unknown keys
// are rejected.
json resolve_sweep(ExperimentKind kind, const json& user, bool full) {
  json d;
  switch (kind) {
    case ExperimentKind::kDephasingStudy:
      d = {{"points_nm", json::array()},
           {"db_par", full ? json(Range{0.02, 0.2, 10}.values()) : json({0.02, 0.05, 0.1, 0.2})},
           {"Tg_ns", range_json(5, 360, full ? 36 : 8, true)},
           {"kappa_z", {1e-6, 5e-6}},
           {"optimize", true},
           {"optimize_max_Tg_ns", full ? 360.0 : 20.0}};
      break;
    case ExperimentKind::kFreqSweep:
      d = {{"omega_MHz", range_json(555, 565, full ? 201 : 21)},
           {"x0_nm", full ? range_json(1, 20, 20) : range_json(10, 10, 1)},
           {"kappa_z", {0.0, 5e-6}},
           {"off_resonance_MHz", 5.0}};
      break;
    case ExperimentKind::kGridSweep:
      d = {{"x0_nm", range_json(2, 20, full ? 20 : 8)},
           {"Tg_ns", range_json(5, 60, full ? 20 : 8)},
           {"optimize", true},
           {"threshold", 1e-3}};
      break;
    case ExperimentKind::kMagnetScan:
      d = {{"positions_nm", range_json(40, 160, full ? 61 : 9)},
           {"x0_nm", 10.0},
           {"kappa_z", {1e-6, 5e-6}},
           {"models", {"ge-diffusion", "step"}},
           {"calibrate", true},
           {"optimize", true}};
      break;
    case ExperimentKind::kEnsemble:
      d = {{"devices", full ? 1000 : 100},
           {"models", {"ge-diffusion", "step"}},
           {"kappa_z", {1e-6}},
           {"center_nm", 100.0},
           {"x0_nm", 10.0},
           {"calibrate", true},
           {"optimize", true},
           {"threshold", 1e-3},
           {"bin_width_ueV", 20.0}};
      break;
    case ExperimentKind::kOptimizeOne:
    case ExperimentKind::kCalibrateOne:
      d = {{"x0_nm", 10.0}, {"Tg_ns", nullptr}, {"omega_GHz", nullptr}};
      break;
  }
  if (!user.is_null()) {
    if (!user.is_object()) throw ConfigError("sweep: expected an object");
    for (const auto& [key, value] : user.items()) {
      if (!d.contains(key)) throw ConfigError("sweep: unknown key '" + key + "' for this experiment");
      d[key] = value;
    }
  }
  return d;
}

}  // namespace

const char* to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKinds)
    if (k == kind) return name;
  return "unknown";
}

ExperimentKind experiment_from_string(const std::string& name) {
  for (const auto& [k, n] : kKinds)
    if (name == n) return k;
  throw ConfigError("unknown experiment '" + name + "'");
}

std::vector<double> Range::values() const {
  if (count < 1) throw ConfigError("range: count must be >= 1");
  if (count == 1) return {start};
  if (log && !(start > 0.0 && stop > 0.0)) throw ConfigError("range: log spacing needs positive bounds");
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double f = static_cast<double>(i) / (count - 1);
    v[i] = log ? start * std::pow(stop / start, f) : start + f * (stop - start);
  }
  v.back() = stop;
  return v;
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  check_keys(doc, {"experiment", "seed", "workers", "output_dir", "full_scale", "params", "landscape",
                   "optimizer", "calibration", "sweep"},
             "config");
  ExperimentConfig cfg;
  if (!doc.contains("experiment")) throw ConfigError("config: missing 'experiment'");
  cfg.kind = experiment_from_string(text(doc, "experiment", "", "config"));
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_integer() || doc["seed"].get<long long>() < 0)
      throw ConfigError("config.seed: expected a nonnegative integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("workers")) {
    const int w = integer(doc, "workers", 1, "config");
    if (w < 1) throw ConfigError("config.workers: must be >= 1");
    cfg.workers = static_cast<unsigned>(w);
  }
  cfg.output_dir = base_dir / text(doc, "output_dir", "out", "config");
  cfg.full_scale = boolean(doc, "full_scale", false, "config");
  if (doc.contains("params")) parse_params(doc["params"], cfg);
  if (doc.contains("landscape")) parse_landscape(doc["landscape"], base_dir, cfg.landscape);
  if (doc.contains("optimizer")) parse_optimizer(doc["optimizer"], cfg.optimizer);
  if (doc.contains("calibration")) {
    const json& c = doc["calibration"];
    check_keys(c, {"budget", "omega_halfwidth_MHz", "Tg_fraction"}, "calibration");
    cfg.calibration_budget = integer(c, "budget", cfg.calibration_budget, "calibration");
    cfg.calibration_omega_halfwidth =
        1e-3 * number(c, "omega_halfwidth_MHz", 1e3 * cfg.calibration_omega_halfwidth, "calibration");
    cfg.calibration_Tg_fraction = number(c, "Tg_fraction", cfg.calibration_Tg_fraction, "calibration");
    if (cfg.calibration_budget < 10) throw ConfigError("calibration.budget: must be >= 10");
    if (!(cfg.calibration_omega_halfwidth > 0.0) || !(cfg.calibration_Tg_fraction > 0.0) ||
        !(cfg.calibration_Tg_fraction < 1.0))
      throw ConfigError("calibration: intervals must be nonempty");
  }
  cfg.sweep = resolve_sweep(cfg.kind, doc.contains("sweep") ? doc["sweep"] : json(), cfg.full_scale);
  try {
    cfg.params.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return load_config(path, json::object()); }

ExperimentConfig load_config(const std::filesystem::path& path, const json& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config '" + path.string() + "': expected a JSON object");
  doc.merge_patch(overrides);
  return parse_config(doc, path.parent_path());
}

json ExperimentConfig::canonical() const {
  const SimParams& p = params;
  json j;
  j["experiment"] = to_string(kind);
  j["seed"] = seed;
  j["full_scale"] = full_scale;
  j["params"] = {{"B_z", p.B_z},
                 {"db_perp", p.db_perp},
                 {"db_par", p.db_par},
                 {"Q", p.Q},
                 {"q_linked", p.q_linked},
                 {"kappa_z", p.kappa_z},
                 {"T1_v", std::isinf(p.T1_v) ? json("none") : json(p.T1_v)},
                 {"T2_s", t2_from_gradient ? json("t2_star") : std::isinf(p.T2_s) ? json("none") : json(p.T2_s)},
                 {"dx_rms", p.dx_rms},
                 {"dt", p.dt},
                 {"drive", p.drive == DriveNormalization::kMatchedRabi ? "matched-rabi" : "half-prefactor"},
                 {"valley_jump", p.dissipator.jump == ValleyJump::kTrueLowering ? "true-lowering" : "literal"},
                 {"anticommutator",
                  p.dissipator.anticommutator == Anticommutator::kStandard ? "standard" : "literal"}};
  json l;
  switch (landscape.kind) {
    case LandscapeSource::Kind::kFlat:
      l = {{"source", "flat"}, {"splitting_meV", landscape.flat_splitting}, {"length_nm", landscape.flat_length}};
      break;
    case LandscapeSource::Kind::kFile: {
      std::ifstream in(landscape.file, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      l = {{"source", "file"}, {"content_digest", hex64(fnv1a64(ss.str()))}};
      break;
    }
    case LandscapeSource::Kind::kGenerate:
      l = {{"source", "generate"}};
      break;
  }
  l["model"] = spinbus::to_string(landscape.model.model);
  l["seed"] = landscape.seed ? json(*landscape.seed) : json(nullptr);
  l["origin_nm"] = landscape.origin ? json(*landscape.origin) : json(nullptr);
  const GeDiffusionConfig& ge = landscape.model.ge;
  const StepModelConfig& st = landscape.model.step;
  l["ge"] = {ge.length, ge.correlation_length, ge.mean_splitting, ge.grid_spacing};
  l["step"] = {st.length, st.mean_step_spacing, st.phase_jump_per_step, st.base_splitting,
               st.dot_smoothing_width, st.magnitude_jitter, st.grid_spacing};
  j["landscape"] = l;
  const OptimizationConfig& o = optimizer;
  j["optimizer"] = {{"max_iterations", o.max_iterations},
                    {"knot_rate", o.knot_rate},
                    {"convergence_tol", o.convergence_tol},
                    {"control_bound_nm", o.control_bound},
                    {"boundary_pinning", o.boundary_pinning},
                    {"target_infidelity", o.target_infidelity},
                    {"gradient_mode", o.gradient_mode == GradientMode::kAdjoint ? "adjoint" : "finite-difference"}};
  j["calibration"] = {{"budget", calibration_budget},
                      {"omega_halfwidth_GHz", calibration_omega_halfwidth},
                      {"Tg_fraction", calibration_Tg_fraction}};
  j["sweep"] = sweep;
  return j;
}

std::string ExperimentConfig::digest() const { return hex64(fnv1a64(canonical().dump())); }

}  // namespace spinbus
