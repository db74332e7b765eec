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
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinbus/hamiltonian.hpp"
#include "spinbus/landscape.hpp"
#include "spinbus/optimizer.hpp"
#include "spinbus/params.hpp"

namespace spinbus {

enum class ExperimentKind {
  kDephasingStudy,
  kFreqSweep,
  kGridSweep,
  kMagnetScan,
  kEnsemble,
  kOptimizeOne,
  kCalibrateOne,
};

const char* to_string(ExperimentKind kind);
ExperimentKind experiment_from_string(const std::string& name);

// Linear or logarithmic sample range.
struct Range {
  double start = 0.0;
  double stop = 0.0;
  int count = 1;
  bool log = false;
  std::vector<double> values() const;
};

// Where the landscape of a single-device experiment comes from.
struct LandscapeSource {
  enum class Kind { kFlat, kFile, kGenerate } kind = Kind::kFlat;
  double flat_splitting = 0.1;  // meV
  double flat_length = 200.0;   // nm
  std::filesystem::path file;
  LandscapeModelSpec model{};
  std::optional<std::uint64_t> seed;  // generator seed; defaults to the experiment seed
  std::optional<double> origin;       // nm; defaults to the profile centre
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kOptimizeOne;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::filesystem::path output_dir = "out";
  bool full_scale = false;

  SimParams params{};
  // Take T2_s from the charge-noise limit of the active ∂b∥ (t2_star).
  bool t2_from_gradient = true;
  LandscapeSource landscape{};
  OptimizationConfig optimizer{};
  double calibration_omega_halfwidth = 3e-3;  // GHz
  double calibration_Tg_fraction = 0.15;
  int calibration_budget = 60;

  // Experiment-specific settings, already resolved to defaults.
  nlohmann::json sweep = nlohmann::json::object();

  // Canonical JSON of everything that affects numbers (not workers or paths).
  nlohmann::json canonical() const;
  std::string digest() const;
};

// Parses a JSON config document. Throws ConfigError with a readable message.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);
// Top-level keys of `overrides` are merged over the file (JSON merge patch).
ExperimentConfig load_config(const std::filesystem::path& path, const nlohmann::json& overrides);

struct ResultRecord {
  std::string experiment;
  std::size_t index = 0;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, double>> coords;
  std::map<std::string, std::string> tags;
  std::optional<double> analytical;
  std::optional<double> calibrated;
  std::optional<double> optimized;
  std::optional<double> t2_star_ns;
  std::map<std::string, double> diagnostics;
  // Files produced alongside the record (name, contents); not serialized.
  std::vector<std::pair<std::string, std::string>> artifacts;

  double coord(const std::string& name) const;
  nlohmann::json to_json() const;
  static ResultRecord from_json(const nlohmann::json& j);
};

struct CsvMatrix {
  std::string name;
  std::string row_label;
  std::string col_label;
  std::vector<double> rows;
  std::vector<std::string> cols;
  std::vector<std::vector<double>> values;  // [row][col]
  void write(const std::filesystem::path& path) const;
};

struct ExperimentOutput {
  std::vector<ResultRecord> records;
  nlohmann::json summary = nlohmann::json::object();
  std::vector<CsvMatrix> matrices;
};

// An experiment expanded into independent, indexed tasks.
struct ExperimentPlan {
  std::size_t size() const { return tasks.size(); }
  std::vector<std::function<ResultRecord()>> tasks;
  // Builds summary and matrices from records alone.
  std::function<void(ExperimentOutput&)> aggregate;
};

ExperimentPlan plan_experiment(const ExperimentConfig& cfg);
// `progress`, when set, is called after every finished task (possibly from a
// worker thread, serialized by the runner).
ExperimentOutput run_experiment(const ExperimentConfig& cfg,
                                const std::function<void(std::size_t, std::size_t)>& progress = {});
// Aggregates previously written records (e.g. loaded from a JSON lines file).
ExperimentOutput aggregate_records(const ExperimentConfig& cfg, std::vector<ResultRecord> records);
// Re-runs a single record by index.
ResultRecord run_record(const ExperimentConfig& cfg, std::size_t index);
void write_output(const ExperimentOutput& out, const ExperimentConfig& cfg);

// Convenience wrappers, one per subcommand.
ExperimentOutput run_dephasing_study(const ExperimentConfig& cfg);
ExperimentOutput run_freq_sweep(const ExperimentConfig& cfg);
ExperimentOutput run_grid_sweep(const ExperimentConfig& cfg);
ExperimentOutput run_magnet_scan(const ExperimentConfig& cfg);
ExperimentOutput run_ensemble(const ExperimentConfig& cfg);
ExperimentOutput run_optimize_one(const ExperimentConfig& cfg);
ExperimentOutput run_calibrate_one(const ExperimentConfig& cfg);

// Builds the device described by a landscape source.
Device build_device(const LandscapeSource& src, std::uint64_t fallback_seed);
// Flat landscape with constant real Δ = splitting/2 on [0, length].
LandscapeProfile flat_landscape(double splitting_meV, double length_nm = 200.0);

// Resonance location along ω by a parabola through the minimum and its two
// neighbours (in log infidelity). Returns the grid argmin at the edges.
double refine_minimum(const std::vector<double>& omega, const std::vector<double>& infidelity);

}  // namespace spinbus
