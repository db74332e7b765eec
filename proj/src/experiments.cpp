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

#include "spinbus/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>

#include "spinbus/errors.hpp"
#include "spinbus/parallel.hpp"
#include "spinbus/util.hpp"

namespace spinbus {

using nlohmann::json;

// ---- records and files ---------------------------------------------------------

double ResultRecord::coord(const std::string& name) const {
  for (const auto& [k, v] : coords)
    if (k == name) return v;
  throw ConfigError("record has no coordinate '" + name + "'");
}

json ResultRecord::to_json() const {
  json j;
  j["experiment"] = experiment;
  j["index"] = index;
  j["config_digest"] = config_digest;
  j["seed"] = seed;
  json c = json::object();
  for (const auto& [k, v] : coords) c[k] = v;
  j["coords"] = c;
  if (!tags.empty()) j["tags"] = tags;
  json inf = json::object();
  if (analytical) inf["analytical"] = *analytical;
  if (calibrated) inf["calibrated"] = *calibrated;
  if (optimized) inf["optimized"] = *optimized;
  j["infidelity"] = inf;
  if (t2_star_ns) j["T2_star_ns"] = *t2_star_ns;
  if (!diagnostics.empty()) j["diagnostics"] = diagnostics;
  return j;
}

ResultRecord ResultRecord::from_json(const json& j) {
  try {
    ResultRecord r;
    r.experiment = j.at("experiment").get<std::string>();
    r.index = j.at("index").get<std::size_t>();
    r.config_digest = j.at("config_digest").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    // Object keys come back sorted; coordinates are looked up by name.
    for (const auto& [k, v] : j.at("coords").items()) r.coords.emplace_back(k, v.get<double>());
    if (j.contains("tags")) r.tags = j["tags"].get<std::map<std::string, std::string>>();
    const json& inf = j.at("infidelity");
    if (inf.contains("analytical")) r.analytical = inf["analytical"].get<double>();
    if (inf.contains("calibrated")) r.calibrated = inf["calibrated"].get<double>();
    if (inf.contains("optimized")) r.optimized = inf["optimized"].get<double>();
    if (j.contains("T2_star_ns")) r.t2_star_ns = j["T2_star_ns"].get<double>();
    if (j.contains("diagnostics")) r.diagnostics = j["diagnostics"].get<std::map<std::string, double>>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed result record: ") + e.what());
  }
}

void CsvMatrix::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << row_label << '\\' << col_label;
  for (const std::string& c : cols) out << ',' << c;
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g", rows[i]);
    out << buf;
    for (double v : values[i]) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

// ---- shared helpers --------------------------------------------------------------

LandscapeProfile flat_landscape(double splitting_meV, double length_nm) {
  const double spacing = 0.5;
  const auto n = static_cast<std::size_t>(std::llround(length_nm / spacing)) + 1;
  return LandscapeProfile(0.0, spacing, std::vector<double>(n, 0.5 * splitting_meV),
                          std::vector<double>(n, 0.0));
}

Device build_device(const LandscapeSource& src, std::uint64_t fallback_seed) {
  LandscapeProfile profile = [&] {
    switch (src.kind) {
      case LandscapeSource::Kind::kFlat:
        return flat_landscape(src.flat_splitting, src.flat_length);
      case LandscapeSource::Kind::kFile:
        return load_landscape(src.file);
      case LandscapeSource::Kind::kGenerate:
        break;
    }
    return generate(src.model, src.seed.value_or(fallback_seed));
  }();
  const double origin = src.origin.value_or(0.5 * (profile.x_start() + profile.x_end()));
  if (!profile.contains(origin)) throw ConfigError("landscape origin lies outside the profile");
  return make_device(std::move(profile), origin);
}

double refine_minimum(const std::vector<double>& x, const std::vector<double>& f) {
  if (x.size() != f.size() || x.empty()) throw ConfigError("refine_minimum: size mismatch");
  const std::size_t i = static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin());
  if (i == 0 || i + 1 == x.size()) return x[i];
  const double x0 = x[i - 1], x1 = x[i], x2 = x[i + 1];
  const double f0 = f[i - 1], f1 = f[i], f2 = f[i + 1];
  const double num = (x1 - x0) * (x1 - x0) * (f1 - f2) - (x1 - x2) * (x1 - x2) * (f1 - f0);
  const double den = (x1 - x0) * (f1 - f2) - (x1 - x2) * (f1 - f0);
  if (den == 0.0) return x1;
  return std::clamp(x1 - 0.5 * num / den, x0, x2);
}

namespace {

std::vector<double> sweep_values(const json& sweep, const char* key) {
  const json& v = sweep.at(key);
  const std::string where = std::string("sweep.") + key;
  if (v.is_number()) return {v.get<double>()};
  if (v.is_array()) {
    std::vector<double> out;
    for (const json& e : v) {
      if (!e.is_number()) throw ConfigError(where + ": expected numbers");
      out.push_back(e.get<double>());
    }
    if (out.empty()) throw ConfigError(where + ": must not be empty");
    return out;
  }
  if (v.is_object()) {
    Range r;
    try {
      r.start = v.at("start").get<double>();
      r.stop = v.at("stop").get<double>();
      r.count = v.at("count").get<int>();
      r.log = v.value("log", false);
    } catch (const json::exception&) {
      throw ConfigError(where + ": range needs start, stop and count");
    }
    return r.values();
  }
  throw ConfigError(where + ": expected a number, a list or a range");
}

std::vector<std::string> sweep_strings(const json& sweep, const char* key) {
  const json& v = sweep.at(key);
  std::vector<std::string> out;
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array() || v.empty()) throw ConfigError(std::string("sweep.") + key + ": expected a list of names");
  for (const json& e : v) {
    if (!e.is_string()) throw ConfigError(std::string("sweep.") + key + ": expected names");
    out.push_back(e.get<std::string>());
  }
  return out;
}

bool sweep_flag(const json& sweep, const char* key) {
  const json& v = sweep.at(key);
  if (!v.is_boolean()) throw ConfigError(std::string("sweep.") + key + ": expected true or false");
  return v.get<bool>();
}

double sweep_number(const json& sweep, const char* key) {
  const json& v = sweep.at(key);
  if (!v.is_number()) throw ConfigError(std::string("sweep.") + key + ": expected a number");
  return v.get<double>();
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

SimParams task_params(const ExperimentConfig& cfg, double kappa) {
  SimParams p = cfg.params;
  p.kappa_z = kappa;
  if (cfg.t2_from_gradient) p.T2_s = t2_star(p);
  return p;
}

ResultRecord base_record(const ExperimentConfig& cfg, const std::string& digest, std::size_t index) {
  ResultRecord r;
  r.experiment = to_string(cfg.kind);
  r.index = index;
  r.config_digest = digest;
  r.seed = cfg.seed;
  return r;
}

std::uint64_t task_seed(const ExperimentConfig& cfg, std::size_t index) {
  return mix64(cfg.seed ^ mix64(static_cast<std::uint64_t>(index) + 1));
}

TrajectorySpec analytic_spec(const SimParams& p, double x0, std::optional<double> Tg = {},
                             std::optional<double> omega = {}) {
  TrajectorySpec s;
  s.x0 = x0;
  s.omega = omega.value_or(frame_frequency(p));
  s.phi = 0.0;
  s.Tg = Tg.value_or(analytical_gate_time(p, x0));
  return s;
}

OptimizationTrace optimize_into(ResultRecord& r, const TrajectorySpec& s, const Device& dev,
                                const SimParams& p, const ExperimentConfig& cfg) {
  const ControlVector init = sinusoid_controls(s, cfg.optimizer.knot_rate);
  OptimizationTrace t = optimize_trajectory(init, dev, p, cfg.optimizer);
  r.optimized = t.best_infidelity;
  r.diagnostics["opt_iterations"] = static_cast<double>(t.history.empty() ? 0 : t.history.back().iter);
  r.diagnostics["opt_evaluations"] = t.evaluations;
  r.diagnostics["opt_initial"] = t.initial_infidelity;
  r.diagnostics["opt_line_search_failed"] = t.line_search_failed ? 1.0 : 0.0;
  return t;
}

CalibrationResult calibrate_into(ResultRecord& r, double x0, const Device& dev, const SimParams& p,
                                 const ExperimentConfig& cfg, std::size_t index) {
  CalibrationConfig c = default_calibration(p, x0, cfg.calibration_omega_halfwidth, cfg.calibration_Tg_fraction);
  c.budget = cfg.calibration_budget;
  c.seed = task_seed(cfg, index);
  CalibrationResult res = bayesian_calibrate(c, x0, dev, p);
  r.calibrated = res.infidelity;
  r.diagnostics["omega_star_GHz"] = res.omega;
  r.diagnostics["Tg_star_ns"] = res.Tg;
  return res;
}

void analytic_into(ResultRecord& r, const TrajectorySpec& s, const Device& dev, const SimParams& p) {
  const FidelityReport rep = evaluate_sinusoid(s, dev, p);
  r.analytical = rep.infidelity;
  r.diagnostics["valley_excitation_max"] = rep.valley_excitation_max;
}

// Groups records by a key while keeping first-appearance order.
template <class Key, class F>
std::vector<std::pair<Key, std::vector<const ResultRecord*>>> group(const std::vector<ResultRecord>& rs, F key) {
  std::vector<std::pair<Key, std::vector<const ResultRecord*>>> out;
  for (const ResultRecord& r : rs) {
    const Key k = key(r);
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& g) { return g.first == k; });
    if (it == out.end()) {
      out.push_back({k, {}});
      it = std::prev(out.end());
    }
    it->second.push_back(&r);
  }
  return out;
}

std::vector<double> unique_sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::size_t position_of(const std::vector<double>& v, double x) {
  return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
}

// Matrix of `value(record)` laid out by two coordinates.
CsvMatrix matrix_of(const std::string& name, const std::vector<const ResultRecord*>& rs, const std::string& row,
                    const std::string& col, const std::function<double(const ResultRecord&)>& value) {
  std::vector<double> rv, cv;
  for (const ResultRecord* r : rs) {
    rv.push_back(r->coord(row));
    cv.push_back(r->coord(col));
  }
  CsvMatrix m;
  m.name = name;
  m.row_label = row;
  m.col_label = col;
  m.rows = unique_sorted(rv);
  const std::vector<double> cols = unique_sorted(cv);
  for (double c : cols) m.cols.push_back(label(c));
  m.values.assign(m.rows.size(), std::vector<double>(cols.size(), std::nan("")));
  for (const ResultRecord* r : rs)
    m.values[position_of(m.rows, r->coord(row))][position_of(cols, r->coord(col))] = value(*r);
  return m;
}

std::string kappa_tag(double kappa) { return "k" + label(kappa); }

// ---- experiments -----------------------------------------------------------------

ExperimentPlan plan_dephasing(const ExperimentConfig& cfg, const std::string& digest) {
  const json& sw = cfg.sweep;
  const std::vector<double> points = sw.at("points_nm").empty() ? std::vector<double>{} : sweep_values(sw, "points_nm");
  if (points.empty()) throw ConfigError("dephasing-study: sweep.points_nm is empty (no sampled landscape points)");
  const auto base = std::make_shared<Device>(build_device(cfg.landscape, cfg.seed));
  const std::vector<double> db = sweep_values(sw, "db_par");
  const std::vector<double> tg = sweep_values(sw, "Tg_ns");
  const std::vector<double> kappas = sweep_values(sw, "kappa_z");
  const bool optimize = sweep_flag(sw, "optimize");
  const double opt_max = sweep_number(sw, "optimize_max_Tg_ns");
  for (double x : points)
    if (!base->landscape->contains(x)) throw ConfigError("dephasing-study: point outside the landscape");

  ExperimentPlan plan;
  for (double kappa : kappas)
    for (std::size_t pi = 0; pi < points.size(); ++pi)
      for (double dbp : db)
        for (double T : tg) {
          const std::size_t index = plan.tasks.size();
          plan.tasks.push_back([=, &cfg] {
            ResultRecord r = base_record(cfg, digest, index);
            Device dev{base->landscape, points[pi]};
            SimParams p = cfg.params;
            p.kappa_z = kappa;
            p.db_par = dbp;
            p.q_linked = true;
            p.T2_s = t2_star(p);
            const double x0 = analytical_amplitude(p, T);
            r.coords = {{"kappa_z", kappa}, {"point", static_cast<double>(pi)}, {"position_nm", points[pi]},
                        {"E_V_ueV", 1e3 * valley_splitting(*dev.landscape, points[pi])}, {"db_par", dbp},
                        {"db_perp", p.effective_db_perp()}, {"Tg_ns", T}, {"x0_nm", x0}};
            r.t2_star_ns = p.T2_s;
            const TrajectorySpec s = analytic_spec(p, x0, T);
            analytic_into(r, s, dev, p);
            if (optimize && T <= opt_max) optimize_into(r, s, dev, p, cfg);
            return r;
          });
        }
  plan.aggregate = [](ExperimentOutput& out) {
    json minima = json::array();
    auto groups = group<std::string>(out.records, [](const ResultRecord& r) {
      return label(r.coord("kappa_z")) + "/" + label(r.coord("point")) + "/" + label(r.coord("db_par"));
    });
    for (const auto& [key, rs] : groups) {
      const ResultRecord* best = nullptr;
      std::optional<double> opt;
      for (const ResultRecord* r : rs) {
        if (!best || *r->analytical < *best->analytical) best = r;
        if (r->optimized) opt = std::min(opt.value_or(1.0), *r->optimized);
      }
      json m{{"kappa_z", best->coord("kappa_z")}, {"point", best->coord("point")},
             {"position_nm", best->coord("position_nm")}, {"E_V_ueV", best->coord("E_V_ueV")},
             {"db_par", best->coord("db_par")}, {"db_perp", best->coord("db_perp")},
             {"T2_star_ns", *best->t2_star_ns}, {"analytical_min", *best->analytical},
             {"analytical_argmin_Tg_ns", best->coord("Tg_ns")}, {"analytical_argmin_x0_nm", best->coord("x0_nm")}};
      m["optimized_min"] = opt ? json(*opt) : json(nullptr);
      minima.push_back(m);
    }
    out.summary["minima"] = minima;
    auto panels = group<std::string>(out.records, [](const ResultRecord& r) {
      return "dephasing_" + kappa_tag(r.coord("kappa_z")) + "_p" + label(r.coord("point"));
    });
    for (const auto& [name, rs] : panels)
      out.matrices.push_back(matrix_of(name, rs, "db_par", "Tg_ns", [](const ResultRecord& r) { return *r.analytical; }));
  };
  return plan;
}

ExperimentPlan plan_freq_sweep(const ExperimentConfig& cfg, const std::string& digest) {
  const json& sw = cfg.sweep;
  const auto dev = std::make_shared<Device>(build_device(cfg.landscape, cfg.seed));
  const std::vector<double> omegas = sweep_values(sw, "omega_MHz");
  const std::vector<double> x0s = sweep_values(sw, "x0_nm");
  const std::vector<double> kappas = sweep_values(sw, "kappa_z");
  const double off = sweep_number(sw, "off_resonance_MHz");
  ExperimentPlan plan;
  for (double kappa : kappas)
    for (double x0 : x0s)
      for (double w : omegas) {
        const std::size_t index = plan.tasks.size();
        plan.tasks.push_back([=, &cfg] {
          ResultRecord r = base_record(cfg, digest, index);
          const SimParams p = task_params(cfg, kappa);
          const TrajectorySpec s = analytic_spec(p, x0, {}, 1e-3 * w);
          r.coords = {{"kappa_z", kappa}, {"x0_nm", x0}, {"omega_MHz", w}, {"Tg_ns", s.Tg}};
          r.t2_star_ns = p.T2_s;
          analytic_into(r, s, *dev, p);
          return r;
        });
      }
  plan.aggregate = [off](ExperimentOutput& out) {
    json res = json::array();
    auto lines = group<std::string>(out.records, [](const ResultRecord& r) {
      return label(r.coord("kappa_z")) + "/" + label(r.coord("x0_nm"));
    });
    for (const auto& [key, rs] : lines) {
      std::vector<const ResultRecord*> sorted = rs;
      std::sort(sorted.begin(), sorted.end(),
                [](auto* a, auto* b) { return a->coord("omega_MHz") < b->coord("omega_MHz"); });
      std::vector<double> w, f;
      for (const ResultRecord* r : sorted) {
        w.push_back(r->coord("omega_MHz"));
        f.push_back(*r->analytical);
      }
      const std::size_t i = static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin());
      const double centre = refine_minimum(w, f);
      double sum = 0.0, sum2 = 0.0;
      int n = 0;
      for (std::size_t k = 0; k < w.size(); ++k)
        if (std::abs(w[k] - centre) >= off) {
          sum += f[k];
          sum2 += f[k] * f[k];
          ++n;
        }
      const double contrast = n > 1 ? std::sqrt(std::max(0.0, sum2 / n - (sum / n) * (sum / n))) : 0.0;
      res.push_back({{"kappa_z", sorted.front()->coord("kappa_z")}, {"x0_nm", sorted.front()->coord("x0_nm")},
                     {"resonance_MHz", centre}, {"grid_argmin_MHz", w[i]}, {"min_infidelity", f[i]},
                     {"fringe_contrast", contrast}, {"off_resonance_points", n}});
    }
    out.summary["resonances"] = res;
    for (const auto& [kappa, rs] : group<double>(out.records, [](const ResultRecord& r) { return r.coord("kappa_z"); }))
      out.matrices.push_back(matrix_of("freq_sweep_" + kappa_tag(kappa), rs, "omega_MHz", "x0_nm",
                                       [](const ResultRecord& r) { return *r.analytical; }));
  };
  return plan;
}

ExperimentPlan plan_grid_sweep(const ExperimentConfig& cfg, const std::string& digest) {
  const json& sw = cfg.sweep;
  const auto dev = std::make_shared<Device>(build_device(cfg.landscape, cfg.seed));
  const std::vector<double> x0s = sweep_values(sw, "x0_nm");
  const std::vector<double> tgs = sweep_values(sw, "Tg_ns");
  const bool optimize = sweep_flag(sw, "optimize");
  const double threshold = sweep_number(sw, "threshold");
  ExperimentPlan plan;
  for (double T : tgs)
    for (double x0 : x0s) {
      const std::size_t index = plan.tasks.size();
      plan.tasks.push_back([=, &cfg] {
        ResultRecord r = base_record(cfg, digest, index);
        const SimParams p = task_params(cfg, cfg.params.kappa_z);
        const TrajectorySpec s = analytic_spec(p, x0, T);
        r.coords = {{"x0_nm", x0}, {"Tg_ns", T}};
        r.t2_star_ns = p.T2_s;
        analytic_into(r, s, *dev, p);
        if (optimize) optimize_into(r, s, *dev, p, cfg);
        return r;
      });
    }
  plan.aggregate = [threshold](ExperimentOutput& out) {
    std::vector<const ResultRecord*> all;
    for (const ResultRecord& r : out.records) all.push_back(&r);
    out.matrices.push_back(matrix_of("grid_pre", all, "Tg_ns", "x0_nm", [](const ResultRecord& r) { return *r.analytical; }));
    std::size_t pre = 0, post = 0, with_post = 0;
    bool short_ok = true, strong_ok = true;
    json failing = json::array();
    for (const ResultRecord* r : all) {
      if (*r->analytical < threshold) ++pre;
      if (!r->optimized) continue;
      ++with_post;
      const bool ok = *r->optimized < threshold;
      if (ok) ++post;
      else failing.push_back({{"x0_nm", r->coord("x0_nm")}, {"Tg_ns", r->coord("Tg_ns")}, {"infidelity", *r->optimized}});
      if (!ok && r->coord("Tg_ns") < 42.0) short_ok = false;
      if (!ok && r->coord("x0_nm") > 14.0) strong_ok = false;
    }
    if (with_post > 0)
      out.matrices.push_back(matrix_of("grid_post", all, "Tg_ns", "x0_nm", [](const ResultRecord& r) {
        return r.optimized.value_or(std::nan(""));
      }));
    const double n = static_cast<double>(all.size());
    out.summary["threshold"] = threshold;
    out.summary["cells"] = all.size();
    out.summary["fraction_pre_below"] = pre / n;
    out.summary["fraction_post_below"] = with_post ? json(post / static_cast<double>(with_post)) : json(nullptr);
    out.summary["all_Tg_below_42_ok"] = short_ok;
    out.summary["all_x0_above_14_ok"] = strong_ok;
    out.summary["failing_cells"] = failing;
  };
  return plan;
}

ExperimentPlan plan_magnet_scan(const ExperimentConfig& cfg, const std::string& digest) {
  const json& sw = cfg.sweep;
  const std::vector<double> positions = sweep_values(sw, "positions_nm");
  const double x0 = sweep_number(sw, "x0_nm");
  const std::vector<double> kappas = sweep_values(sw, "kappa_z");
  const bool calibrate = sweep_flag(sw, "calibrate");
  const bool optimize = sweep_flag(sw, "optimize");
  std::vector<std::pair<std::string, std::shared_ptr<const LandscapeProfile>>> devices;
  for (const std::string& name : sweep_strings(sw, "models")) {
    LandscapeModelSpec spec = cfg.landscape.model;
    try {
      spec.model = valley_model_from_string(name);
    } catch (const Error& e) {
      throw ConfigError(std::string("sweep.models: ") + e.what());
    }
    if (spec.model == ValleyModel::kExplicit) throw ConfigError("sweep.models: cannot generate explicit profiles");
    auto profile = std::make_shared<const LandscapeProfile>(generate(spec, cfg.landscape.seed.value_or(cfg.seed)));
    for (double x : positions)
      if (!profile->contains(x)) throw ConfigError("magnet-scan: position outside the landscape");
    devices.emplace_back(name, std::move(profile));
  }
  ExperimentPlan plan;
  for (const auto& [model, profile] : devices)
    for (double kappa : kappas)
      for (double x : positions) {
        const std::size_t index = plan.tasks.size();
        plan.tasks.push_back([=, &cfg] {
          ResultRecord r = base_record(cfg, digest, index);
          const Device dev{profile, x};
          const SimParams p = task_params(cfg, kappa);
          const TrajectorySpec s = analytic_spec(p, x0);
          r.tags["model"] = model;
          r.coords = {{"kappa_z", kappa}, {"position_nm", x}, {"E_V_ueV", 1e3 * valley_splitting(*profile, x)},
                      {"x0_nm", x0}, {"Tg_ns", s.Tg}};
          r.t2_star_ns = p.T2_s;
          analytic_into(r, s, dev, p);
          if (calibrate) calibrate_into(r, x0, dev, p, cfg, index);
          if (optimize) optimize_into(r, s, dev, p, cfg);
          return r;
        });
      }
  plan.aggregate = [](ExperimentOutput& out) {
    json curves = json::array();
    auto groups = group<std::string>(out.records, [](const ResultRecord& r) {
      return r.tags.at("model") + "_" + kappa_tag(r.coord("kappa_z"));
    });
    for (const auto& [name, rs] : groups) {
      CsvMatrix m;
      m.name = "magnet_scan_" + name;
      m.row_label = "position_nm";
      m.col_label = "quantity";
      m.cols = {"E_V_ueV", "analytical", "calibrated", "optimized"};
      double worst_opt = 0.0;
      const ResultRecord* worst_an = nullptr;
      const ResultRecord* min_ev = nullptr;
      for (const ResultRecord* r : rs) {
        m.rows.push_back(r->coord("position_nm"));
        m.values.push_back({r->coord("E_V_ueV"), r->analytical.value_or(std::nan("")),
                            r->calibrated.value_or(std::nan("")), r->optimized.value_or(std::nan(""))});
        if (r->optimized) worst_opt = std::max(worst_opt, *r->optimized);
        if (!worst_an || *r->analytical > *worst_an->analytical) worst_an = r;
        if (!min_ev || r->coord("E_V_ueV") < min_ev->coord("E_V_ueV")) min_ev = r;
      }
      out.matrices.push_back(m);
      curves.push_back({{"model", rs.front()->tags.at("model")}, {"kappa_z", rs.front()->coord("kappa_z")},
                        {"max_optimized", worst_opt}, {"worst_analytical_position_nm", worst_an->coord("position_nm")},
                        {"min_E_V_position_nm", min_ev->coord("position_nm")}});
    }
    out.summary["curves"] = curves;
  };
  return plan;
}

ExperimentPlan plan_ensemble(const ExperimentConfig& cfg, const std::string& digest) {
  const json& sw = cfg.sweep;
  const int n = static_cast<int>(sweep_number(sw, "devices"));
  if (n < 1) throw ConfigError("sweep.devices: must be >= 1");
  const std::vector<double> kappas = sweep_values(sw, "kappa_z");
  const double centre = sweep_number(sw, "center_nm");
  const double x0 = sweep_number(sw, "x0_nm");
  const bool calibrate = sweep_flag(sw, "calibrate");
  const bool optimize = sweep_flag(sw, "optimize");
  const double threshold = sweep_number(sw, "threshold");
  const double bin = sweep_number(sw, "bin_width_ueV");
  if (!(bin > 0.0)) throw ConfigError("sweep.bin_width_ueV: must be positive");
  std::vector<LandscapeModelSpec> specs;
  std::vector<std::string> names = sweep_strings(sw, "models");
  for (const std::string& name : names) {
    LandscapeModelSpec spec = cfg.landscape.model;
    try {
      spec.model = valley_model_from_string(name);
    } catch (const Error& e) {
      throw ConfigError(std::string("sweep.models: ") + e.what());
    }
    if (spec.model == ValleyModel::kExplicit) throw ConfigError("sweep.models: cannot generate explicit profiles");
    specs.push_back(spec);
  }
  ExperimentPlan plan;
  for (std::size_t mi = 0; mi < specs.size(); ++mi)
    for (double kappa : kappas)
      for (int d = 0; d < n; ++d) {
        const std::size_t index = plan.tasks.size();
        const LandscapeModelSpec spec = specs[mi];
        const std::string model = names[mi];
        plan.tasks.push_back([=, &cfg] {
          ResultRecord r = base_record(cfg, digest, index);
          const std::uint64_t dseed = device_seed(cfg.seed, static_cast<std::uint64_t>(d));
          const Device dev = make_device(generate(spec, dseed), centre);
          if (!dev.landscape->contains(centre)) throw ConfigError("ensemble: center outside the device");
          const SimParams p = task_params(cfg, kappa);
          const TrajectorySpec s = analytic_spec(p, x0);
          r.tags["model"] = model;
          r.coords = {{"kappa_z", kappa}, {"device", static_cast<double>(d)},
                      {"E_V_ueV", 1e3 * valley_splitting(*dev.landscape, centre)}, {"x0_nm", x0}, {"Tg_ns", s.Tg}};
          r.diagnostics["device_seed"] = static_cast<double>(dseed % (1ULL << 52));
          r.t2_star_ns = p.T2_s;
          analytic_into(r, s, dev, p);
          if (calibrate) calibrate_into(r, x0, dev, p, cfg, index);
          if (optimize) optimize_into(r, s, dev, p, cfg);
          return r;
        });
      }
  plan.aggregate = [threshold, bin](ExperimentOutput& out) {
    json groups_json = json::array();
    auto groups = group<std::string>(out.records, [](const ResultRecord& r) {
      return r.tags.at("model") + "_" + kappa_tag(r.coord("kappa_z"));
    });
    for (const auto& [name, rs] : groups) {
      std::size_t an = 0, ca = 0, op = 0, ca_n = 0, op_n = 0;
      std::map<long, std::array<double, 7>> bins;  // count, sums and below-threshold counts
      for (const ResultRecord* r : rs) {
        const long b = static_cast<long>(std::floor(r->coord("E_V_ueV") / bin));
        auto& acc = bins[b];
        acc[0] += 1;
        acc[1] += *r->analytical;
        if (*r->analytical < threshold) ++an, acc[4] += 1;
        if (r->calibrated) {
          ++ca_n;
          acc[2] += *r->calibrated;
          if (*r->calibrated < threshold) ++ca, acc[5] += 1;
        }
        if (r->optimized) {
          ++op_n;
          acc[3] += *r->optimized;
          if (*r->optimized < threshold) ++op, acc[6] += 1;
        }
      }
      CsvMatrix m;
      m.name = "ensemble_" + name;
      m.row_label = "E_V_bin_center_ueV";
      m.col_label = "quantity";
      m.cols = {"count", "analytical_mean", "calibrated_mean", "optimized_mean", "analytical_below",
                "calibrated_below", "optimized_below"};
      for (const auto& [b, acc] : bins) {
        m.rows.push_back((b + 0.5) * bin);
        const double c = acc[0];
        m.values.push_back({c, acc[1] / c, ca_n ? acc[2] / c : std::nan(""), op_n ? acc[3] / c : std::nan(""),
                            acc[4], acc[5], acc[6]});
      }
      out.matrices.push_back(m);
      groups_json.push_back({{"model", rs.front()->tags.at("model")},
                             {"kappa_z", rs.front()->coord("kappa_z")},
                             {"devices", rs.size()},
                             {"analytical_below", an},
                             {"calibrated_below", ca_n ? json(ca) : json(nullptr)},
                             {"optimized_below", op_n ? json(op) : json(nullptr)},
                             {"threshold", threshold}});
    }
    out.summary["groups"] = groups_json;
  };
  return plan;
}

ExperimentPlan plan_single(const ExperimentConfig& cfg, const std::string& digest, bool optimize) {
  const json& sw = cfg.sweep;
  const auto dev = std::make_shared<Device>(build_device(cfg.landscape, cfg.seed));
  const double x0 = sweep_number(sw, "x0_nm");
  const std::optional<double> Tg = sw.at("Tg_ns").is_null() ? std::nullopt : std::optional(sweep_number(sw, "Tg_ns"));
  const std::optional<double> omega =
      sw.at("omega_GHz").is_null() ? std::nullopt : std::optional(sweep_number(sw, "omega_GHz"));
  ExperimentPlan plan;
  plan.tasks.push_back([=, &cfg] {
    ResultRecord r = base_record(cfg, digest, 0);
    const SimParams p = task_params(cfg, cfg.params.kappa_z);
    const TrajectorySpec s = analytic_spec(p, x0, Tg, omega);
    r.coords = {{"position_nm", dev->origin}, {"E_V_ueV", 1e3 * valley_splitting(*dev->landscape, dev->origin)},
                {"x0_nm", x0}, {"Tg_ns", s.Tg}, {"omega_GHz", s.omega}};
    r.t2_star_ns = p.T2_s;
    analytic_into(r, s, *dev, p);
    if (optimize) {
      const OptimizationTrace t = optimize_into(r, s, *dev, p, cfg);
      r.artifacts.emplace_back("pulse.json", pulse_to_string(t.best));
      std::string lines;
      for (const IterationRecord& it : t.history)
        lines += json{{"iter", it.iter}, {"infidelity", it.infidelity}, {"grad_norm", it.grad_norm},
                      {"time_ms", it.time_ms}}.dump() + "\n";
      r.artifacts.emplace_back("trace.jsonl", lines);
    } else {
      calibrate_into(r, x0, *dev, p, cfg, 0);
    }
    return r;
  });
  plan.aggregate = [](ExperimentOutput&) {};
  return plan;
}

}  // namespace

ExperimentPlan plan_experiment(const ExperimentConfig& cfg) {
  const std::string digest = cfg.digest();
  switch (cfg.kind) {
    case ExperimentKind::kDephasingStudy: return plan_dephasing(cfg, digest);
    case ExperimentKind::kFreqSweep: return plan_freq_sweep(cfg, digest);
    case ExperimentKind::kGridSweep: return plan_grid_sweep(cfg, digest);
    case ExperimentKind::kMagnetScan: return plan_magnet_scan(cfg, digest);
    case ExperimentKind::kEnsemble: return plan_ensemble(cfg, digest);
    case ExperimentKind::kOptimizeOne: return plan_single(cfg, digest, true);
    case ExperimentKind::kCalibrateOne: return plan_single(cfg, digest, false);
  }
  throw ConfigError("unknown experiment");
}

ExperimentOutput aggregate_records(const ExperimentConfig& cfg, std::vector<ResultRecord> records) {
  ExperimentPlan plan = plan_experiment(cfg);
  ExperimentOutput out;
  out.records = std::move(records);
  std::sort(out.records.begin(), out.records.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  out.summary["experiment"] = to_string(cfg.kind);
  out.summary["config_digest"] = cfg.digest();
  out.summary["seed"] = cfg.seed;
  out.summary["records"] = out.records.size();
  plan.aggregate(out);
  out.summary["config"] = cfg.canonical();
  return out;
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg,
                                const std::function<void(std::size_t, std::size_t)>& progress) {
  ExperimentPlan plan = plan_experiment(cfg);
  std::vector<ResultRecord> records(plan.size());
  std::mutex mu;
  std::size_t done = 0;
  parallel_for(plan.size(), cfg.workers, [&](std::size_t i) {
    records[i] = plan.tasks[i]();
    if (progress) {
      std::lock_guard lock(mu);
      progress(++done, plan.size());
    }
  });
  return aggregate_records(cfg, std::move(records));
}

ResultRecord run_record(const ExperimentConfig& cfg, std::size_t index) {
  ExperimentPlan plan = plan_experiment(cfg);
  if (index >= plan.size()) throw ConfigError("record index out of range");
  return plan.tasks[index]();
}

void write_output(const ExperimentOutput& out, const ExperimentConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + cfg.output_dir.string() + "': " + ec.message());
  const std::string name = to_string(cfg.kind);
  {
    std::ofstream f(cfg.output_dir / (name + ".jsonl"));
    if (!f) throw IoError("cannot write records to '" + cfg.output_dir.string() + "'");
    for (const ResultRecord& r : out.records) f << r.to_json().dump() << '\n';
  }
  {
    std::ofstream f(cfg.output_dir / (name + "_summary.json"));
    if (!f) throw IoError("cannot write summary to '" + cfg.output_dir.string() + "'");
    f << out.summary.dump(2) << '\n';
  }
  for (const CsvMatrix& m : out.matrices) m.write(cfg.output_dir / (m.name + ".csv"));
  for (const ResultRecord& r : out.records)
    for (const auto& [file, contents] : r.artifacts) {
      std::ofstream f(cfg.output_dir / file);
      if (!f) throw IoError("cannot write '" + file + "'");
      f << contents;
    }
}

ExperimentOutput run_dephasing_study(const ExperimentConfig& cfg) { return run_experiment(cfg); }
ExperimentOutput run_freq_sweep(const ExperimentConfig& cfg) { return run_experiment(cfg); }
ExperimentOutput run_grid_sweep(const ExperimentConfig& cfg) { return run_experiment(cfg); }
ExperimentOutput run_magnet_scan(const ExperimentConfig& cfg) { return run_experiment(cfg); }
ExperimentOutput run_ensemble(const ExperimentConfig& cfg) { return run_experiment(cfg); }
ExperimentOutput run_optimize_one(const ExperimentConfig& cfg) { return run_experiment(cfg); }
ExperimentOutput run_calibrate_one(const ExperimentConfig& cfg) { return run_experiment(cfg); }

}  // namespace spinbus
