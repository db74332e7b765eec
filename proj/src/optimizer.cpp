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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include <ceres/ceres.h>
#include <nlohmann/json.hpp>

#include "spinbus/errors.hpp"
#include "spinbus/optimizer.hpp"

namespace spinbus {

void OptimizationConfig::validate() const {
  if (max_iterations < 1) throw ConfigError("optimizer: max_iterations must be >= 1");
  if (!(knot_rate >= 1.0)) throw ConfigError("optimizer: knot_rate must be >= 1 per ns");
  if (!(control_bound > 0.0)) throw ConfigError("optimizer: control bound must be positive");
  if (!(convergence_tol >= 0.0)) throw ConfigError("optimizer: convergence_tol must be >= 0");
  if (!(target_infidelity >= 0.0)) throw ConfigError("optimizer: target infidelity must be >= 0");
}

void OptimizationTrace::write_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const IterationRecord& r : history) {
    nlohmann::json j{{"iter", r.iter}, {"infidelity", r.infidelity}, {"grad_norm", r.grad_norm},
                     {"time_ms", r.time_ms}};
    out << j.dump() << '\n';
  }
}

namespace {

// Free knots are u_j with knot = B·tanh(u_j/B); pinned knots stay at zero.
class KnotObjective final : public ceres::FirstOrderFunction {
 public:
  KnotObjective(ControlVector base, std::vector<std::size_t> free, const Device& device,
                const SimParams& p, const OptimizationConfig& cfg)
      : base_(std::move(base)), free_(std::move(free)), device_(device), p_(p), cfg_(cfg) {
    best_ = base_;
  }

  bool Evaluate(const double* u, double* cost, double* gradient) const override {
    ControlVector c = base_;
    const double bound = cfg_.control_bound;
    for (std::size_t j = 0; j < free_.size(); ++j) c.knots[free_[j]] = bound * std::tanh(u[j] / bound);
    GradientOptions g;
    g.mode = cfg_.gradient_mode;
    g.upsample = cfg_.upsample;
    ObjectiveValue v;
    if (gradient) {
      v = infidelity_and_gradient(c, device_, p_, g);
    } else {
      v.infidelity = evaluate_trajectory(c, device_, p_, pi_rotation_y(), cfg_.upsample).infidelity;
    }
    ++evaluations_;
    if (!std::isfinite(v.infidelity)) return false;
    *cost = v.infidelity;
    if (gradient) {
      for (std::size_t j = 0; j < free_.size(); ++j) {
        const double th = std::tanh(u[j] / bound);
        gradient[j] = v.gradient[free_[j]] * (1.0 - th * th);
      }
    }
    if (v.infidelity < best_infidelity_) {
      best_infidelity_ = v.infidelity;
      best_ = c;
    }
    return true;
  }

  int NumParameters() const override { return static_cast<int>(free_.size()); }

  const ControlVector& best() const { return best_; }
  double best_infidelity() const { return best_infidelity_; }
  int evaluations() const { return evaluations_; }

 private:
  ControlVector base_;
  std::vector<std::size_t> free_;
  const Device& device_;
  const SimParams& p_;
  const OptimizationConfig& cfg_;
  mutable ControlVector best_;
  mutable double best_infidelity_ = std::numeric_limits<double>::infinity();
  mutable int evaluations_ = 0;
};

class TraceCallback final : public ceres::IterationCallback {
 public:
  TraceCallback(OptimizationTrace& trace, const KnotObjective& objective, double target)
      : trace_(trace), objective_(objective), target_(target) {}

  ceres::CallbackReturnType operator()(const ceres::IterationSummary& s) override {
    IterationRecord r;
    r.iter = s.iteration;
    r.infidelity = s.cost;
    r.grad_norm = s.gradient_norm;
    r.time_ms = 1e3 * s.iteration_time_in_seconds;
    trace_.history.push_back(r);
    if (target_ > 0.0 && objective_.best_infidelity() < target_)
      return ceres::SOLVER_TERMINATE_SUCCESSFULLY;
    return ceres::SOLVER_CONTINUE;
  }

 private:
  OptimizationTrace& trace_;
  const KnotObjective& objective_;
  double target_;
};

}  // namespace

OptimizationTrace optimize_trajectory(const ControlVector& initial, const Device& device,
                                      const SimParams& p, const OptimizationConfig& cfg) {
  cfg.validate();
  p.validate();
  ControlVector start = initial;
  // Initial guesses may overshoot the hardware bound (e.g. short analytical gates).
  for (double& k : start.knots)
    if (std::isfinite(k)) k = std::clamp(k, -cfg.control_bound, cfg.control_bound);
  if (cfg.boundary_pinning && !start.knots.empty()) {
    start.knots.front() = 0.0;
    start.knots.back() = 0.0;
  }
  start.validate(cfg.control_bound);

  std::vector<std::size_t> free;
  const std::size_t first = cfg.boundary_pinning ? 1 : 0;
  const std::size_t last = cfg.boundary_pinning ? start.knots.size() - 1 : start.knots.size();
  for (std::size_t i = first; i < last; ++i) free.push_back(i);

  OptimizationTrace trace;
  const double bound = cfg.control_bound;
  std::vector<double> u(free.size());
  for (std::size_t j = 0; j < free.size(); ++j) {
    const double ratio = std::clamp(start.knots[free[j]] / bound, -0.999, 0.999);
    u[j] = bound * std::atanh(ratio);
    start.knots[free[j]] = bound * std::tanh(u[j] / bound);
  }

  if (free.empty()) {
    trace.best = start;
    trace.best_infidelity = evaluate_trajectory(start, device, p, pi_rotation_y(), cfg.upsample).infidelity;
    trace.initial_infidelity = trace.best_infidelity;
    trace.evaluations = 1;
    trace.termination = "no free knots";
    return trace;
  }

  auto* objective = new KnotObjective(start, free, device, p, cfg);
  ceres::GradientProblem problem(objective);  // takes ownership
  TraceCallback callback(trace, *objective, cfg.target_infidelity);

  ceres::GradientProblemSolver::Options options;
  options.line_search_direction_type = ceres::LBFGS;
  options.line_search_type = ceres::WOLFE;
  options.max_lbfgs_rank = 10;
  options.line_search_sufficient_function_decrease = 1e-4;
  options.line_search_sufficient_curvature_decrease = 0.9;
  options.max_num_iterations = cfg.max_iterations;
  options.function_tolerance = cfg.convergence_tol;
  options.gradient_tolerance = 1e-14;
  options.parameter_tolerance = 1e-14;
  options.logging_type = ceres::SILENT;
  options.minimizer_progress_to_stdout = false;
  options.callbacks.push_back(&callback);

  ceres::GradientProblemSolver::Summary summary;
  ceres::Solve(options, problem, u.data(), &summary);

  trace.initial_infidelity = summary.initial_cost;
  trace.best = objective->best();
  trace.best_infidelity = objective->best_infidelity();
  trace.evaluations = objective->evaluations();
  trace.line_search_failed = summary.termination_type == ceres::FAILURE;
  trace.termination = summary.message;
  if (!std::isfinite(trace.best_infidelity))
    throw NumericalError("optimizer produced no finite objective value: " + summary.message);
  return trace;
}

}  // namespace spinbus
