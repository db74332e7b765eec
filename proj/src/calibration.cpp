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
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "spinbus/errors.hpp"
#include "spinbus/optimizer.hpp"

namespace spinbus {

void CalibrationConfig::validate() const {
  if (!(omega_interval.second > omega_interval.first) || !(omega_interval.first > 0.0))
    throw ConfigError("calibration: degenerate frequency interval");
  if (!(Tg_interval.second > Tg_interval.first) || !(Tg_interval.first > 0.0))
    throw ConfigError("calibration: degenerate gate-time interval");
  if (budget < 10) throw ConfigError("calibration: budget must be at least 10 evaluations");
  if (initial_points < 2 || initial_points > budget)
    throw ConfigError("calibration: initial_points must lie in [2, budget]");
  if (!(noise_floor > 0.0)) throw ConfigError("calibration: noise floor must be positive");
}

CalibrationConfig default_calibration(const SimParams& p, double x0, double omega_halfwidth,
                                      double Tg_fraction) {
  CalibrationConfig c;
  const double f = frame_frequency(p);
  const double tg = analytical_gate_time(p, x0);
  c.omega_interval = {f - omega_halfwidth, f + omega_halfwidth};
  c.Tg_interval = {tg * (1.0 - Tg_fraction), tg * (1.0 + Tg_fraction)};
  return c;
}

namespace {

using Point = std::array<double, 2>;

double matern52(const Point& a, const Point& b, const Point& ell) {
  const double dx = (a[0] - b[0]) / ell[0];
  const double dy = (a[1] - b[1]) / ell[1];
  const double r = std::sqrt(5.0 * (dx * dx + dy * dy));
  return (1.0 + r + r * r / 3.0) * std::exp(-r);
}

// Zero-mean GP on standardized targets with unit signal variance.
class GaussianProcess {
 public:
  GaussianProcess(std::vector<Point> x, const std::vector<double>& y, Point ell, double noise)
      : x_(std::move(x)), ell_(ell) {
    const std::size_t n = x_.size();
    Eigen::MatrixXd k(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) k(i, j) = matern52(x_[i], x_[j], ell_);
    k.diagonal().array() += noise;
    chol_.compute(k);
    if (chol_.info() != Eigen::Success) throw NumericalError("GP covariance is not positive definite");
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));
    alpha_ = chol_.solve(yv);
    const Eigen::MatrixXd l = chol_.matrixL();
    log_marginal_ = -0.5 * yv.dot(alpha_) - l.diagonal().array().log().sum();
  }

  double log_marginal() const { return log_marginal_; }

  void predict(const Point& q, double& mean, double& sd) const {
    const std::size_t n = x_.size();
    Eigen::VectorXd ks(n);
    for (std::size_t i = 0; i < n; ++i) ks(i) = matern52(q, x_[i], ell_);
    mean = ks.dot(alpha_);
    const Eigen::VectorXd v = chol_.matrixL().solve(ks);
    sd = std::sqrt(std::max(1e-12, 1.0 - v.squaredNorm()));
  }

 private:
  std::vector<Point> x_;
  Point ell_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
  double log_marginal_ = 0.0;
};

double expected_improvement(double mean, double sd, double best) {
  const double z = (best - mean) / sd;
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi);
  return (best - mean) * cdf + sd * pdf;
}

}  // namespace

CalibrationResult bayesian_minimize(const std::function<double(double, double)>& objective,
                                    const CalibrationConfig& cfg) {
  cfg.validate();
  const auto [w0, w1] = cfg.omega_interval;
  const auto [t0, t1] = cfg.Tg_interval;
  auto to_domain = [&](const Point& u) { return Point{w0 + u[0] * (w1 - w0), t0 + u[1] * (t1 - t0)}; };

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Point> xs;
  std::vector<double> ys;  // log of the floored objective
  CalibrationResult result;
  auto evaluate = [&](const Point& u) {
    const Point d = to_domain(u);
    const double v = objective(d[0], d[1]);
    if (!std::isfinite(v)) throw NumericalError("calibration objective returned a non-finite value");
    xs.push_back(u);
    ys.push_back(std::log(std::max(v, cfg.noise_floor)));
    result.evaluated.push_back({d[0], d[1]});
    result.values.push_back(v);
  };

  // Latin hypercube initial design.
  const int n0 = cfg.initial_points;
  std::vector<int> perm(n0);
  for (int i = 0; i < n0; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int i = 0; i < n0; ++i) {
    const double a = (i + unit(rng)) / n0;
    const double b = (perm[i] + unit(rng)) / n0;
    evaluate({a, b});
  }

  static constexpr std::array<double, 6> kScales{0.05, 0.1, 0.2, 0.35, 0.6, 1.0};
  constexpr double kNoise = 1e-6;
  while (static_cast<int>(xs.size()) < cfg.budget) {
    const double mean = [&] { double s = 0; for (double y : ys) s += y; return s / ys.size(); }();
    double var = 0.0;
    for (double y : ys) var += (y - mean) * (y - mean);
    const double sd = std::sqrt(std::max(var / ys.size(), 1e-12));
    std::vector<double> z(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) z[i] = (ys[i] - mean) / sd;

    // Length scales by maximum marginal likelihood over a fixed grid.
    std::optional<GaussianProcess> gp;
    for (double a : kScales)
      for (double b : kScales) {
        GaussianProcess cand(xs, z, {a, b}, kNoise);
        if (!gp || cand.log_marginal() > gp->log_marginal()) gp.emplace(std::move(cand));
      }

    const double best = *std::min_element(z.begin(), z.end());
    auto score = [&](const Point& q) {
      double m, s;
      gp->predict(q, m, s);
      return expected_improvement(m, s, best);
    };

    Point arg{0.5, 0.5};
    double top = -1.0;
    auto consider = [&](const Point& q) {
      const double e = score(q);
      if (e > top) {
        top = e;
        arg = q;
      }
    };
    for (int i = 0; i < 1024; ++i) consider({unit(rng), unit(rng)});
    // Local refinement around the incumbent and the best candidate.
    const std::size_t inc = static_cast<std::size_t>(std::min_element(z.begin(), z.end()) - z.begin());
    for (const Point& centre : {xs[inc], arg}) {
      double radius = 0.05;
      for (int round = 0; round < 4; ++round, radius *= 0.3)
        for (int i = 0; i < 64; ++i)
          consider({std::clamp(centre[0] + radius * (2.0 * unit(rng) - 1.0), 0.0, 1.0),
                    std::clamp(centre[1] + radius * (2.0 * unit(rng) - 1.0), 0.0, 1.0)});
    }
    evaluate(arg);
  }

  const std::size_t b = static_cast<std::size_t>(std::min_element(result.values.begin(), result.values.end()) -
                                                 result.values.begin());
  result.omega = result.evaluated[b].first;
  result.Tg = result.evaluated[b].second;
  result.infidelity = result.values[b];
  return result;
}

CalibrationResult bayesian_calibrate(const CalibrationConfig& cfg, double x0, const Device& device,
                                     const SimParams& p) {
  auto objective = [&](double omega, double Tg) {
    TrajectorySpec s;
    s.x0 = x0;
    s.omega = omega;
    s.phi = 0.0;
    s.Tg = Tg;
    return evaluate_sinusoid(s, device, p).infidelity;
  };
  return bayesian_minimize(objective, cfg);
}

}  // namespace spinbus
