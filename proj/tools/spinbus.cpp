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

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spinbus/errors.hpp"
#include "spinbus/experiments.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

const char* const kSubcommands[] = {"dephasing-study", "freq-sweep",   "grid-sweep",   "magnet-scan",
                                    "ensemble",        "optimize-one", "calibrate-one"};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
  bool full_scale = false;
  bool quiet = false;
};

std::optional<unsigned> workers_from_env() {
  const char* env = std::getenv("SPINBUS_WORKERS");
  if (!env || !*env) return std::nullopt;
  try {
    std::size_t used = 0;
    const long v = std::stol(env, &used);
    if (used != std::string(env).size() || v < 1) throw std::invalid_argument("range");
    return static_cast<unsigned>(v);
  } catch (const std::exception&) {
    throw spinbus::ConfigError(std::string("SPINBUS_WORKERS must be a positive integer, got '") + env + "'");
  }
}

int run(const std::string& name, const Options& opt) {
  nlohmann::json overrides = nlohmann::json::object();
  if (opt.seed) overrides["seed"] = *opt.seed;
  if (opt.full_scale) overrides["full_scale"] = true;
  spinbus::ExperimentConfig cfg = spinbus::load_config(opt.config, overrides);
  if (spinbus::to_string(cfg.kind) != name)
    throw spinbus::ConfigError("config describes '" + std::string(spinbus::to_string(cfg.kind)) +
                               "' but subcommand is '" + name + "'");
  if (opt.workers) cfg.workers = *opt.workers;
  else if (auto env = workers_from_env()) cfg.workers = *env;
  if (opt.out) cfg.output_dir = *opt.out;

  auto progress = [&](std::size_t done, std::size_t total) {
    if (!opt.quiet) std::cerr << "\r[" << done << "/" << total << "]" << (done == total ? "\n" : "") << std::flush;
  };
  const spinbus::ExperimentOutput out = spinbus::run_experiment(cfg, progress);
  spinbus::write_output(out, cfg);
  nlohmann::json brief = out.summary;
  brief.erase("config");
  std::cout << brief.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spinbus: spin shuttling gate experiments"};
  app.require_subcommand(1);
  Options opt;
  std::string chosen;
  for (const char* name : kSubcommands) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", opt.config, "experiment configuration (JSON)")->required();
    sub->add_option("--seed", opt.seed, "override the base seed");
    sub->add_option("--workers", opt.workers, "worker threads (default: SPINBUS_WORKERS or config)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", opt.out, "output directory");
    sub->add_flag("--full-scale", opt.full_scale, "use the full-resolution sweep defaults");
    sub->add_flag("-q,--quiet", opt.quiet, "no progress output");
    sub->callback([&chosen, name] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  try {
    return run(chosen, opt);
  } catch (const spinbus::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const spinbus::Error& e) {
    // Config, range, format and I/O problems all trace back to the inputs.
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
