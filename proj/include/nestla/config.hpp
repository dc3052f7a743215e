// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace nestla {

/// Invalid or unknown configuration; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key = value experiment configuration. Lists are comma separated,
/// '#' starts a comment. Every key has a default; see README for the schema.
struct ExperimentConfig {
  // problem
  std::string problem_path;  // serialized problem; overrides the generator keys
  int dim = 8;
  int m = 4;
  double sigma = 1.0;
  double conditioning = 10.0;
  std::uint64_t problem_seed = 1;
  double start_offset = 2.0;  // x0 = x* + start_offset * (1, ..., 1)

  // optimizer
  std::vector<double> alphas{0.6, 0.8};
  std::vector<int> ks{2, 5};
  double gamma = 0.0;  // 0: half of gamma*
  std::int64_t T = 10000;

  // seeds: explicit list, or 1..seed_count when the list is empty
  std::vector<std::uint64_t> seeds;
  int seed_count = 0;  // 0: command default

  // equiv
  int equiv_configs = 20;
  std::int64_t equiv_T = 10000;

  // bound
  std::vector<std::int64_t> bound_Ts{10000, 100000};
  std::vector<double> bound_fractions{0.25, 0.5, 1.0};

  // restart and decaying schedule
  int restart_M = 6;
  int restart_fit_from = 0;
  double restart_slope_max = -0.4;
  double schedule_gamma0 = 0.5;
  int schedule_rounds = 400;
  int schedule_check_round = 20;
  double schedule_ratio_max = 0.25;

  // linrate
  int linrate_configs = 100;
  int linrate_rounds = 40;
  std::uint64_t sweep_seed = 7;

  // regflow
  int regflow_dim = 4;
  std::uint64_t regflow_seed = 11;
  std::vector<double> regflow_gammas{3e-2, 1.5e-2, 7.5e-3, 4e-3, 2e-3, 1e-3};

  // claim1
  double claim1_T = 1e10;
  std::vector<double> claim1_alphas{0.25, 0.5, 0.75, 1.0};
  int claim1_points_per_decade = 200;
  int claim1_decades = 14;

  /// Sets one key from its textual value; throws ConfigError on unknown keys
  /// or malformed values.
  void set(const std::string& key, const std::string& value);
  /// Cross-field checks; throws ConfigError.
  void validate() const;

  /// Seeds in ascending order: the explicit list, else 1..count with count
  /// from seed_count or `default_count`.
  std::vector<std::uint64_t> seed_list(int default_count) const;

  /// Parses key = value lines; duplicate keys are rejected.
  static ExperimentConfig parse(std::istream& in);
  static ExperimentConfig load(const std::string& path);

  /// Serialization accepted by parse(); used in CSV headers.
  std::vector<std::string> dump() const;
};

}  // namespace nestla
