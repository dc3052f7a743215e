// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "nestla/config.hpp"
#include "nestla/csv.hpp"
#include "nestla/optimizers.hpp"
#include "nestla/problems.hpp"

namespace nestla {

struct CommandResult {
  std::string name;
  CsvWriter csv{{}};
  std::vector<std::string> summary;  // human-readable lines
  bool pass = true;
  std::string first_failure;  // name of the first failing check

  void check(bool ok, const std::string& what);
};

/// run, equiv, bound, restart, linrate, regflow, claim1 (without `all`).
const std::vector<std::string>& command_names();

/// Executes one verification suite. Throws ConfigError for unknown commands
/// or configurations the command cannot use.
CommandResult run_command(const std::string& name, const ExperimentConfig& cfg);

/// Problem described by the configuration (loaded or generated).
DecomposedProblem make_problem(const ExperimentConfig& cfg);
/// x* + start_offset * (1, ..., 1).
Vec start_point(const DecomposedProblem& p, const ExperimentConfig& cfg);

}  // namespace nestla
