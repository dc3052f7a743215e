// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nestla/optimizers.hpp"
#include "nestla/problems.hpp"

namespace nestla {

/// Worker count for seed fan-out: NESTED_LA_THREADS if set to a positive
/// integer, else the hardware concurrency (at least 1).
int worker_threads();

/// Evaluates fn(seed) for every seed, possibly concurrently, and returns the
/// results in input order.
std::vector<std::vector<double>> map_seeds(std::span<const std::uint64_t> seeds,
                                           const std::function<std::vector<double>(std::uint64_t)>& fn);

struct MeanWithError {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Compensated mean and standard error of the mean (sample std / sqrt(n)).
/// A single value has standard error 0.
MeanWithError mean_and_error(std::span<const double> values);

struct MonteCarloTrajectory {
  std::vector<std::uint64_t> seeds;  // sorted
  std::vector<double> mean;          // E |grad f(theta_t)|^2 per t
  std::vector<double> std_error;
  std::vector<double> time_average;  // (1/T) sum_t |grad f(theta_t)|^2, per seed
};

/// Runs the optimizer once per seed and reduces |grad f(theta_t)|^2 across
/// seeds in ascending seed order, so the result does not depend on the order
/// of `seeds` or on thread scheduling. Requires at least 2 seeds.
MonteCarloTrajectory monte_carlo(const DecomposedProblem& p, const LayerStack& cfg, const Vec& x0, std::int64_t T,
                                 std::span<const std::uint64_t> seeds);

/// |grad f(theta_t)|^2 for t < T of a single run.
std::vector<double> grad_norm_trajectory(const DecomposedProblem& p, const LayerStack& cfg, const Vec& x0,
                                         std::int64_t T, std::uint64_t seed);

}  // namespace nestla
