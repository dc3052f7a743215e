// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nestla/localsgd.hpp"
#include "nestla/optimizers.hpp"
#include "nestla/problems.hpp"

namespace nestla {

/// Inputs of the two-layer stationary-point bounds.
struct BoundInputs {
  double L = 1.0;       // smoothness constant
  double sigma2 = 0.0;  // gradient noise variance
  double gap = 0.0;     // f(theta_0) - f_inf
  TwoLayerParams cfg;

  void validate() const;
  /// L, sigma^2 and f(start) - f(x*) read off a strongly convex problem.
  static BoundInputs from_problem(const DecomposedProblem& p, const Vec& start, const TwoLayerParams& cfg);
};

/// Step-size feasibility g(gamma) = 1 - A gamma - B gamma^2 with
/// A = a1 a2 L and B = 2 L^2 k1^2 ((1-a1)^2 a2^2 + 2 (1-a2)^2 + 2 a1^2 (1-a2)^2 k2^2).
double feasibility(const BoundInputs& b, double gamma);
double feasibility_linear_coef(const BoundInputs& b);
double feasibility_quadratic_coef(const BoundInputs& b);

/// Unique positive root of feasibility(); 1/A when B = 0.
double gamma_star(const BoundInputs& b);

/// Average squared gradient-norm bound for constant step gamma over T
/// iterations:
///   2 gap / (gamma a1 a2 T) + gamma a1 a2 L sigma^2
///   + 2 gamma^2 L^2 sigma^2 k1 ((1-a1)^2 a2^2 + 2 (1-a2)^2 + 4/3 a1^2 (1-a2)^2 k2^2).
/// Throws std::domain_error when gamma exceeds gamma_star (the bound does not
/// apply there) and std::invalid_argument when k1 k2 does not divide T.
double theorem2_bound(const BoundInputs& b, double gamma, std::int64_t T);

struct Corollary2Step {
  double gamma = 0.0;
  bool feasible = false;
  double threshold = 0.0;     // smallest T for which gamma <= gamma_star
  double leading_term = 0.0;  // 2 sigma sqrt(2 L gap) / sqrt(T)
};

/// gamma = sqrt(2 gap / (T L)) / (a1 a2 sigma). Throws when sigma = 0.
Corollary2Step corollary2_lr(const BoundInputs& b, std::int64_t T);

struct Claim1Cell {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double gamma_star = 0.0;
  double best_gamma = 0.0;
  double best_bound = 0.0;
};

struct Claim1Result {
  std::vector<Claim1Cell> cells;
  Claim1Cell argmin;
};

struct Claim1Grid {
  std::vector<double> alphas{0.25, 0.5, 0.75, 1.0};
  int points_per_decade = 200;  // log-spaced gamma grid below gamma_star
  int decades = 14;
};

/// For every (alpha1, alpha2) on the grid, minimizes theorem2_bound over
/// gamma in (0, gamma_star] (log grid followed by golden-section refinement
/// inside the best bracket) and returns the pair with the smallest minimum.
/// k1, k2, L, sigma2 and gap are taken from `base`.
Claim1Result claim1_grid_check(const BoundInputs& base, std::int64_t T, const Claim1Grid& grid = {});

/// Weighted averages
///   W_R = sum_{r<R} gamma_r sum_{t in round r} |grad f(theta_t)|^2 / (k1 k2 sum_{r<R} gamma_r)
/// for R = 1..(complete rounds). Throws if the step size changes inside a round.
std::vector<double> theorem1_weighted_average(std::span<const double> gammas, std::span<const double> grad_norm_sq,
                                              std::int64_t round_length);
std::vector<double> theorem1_weighted_average(const RunReport& report, std::int64_t round_length);

struct RestartRun {
  std::int64_t rounds = 0;
  double gamma = 0.0;
};

struct RestartSchedule {
  std::vector<RestartRun> runs;  // run m: 4^m rounds at gamma_star / 2^m
  std::int64_t total_rounds() const;
};

RestartSchedule restart_schedule(double gamma_star, int M);

/// 1 - alpha (1 - c^k): per-round contraction of Lookahead around an inner
/// optimizer contracting by c per step.
double linear_rate_constant(double alpha, int k, double c);
/// The same constant applied layer by layer, innermost first.
double nested_linear_rate_constant(std::span<const double> alphas, std::span<const int> ks, double c);

/// Worst-case per-step distance contraction of gradient descent with step
/// gamma on a quadratic with spectrum in [mu, L]: max(|1 - gamma mu|, |1 - gamma L|).
double gd_contraction(double gamma, double mu, double L);

struct ContractionReport {
  double inner_contraction = 0.0;   // c for distances
  double predicted_distance = 0.0;  // nested constant built from c
  double predicted_value = 0.0;     // nested constant built from c^2
  double distance_factor = 0.0;     // geometric mean per-round ratio
  double value_factor = 0.0;
  double max_distance_ratio = 0.0;  // worst single round
  double max_value_ratio = 0.0;
  int rounds_measured = 0;

  bool within(double slack) const {
    return max_distance_ratio <= predicted_distance + slack && max_value_ratio <= predicted_value + slack;
  }
};

/// Runs `rounds` rounds of the (deterministic) optimizer from x0 and measures
/// per-round contraction of the outer weights toward x* in distance and in
/// f - f*. Rounds are measured until the distance falls below
/// 1e-5 (1 + |x*|), where round-off would dominate the ratios.
/// Requires sigma = 0, a strongly convex problem and a constant step < 2/L.
ContractionReport measure_contraction(const DecomposedProblem& p, const LayerStack& cfg, const Vec& x0, int rounds);

}  // namespace nestla
