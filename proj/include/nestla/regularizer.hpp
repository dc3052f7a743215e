// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nestla/csv.hpp"
#include "nestla/numerics.hpp"
#include "nestla/optimizers.hpp"
#include "nestla/problems.hpp"

namespace nestla {

enum class ExpectationMode { exact, mc };

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;  // 0 in exact mode
};

/// AN(y) = (1/m) sum_i |grad f_i(y)|^2. In mc mode, `samples` uniformly drawn
/// components (seeded) are averaged instead.
Estimate an(const DecomposedProblem& p, const Vec& y, ExpectationMode mode, int samples = 0,
            std::uint64_t seed = 0);
double an(const DecomposedProblem& p, const Vec& y);

/// AI(y) = 1/(m(m-1)) sum_{i != j} <grad f_i(y), grad f_j(y)>. Requires m >= 2.
double ai(const DecomposedProblem& p, const Vec& y);

/// Gradients of AN and AI: (1/m) sum_i 2 A_i grad f_i and
/// 1/(m(m-1)) sum_{i != j} (A_i grad f_j + A_j grad f_i).
Vec ang(const DecomposedProblem& p, const Vec& y);
Vec aig(const DecomposedProblem& p, const Vec& y);

/// Gradient field of the modified objective f + an_coef AN + ai_coef AI.
struct FlowCoefficients {
  double an_coef = 0.0;
  double ai_coef = 0.0;
  double base_step = 0.0;  // gamma
  double shrink = 1.0;     // beta = alpha_n ... alpha_1
};

/// gamma beta / 4 and -(gamma/4) sum_p (1 - alpha_p) alpha_{p-1}...alpha_1 (k_p...k_1 - 1).
/// Requires m to be a multiple of k_1...k_n. No layers gives the SGD flow.
FlowCoefficients flow_coefficients(std::span<const double> alphas, std::span<const int> ks, double gamma, int m);
FlowCoefficients flow_coefficients(const LayerStack& cfg, double gamma, int m);
/// Full-batch gradient descent: gamma/(4m) and gamma (m-1)/(4m).
FlowCoefficients gd_flow_coefficients(double gamma, int m);

Vec modified_flow_grad(const DecomposedProblem& p, const Vec& y, const FlowCoefficients& coefs);

struct EpochAverage {
  Vec mean;
  Vec std_error;  // zero in exact mode
  std::int64_t count = 0;
};

/// Average over component orders of the outer weights after one epoch
/// (m inner steps on f_{perm[0]}, ..., f_{perm[m-1]}) of the layered optimizer
/// with constant step gamma. Exact mode enumerates all m! orders (m <= 8);
/// mc mode draws `samples` uniform permutations from `seed`.
EpochAverage expected_epoch_iterate(const DecomposedProblem& p, const Vec& y0, double gamma,
                                    std::span<const double> alphas, std::span<const int> ks,
                                    ExpectationMode mode = ExpectationMode::exact, std::int64_t samples = 0,
                                    std::uint64_t seed = 0);

using VectorField = std::function<Vec(const Vec&)>;

/// Classical RK4 for y' = field(y) with `steps` equal steps.
Vec rk4_integrate(const VectorField& field, const Vec& y0, double horizon, std::int64_t steps);

struct FlowIntegration {
  Vec y;
  std::int64_t steps = 0;
  double error_estimate = 0.0;
};

/// Error target used by integrate_modified_flow:
/// max(1e-3 gamma^3 |grad f(y0)|, 64 eps (1 + |y0|)).
double flow_tolerance(const DecomposedProblem& p, const Vec& y0, double gamma);

/// Integrates y' = -modified_flow_grad(y) up to `horizon` with RK4, doubling
/// the step count until the Richardson error estimate |y_N - y_2N| / 15 meets
/// `tolerance` (flow_tolerance() when <= 0). Throws std::runtime_error if no
/// step count up to 2^22 does.
FlowIntegration integrate_modified_flow(const DecomposedProblem& p, const Vec& y0, const FlowCoefficients& coefs,
                                        double horizon, double tolerance = 0.0);

struct OrderSample {
  double gamma = 0.0;
  double residual = 0.0;
};

struct OrderCheckResult {
  int order = 1;
  std::vector<OrderSample> samples;
  double slope = 0.0;
  double slope_lo = 0.0;
  double slope_hi = 0.0;
  bool monotone = true;  // residuals decrease with gamma
  bool pass = false;

  /// gamma,residual_norm,prediction_kind
  CsvWriter csv() const;
  /// "order=<k> slope=<s> bracket=[lo,hi] pass=<0|1>" plus a regime note on failure.
  std::string summary() const;
};

/// Residual |E[y_epoch] - prediction| over decreasing step sizes, where the
/// prediction is y0 - gamma beta m grad f(y0) (order 1) or the modified flow
/// at time beta gamma m (order 2). The slope of log residual against log gamma
/// should be order + 1; the pass bracket is [1.8, 2.2] for order 1 and
/// [2.7, 3.3] for order 2.
OrderCheckResult order_check(const DecomposedProblem& p, const Vec& y0, std::span<const double> alphas,
                             std::span<const int> ks, std::span<const double> gammas, int order);

}  // namespace nestla
