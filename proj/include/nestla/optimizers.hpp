// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nestla/csv.hpp"
#include "nestla/numerics.hpp"
#include "nestla/problems.hpp"

namespace nestla {

/// Step size as a function of the iteration counter t.
class LrSchedule {
 public:
  using Fn = std::function<double(std::int64_t)>;

  static LrSchedule constant(double gamma);
  /// gamma_t = fn(t / round_length): constant within each round.
  static LrSchedule per_round(std::int64_t round_length, Fn fn_of_round);
  /// Arbitrary per-iteration schedule (e.g. diminishing in t).
  static LrSchedule per_iteration(Fn fn_of_t);

  /// Throws std::domain_error if the value is not finite and positive.
  double operator()(std::int64_t t) const;

  /// Round length the schedule is quantized by; 0 when it is not per-round.
  std::int64_t round_length() const { return round_length_; }
  bool is_constant() const { return constant_; }

 private:
  LrSchedule(Fn fn, std::int64_t round_length, bool constant)
      : fn_(std::move(fn)), round_length_(round_length), constant_(constant) {}

  Fn fn_;
  std::int64_t round_length_ = 0;
  bool constant_ = false;
};

/// Configuration of an n-layer Multilayer Lookahead over SGD. Index 0 of
/// `alphas`/`ks` is the innermost layer. n = 0 is plain SGD.
struct LayerStack {
  std::vector<double> alphas;
  std::vector<int> ks;
  LrSchedule lr = LrSchedule::constant(0.1);

  int layers() const { return static_cast<int>(alphas.size()); }
  /// k_1 * ... * k_p; period(0) == 1.
  std::int64_t period(int p) const;
  /// Inner iterations per round, k_1 * ... * k_n.
  std::int64_t round_length() const { return period(layers()); }
  /// Product of all alphas (1 for SGD).
  double shrink_factor() const;

  /// Throws std::invalid_argument on alpha outside (0, 1], k < 1 or size mismatch.
  void validate() const;
};

/// n + 1 weight vectors: level 0 holds the fast weights, level p >= 1 the
/// slow weights of layer p. `t` counts completed inner iterations.
struct MultilayerState {
  std::vector<Vec> weights;
  std::int64_t t = 0;

  static MultilayerState start(const Vec& x0, int layers);
  const Vec& inner() const { return weights.front(); }
  const Vec& outer() const { return weights.back(); }
};

/// x - gamma * g.
Vec sgd_step(const Vec& x, const Vec& g, double gamma);

/// One inner SGD step on weights[0] followed by the synchronization cascade:
/// for p = 1..n while t is divisible by k_1...k_p, weights[p] moves to
/// (1 - alpha_p) weights[p] + alpha_p weights[p-1] and every lower level is
/// reset to it. Returns the deepest synchronized layer (0 if none).
int mla_step(MultilayerState& state, const LayerStack& cfg, const Vec& g);

/// Convex weights a with theta = sum_p a_p weights[p]:
/// a_0 = alpha_1...alpha_n, a_p = (1 - alpha_p) alpha_{p+1}...alpha_n.
/// For two layers this is (a1 a2, (1 - a1) a2, 1 - a2).
Vec aggregation_weights(const LayerStack& cfg);
Vec aggregate(const MultilayerState& state, const Vec& weights);

struct IterationRecord {
  std::int64_t t = 0;
  double gamma = 0.0;
  double loss = 0.0;          // f(theta_t), NaN when not recorded
  double grad_norm_sq = 0.0;  // |grad f(theta_t)|^2
  int sync_depth = 0;         // deepest layer synchronized by the step taken at t
  Vec theta;                  // theta_t, empty unless requested
  Vec gradient;               // g(x_t, xi_t), empty unless requested
};

struct RunOptions {
  bool record_theta = false;
  bool record_gradients = false;
  bool record_loss = true;
  bool keep_records = true;
  /// Called for each record in order, whether or not it is kept.
  std::function<void(const IterationRecord&)> observer;
};

struct RunReport {
  std::vector<IterationRecord> iterates;
  MultilayerState final_state;
  int layers = 0;
  int dim = 0;
  std::uint64_t seed = 0;
  std::int64_t sync_events = 0;
};

/// T iterations fed by noisy_grad at weights[0] with noise stream `seed`.
/// Record t describes theta_t (before the step) and the step taken at t.
RunReport run(const DecomposedProblem& p, const LayerStack& cfg, const Vec& x0, std::int64_t T, std::uint64_t seed,
              const RunOptions& options = {});

/// CSV with header t,gamma,loss,grad_norm_sq,sync_depth[,theta_0..theta_{d-1}].
CsvWriter run_report_csv(const RunReport& report);

}  // namespace nestla
