// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#include "nestla/optimizers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "nestla/rng.hpp"

namespace nestla {

LrSchedule LrSchedule::constant(double gamma) {
  return LrSchedule([gamma](std::int64_t) { return gamma; }, 0, true);
}

LrSchedule LrSchedule::per_round(std::int64_t round_length, Fn fn_of_round) {
  if (round_length < 1) throw std::invalid_argument("LrSchedule::per_round: round length must be >= 1");
  return LrSchedule([round_length, f = std::move(fn_of_round)](std::int64_t t) { return f(t / round_length); },
                    round_length, false);
}

LrSchedule LrSchedule::per_iteration(Fn fn_of_t) { return LrSchedule(std::move(fn_of_t), 0, false); }

double LrSchedule::operator()(std::int64_t t) const {
  const double g = fn_(t);
  if (!(g > 0.0) || !std::isfinite(g))
    throw std::domain_error("learning rate at t=" + std::to_string(t) + " is not a positive finite number");
  return g;
}

std::int64_t LayerStack::period(int p) const {
  std::int64_t prod = 1;
  for (int q = 0; q < p; ++q) prod *= ks[static_cast<std::size_t>(q)];
  return prod;
}

double LayerStack::shrink_factor() const {
  double b = 1.0;
  for (double a : alphas) b *= a;
  return b;
}

void LayerStack::validate() const {
  if (alphas.size() != ks.size()) throw std::invalid_argument("LayerStack: alphas and ks differ in length");
  for (std::size_t p = 0; p < alphas.size(); ++p) {
    if (!(alphas[p] > 0.0 && alphas[p] <= 1.0))
      throw std::invalid_argument("LayerStack: alpha_" + std::to_string(p + 1) + " must lie in (0, 1]");
    if (ks[p] < 1) throw std::invalid_argument("LayerStack: k_" + std::to_string(p + 1) + " must be >= 1");
  }
  if (lr.round_length() != 0 && lr.round_length() % round_length() != 0)
    throw std::invalid_argument("LayerStack: per-round schedule is not aligned with k_1...k_n");
}

MultilayerState MultilayerState::start(const Vec& x0, int layers) {
  if (layers < 0) throw std::invalid_argument("MultilayerState: negative layer count");
  MultilayerState s;
  s.weights.assign(static_cast<std::size_t>(layers) + 1, x0);
  return s;
}

Vec sgd_step(const Vec& x, const Vec& g, double gamma) {
  if (x.size() != g.size()) throw std::invalid_argument("sgd_step: dimension mismatch");
  if (!(gamma > 0.0)) throw std::invalid_argument("sgd_step: step size must be positive");
  return x - gamma * g;
}

int mla_step(MultilayerState& state, const LayerStack& cfg, const Vec& g) {
  const int n = cfg.layers();
  if (static_cast<int>(state.weights.size()) != n + 1)
    throw std::invalid_argument("mla_step: state has " + std::to_string(state.weights.size()) +
                                " levels, configuration needs " + std::to_string(n + 1));
  Vec& inner = state.weights.front();
  if (inner.size() != g.size()) throw std::invalid_argument("mla_step: dimension mismatch");
  const double gamma = cfg.lr(state.t);
  inner -= gamma * g;
  ++state.t;

  int depth = 0;
  std::int64_t period = 1;
  for (int p = 1; p <= n; ++p) {
    period *= cfg.ks[static_cast<std::size_t>(p - 1)];
    if (state.t % period != 0) break;
    const double a = cfg.alphas[static_cast<std::size_t>(p - 1)];
    Vec& slow = state.weights[static_cast<std::size_t>(p)];
    slow = (1.0 - a) * slow + a * state.weights[static_cast<std::size_t>(p - 1)];
    for (int q = 0; q < p; ++q) state.weights[static_cast<std::size_t>(q)] = slow;
    depth = p;
  }
  return depth;
}

Vec aggregation_weights(const LayerStack& cfg) {
  const int n = cfg.layers();
  Vec a(n + 1);
  double outer = 1.0;  // alpha_{p+1} ... alpha_n
  for (int p = n; p >= 1; --p) {
    const double alpha = cfg.alphas[static_cast<std::size_t>(p - 1)];
    a[p] = (1.0 - alpha) * outer;
    outer *= alpha;
  }
  a[0] = outer;
  return a;
}

Vec aggregate(const MultilayerState& state, const Vec& weights) {
  if (static_cast<Eigen::Index>(state.weights.size()) != weights.size())
    throw std::invalid_argument("aggregate: weight count mismatch");
  Vec theta = weights[0] * state.weights[0];
  for (std::size_t p = 1; p < state.weights.size(); ++p) theta += weights[static_cast<Eigen::Index>(p)] * state.weights[p];
  return theta;
}

RunReport run(const DecomposedProblem& p, const LayerStack& cfg, const Vec& x0, std::int64_t T, std::uint64_t seed,
              const RunOptions& options) {
  cfg.validate();
  if (T < 1) throw std::invalid_argument("run: T must be >= 1");
  if (x0.size() != p.dim()) throw std::invalid_argument("run: start point dimension mismatch");

  const GradientNoise noise(seed, p.dim(), p.noise_sigma());
  const Vec agg = aggregation_weights(cfg);

  RunReport report;
  report.layers = cfg.layers();
  report.dim = p.dim();
  report.seed = seed;
  report.final_state = MultilayerState::start(x0, cfg.layers());
  if (options.keep_records) report.iterates.reserve(static_cast<std::size_t>(T));

  MultilayerState& state = report.final_state;
  IterationRecord rec;
  for (std::int64_t t = 0; t < T; ++t) {
    const Vec theta = aggregate(state, agg);
    const Vec g = noisy_grad(p, state.inner(), noise, t);

    rec.t = t;
    rec.gamma = cfg.lr(t);
    rec.loss = options.record_loss ? p.loss(theta) : std::numeric_limits<double>::quiet_NaN();
    rec.grad_norm_sq = p.full_grad(theta).squaredNorm();
    if (options.record_theta) rec.theta = theta;
    if (options.record_gradients) rec.gradient = g;

    rec.sync_depth = mla_step(state, cfg, g);
    if (rec.sync_depth > 0) ++report.sync_events;

    if (options.observer) options.observer(rec);
    if (options.keep_records) report.iterates.push_back(rec);
  }
  return report;
}

CsvWriter run_report_csv(const RunReport& report) {
  std::vector<std::string> header{"t", "gamma", "loss", "grad_norm_sq", "sync_depth"};
  const bool with_theta = !report.iterates.empty() && report.iterates.front().theta.size() > 0;
  if (with_theta)
    for (int j = 0; j < report.dim; ++j) header.push_back("theta_" + std::to_string(j));
  CsvWriter csv(std::move(header));
  csv.comment("rng=" + std::string(kRngAlgorithm));
  csv.comment("seed=" + std::to_string(report.seed));
  csv.comment("layers=" + std::to_string(report.layers));
  for (const auto& r : report.iterates) {
    std::vector<std::string> row{std::to_string(r.t), format_double(r.gamma), format_double(r.loss),
                                 format_double(r.grad_norm_sq), std::to_string(r.sync_depth)};
    if (with_theta)
      for (Eigen::Index j = 0; j < r.theta.size(); ++j) row.push_back(format_double(r.theta[j]));
    csv.row(std::move(row));
  }
  return csv;
}

}  // namespace nestla
