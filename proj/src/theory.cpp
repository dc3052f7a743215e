// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#include "nestla/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace nestla {

namespace {

double sq(double v) { return v * v; }

void require_positive_T(std::int64_t T) {
  if (T < 1) throw std::invalid_argument("T must be positive");
}

// The three terms of the stationary-point bound, without the feasibility check.
double bound_unchecked(const BoundInputs& b, double gamma, double T) {
  const double a1 = b.cfg.alpha1;
  const double a2 = b.cfg.alpha2;
  const double k1 = b.cfg.k1;
  const double k2 = b.cfg.k2;
  const double shrink = a1 * a2;
  const double drift = sq(1.0 - a1) * sq(a2) + 2.0 * sq(1.0 - a2) + (4.0 / 3.0) * sq(a1) * sq(1.0 - a2) * sq(k2);
  return 2.0 * b.gap / (gamma * shrink * T) + gamma * shrink * b.L * b.sigma2 +
         2.0 * sq(gamma) * sq(b.L) * b.sigma2 * k1 * drift;
}

}  // namespace

void BoundInputs::validate() const {
  if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("bound inputs: L must be positive and finite");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2))
    throw std::invalid_argument("bound inputs: sigma^2 must be nonnegative and finite");
  if (!(gap >= 0.0) || !std::isfinite(gap)) throw std::invalid_argument("bound inputs: gap must be nonnegative and finite");
  cfg.validate();
}

BoundInputs BoundInputs::from_problem(const DecomposedProblem& p, const Vec& start, const TwoLayerParams& cfg) {
  BoundInputs b;
  b.L = p.smoothness_constant();
  b.sigma2 = sq(p.noise_sigma());
  b.gap = p.excess_loss(start);
  b.cfg = cfg;
  b.validate();
  return b;
}

double feasibility_linear_coef(const BoundInputs& b) { return b.cfg.alpha1 * b.cfg.alpha2 * b.L; }

double feasibility_quadratic_coef(const BoundInputs& b) {
  const double a1 = b.cfg.alpha1;
  const double a2 = b.cfg.alpha2;
  const double k1 = b.cfg.k1;
  const double k2 = b.cfg.k2;
  return 2.0 * sq(b.L) * sq(k1) *
         (sq(1.0 - a1) * sq(a2) + 2.0 * sq(1.0 - a2) + 2.0 * sq(a1) * sq(1.0 - a2) * sq(k2));
}

double feasibility(const BoundInputs& b, double gamma) {
  return 1.0 - feasibility_linear_coef(b) * gamma - feasibility_quadratic_coef(b) * sq(gamma);
}

double gamma_star(const BoundInputs& b) {
  b.validate();
  const double A = feasibility_linear_coef(b);
  const double B = feasibility_quadratic_coef(b);
  // 2 / (A + sqrt(A^2 + 4B)) is the positive root rewritten without
  // cancellation; it equals 1/A when B = 0.
  return 2.0 / (A + std::sqrt(sq(A) + 4.0 * B));
}

double theorem2_bound(const BoundInputs& b, double gamma, std::int64_t T) {
  b.validate();
  require_positive_T(T);
  if (T % (static_cast<std::int64_t>(b.cfg.k1) * b.cfg.k2) != 0)
    throw std::invalid_argument("theorem2_bound: T=" + std::to_string(T) + " is not a multiple of k1*k2");
  if (!(gamma > 0.0)) throw std::invalid_argument("theorem2_bound: step size must be positive");
  const double gs = gamma_star(b);
  if (gamma > gs * (1.0 + 1e-12))
    throw std::domain_error("theorem2_bound: gamma=" + std::to_string(gamma) + " exceeds gamma*=" + std::to_string(gs));
  return bound_unchecked(b, gamma, static_cast<double>(T));
}

Corollary2Step corollary2_lr(const BoundInputs& b, std::int64_t T) {
  b.validate();
  require_positive_T(T);
  if (!(b.sigma2 > 0.0)) throw std::domain_error("corollary2_lr: requires sigma > 0");
  const double sigma = std::sqrt(b.sigma2);
  const double shrink = b.cfg.alpha1 * b.cfg.alpha2;
  const double gs = gamma_star(b);
  Corollary2Step out;
  out.gamma = std::sqrt(2.0 * b.gap / (static_cast<double>(T) * b.L)) / (shrink * sigma);
  out.threshold = 2.0 * b.gap / (sq(shrink) * b.L * b.sigma2 * sq(gs));
  out.feasible = static_cast<double>(T) >= out.threshold;
  out.leading_term = 2.0 * sigma * std::sqrt(2.0 * b.L * b.gap) / std::sqrt(static_cast<double>(T));
  if (out.feasible && out.gamma > gs * (1.0 + 1e-12))
    throw std::logic_error("corollary2_lr: feasible step exceeds gamma*");
  return out;
}

Claim1Result claim1_grid_check(const BoundInputs& base, std::int64_t T, const Claim1Grid& grid) {
  base.validate();
  require_positive_T(T);
  if (grid.alphas.empty() || grid.points_per_decade < 1 || grid.decades < 1)
    throw std::invalid_argument("claim1_grid_check: empty grid");
  if (T % (static_cast<std::int64_t>(base.cfg.k1) * base.cfg.k2) != 0)
    throw std::invalid_argument("claim1_grid_check: T is not a multiple of k1*k2");
  const double Td = static_cast<double>(T);
  const int n = grid.points_per_decade * grid.decades;

  Claim1Result result;
  result.argmin.best_bound = std::numeric_limits<double>::infinity();
  for (double a1 : grid.alphas) {
    for (double a2 : grid.alphas) {
      BoundInputs b = base;
      b.cfg.alpha1 = a1;
      b.cfg.alpha2 = a2;
      const double gs = gamma_star(b);
      auto at = [&](int j) {
        return j == n ? gs : gs * std::pow(10.0, -static_cast<double>(grid.decades) * (n - j) / n);
      };
      int best = 0;
      double best_val = bound_unchecked(b, at(0), Td);
      for (int j = 1; j <= n; ++j) {
        const double v = bound_unchecked(b, at(j), Td);
        if (v < best_val) {
          best_val = v;
          best = j;
        }
      }
      // The bound is convex in gamma, so the minimum sits in the bracket
      // around the best grid point.
      double lo = at(std::max(best - 1, 0));
      double hi = at(std::min(best + 1, n));
      const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
      double x1 = hi - inv_phi * (hi - lo);
      double x2 = lo + inv_phi * (hi - lo);
      double f1 = bound_unchecked(b, x1, Td);
      double f2 = bound_unchecked(b, x2, Td);
      for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        if (f1 < f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - inv_phi * (hi - lo);
          f1 = bound_unchecked(b, x1, Td);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + inv_phi * (hi - lo);
          f2 = bound_unchecked(b, x2, Td);
        }
      }
      Claim1Cell cell{a1, a2, gs, at(best), best_val};
      for (double g : {x1, x2, lo, hi}) {
        const double v = bound_unchecked(b, g, Td);
        if (v < cell.best_bound) {
          cell.best_bound = v;
          cell.best_gamma = g;
        }
      }
      result.cells.push_back(cell);
      if (cell.best_bound < result.argmin.best_bound) result.argmin = cell;
    }
  }
  return result;
}

std::vector<double> theorem1_weighted_average(std::span<const double> gammas, std::span<const double> grad_norm_sq,
                                              std::int64_t round_length) {
  if (round_length < 1) throw std::invalid_argument("theorem1_weighted_average: round length must be >= 1");
  if (gammas.size() != grad_norm_sq.size())
    throw std::invalid_argument("theorem1_weighted_average: step and gradient sequences differ in length");
  const std::size_t rl = static_cast<std::size_t>(round_length);
  const std::size_t rounds = gammas.size() / rl;
  std::vector<double> out;
  out.reserve(rounds);
  CompensatedSum num;
  CompensatedSum den;
  for (std::size_t r = 0; r < rounds; ++r) {
    const double g = gammas[r * rl];
    CompensatedSum within;
    for (std::size_t i = r * rl; i < (r + 1) * rl; ++i) {
      if (gammas[i] != g)
        throw std::invalid_argument("theorem1_weighted_average: step size changes inside round " + std::to_string(r));
      within.add(grad_norm_sq[i]);
    }
    num.add(g * within.value());
    den.add(g);
    out.push_back(num.value() / (static_cast<double>(round_length) * den.value()));
  }
  return out;
}

std::vector<double> theorem1_weighted_average(const RunReport& report, std::int64_t round_length) {
  std::vector<double> gammas;
  std::vector<double> norms;
  gammas.reserve(report.iterates.size());
  norms.reserve(report.iterates.size());
  for (const auto& rec : report.iterates) {
    gammas.push_back(rec.gamma);
    norms.push_back(rec.grad_norm_sq);
  }
  return theorem1_weighted_average(gammas, norms, round_length);
}

std::int64_t RestartSchedule::total_rounds() const {
  std::int64_t total = 0;
  for (const auto& r : runs) total += r.rounds;
  return total;
}

RestartSchedule restart_schedule(double gamma_star, int M) {
  if (!(gamma_star > 0.0)) throw std::invalid_argument("restart_schedule: gamma* must be positive");
  if (M < 0 || M > 30) throw std::invalid_argument("restart_schedule: M must lie in [0, 30]");
  RestartSchedule s;
  for (int m = 0; m <= M; ++m) s.runs.push_back({std::int64_t{1} << (2 * m), std::ldexp(gamma_star, -m)});
  return s;
}

double linear_rate_constant(double alpha, int k, double c) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("linear_rate_constant: alpha must lie in (0, 1]");
  if (k < 1) throw std::invalid_argument("linear_rate_constant: k must be >= 1");
  if (!(c >= 0.0 && c < 1.0)) throw std::invalid_argument("linear_rate_constant: c must lie in [0, 1)");
  return 1.0 - alpha * (1.0 - std::pow(c, k));
}

double nested_linear_rate_constant(std::span<const double> alphas, std::span<const int> ks, double c) {
  if (alphas.size() != ks.size()) throw std::invalid_argument("nested_linear_rate_constant: size mismatch");
  double rate = c;
  for (std::size_t p = 0; p < alphas.size(); ++p) rate = linear_rate_constant(alphas[p], ks[p], rate);
  return rate;
}

double gd_contraction(double gamma, double mu, double L) {
  return std::max(std::abs(1.0 - gamma * mu), std::abs(1.0 - gamma * L));
}

ContractionReport measure_contraction(const DecomposedProblem& p, const LayerStack& cfg, const Vec& x0, int rounds) {
  cfg.validate();
  if (p.noise_sigma() != 0.0) throw std::invalid_argument("measure_contraction: requires a noiseless problem");
  if (!p.strongly_convex()) throw std::invalid_argument("measure_contraction: problem is not strongly convex");
  if (!cfg.lr.is_constant()) throw std::invalid_argument("measure_contraction: requires a constant step size");
  if (rounds < 1) throw std::invalid_argument("measure_contraction: rounds must be >= 1");
  if (x0.size() != p.dim()) throw std::invalid_argument("measure_contraction: dimension mismatch");
  const double gamma = cfg.lr(0);
  ContractionReport rep;
  rep.inner_contraction = gd_contraction(gamma, p.strong_convexity(), p.smoothness_constant());
  if (!(rep.inner_contraction < 1.0))
    throw std::invalid_argument("measure_contraction: step size does not make the inner iteration contract");
  rep.predicted_distance = nested_linear_rate_constant(cfg.alphas, cfg.ks, rep.inner_contraction);
  rep.predicted_value = nested_linear_rate_constant(cfg.alphas, cfg.ks, sq(rep.inner_contraction));

  const Vec& xs = p.minimizer();
  const double floor = 1e-5 * (1.0 + xs.norm());
  MultilayerState state = MultilayerState::start(x0, cfg.layers());
  const std::int64_t len = cfg.round_length();
  double dist = (state.outer() - xs).norm();
  double value = p.excess_loss(state.outer());
  double log_dist = 0.0;
  double log_value = 0.0;
  for (int r = 0; r < rounds && dist > floor; ++r) {
    for (std::int64_t i = 0; i < len; ++i) mla_step(state, cfg, p.full_grad(state.inner()));
    const double next_dist = (state.outer() - xs).norm();
    const double next_value = p.excess_loss(state.outer());
    const double dr = next_dist / dist;
    const double vr = value > 0.0 ? next_value / value : 0.0;
    rep.max_distance_ratio = std::max(rep.max_distance_ratio, dr);
    rep.max_value_ratio = std::max(rep.max_value_ratio, vr);
    log_dist += std::log(dr);
    log_value += std::log(vr);
    ++rep.rounds_measured;
    dist = next_dist;
    value = next_value;
  }
  if (rep.rounds_measured > 0) {
    rep.distance_factor = std::exp(log_dist / rep.rounds_measured);
    rep.value_factor = std::exp(log_value / rep.rounds_measured);
  }
  return rep;
}

}  // namespace nestla
