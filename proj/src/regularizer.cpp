// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#include "nestla/regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "nestla/rng.hpp"

namespace nestla {

namespace {

std::vector<Vec> component_grads(const DecomposedProblem& p, const Vec& y) {
  std::vector<Vec> g;
  g.reserve(static_cast<std::size_t>(p.num_components()));
  for (int i = 0; i < p.num_components(); ++i) g.push_back(p.component_grad(i, y));
  return g;
}

}  // namespace

double an(const DecomposedProblem& p, const Vec& y) {
  CompensatedSum s;
  for (const Vec& g : component_grads(p, y)) s.add(g.squaredNorm());
  return s.value() / p.num_components();
}

Estimate an(const DecomposedProblem& p, const Vec& y, ExpectationMode mode, int samples, std::uint64_t seed) {
  if (mode == ExpectationMode::exact) return {an(p, y), 0.0};
  if (samples < 2) throw std::invalid_argument("an: Monte Carlo mode needs at least 2 samples");
  RandomStream rng(seed, streams::kPermutation);
  const auto m = static_cast<std::uint64_t>(p.num_components());
  double mean = 0.0;
  double m2 = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double v = p.component_grad(static_cast<int>(rng.below(m)), y).squaredNorm();
    const double delta = v - mean;
    mean += delta / (s + 1);
    m2 += delta * (v - mean);
  }
  return {mean, std::sqrt(m2 / (samples - 1) / samples)};
}

double ai(const DecomposedProblem& p, const Vec& y) {
  const int m = p.num_components();
  if (m < 2) throw std::domain_error("ai: undefined for a single component");
  const auto g = component_grads(p, y);
  CompensatedSum s;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i != j) s.add(g[static_cast<std::size_t>(i)].dot(g[static_cast<std::size_t>(j)]));
  return s.value() / (static_cast<double>(m) * (m - 1));
}

Vec ang(const DecomposedProblem& p, const Vec& y) {
  CompensatedVectorSum s(p.dim());
  for (int i = 0; i < p.num_components(); ++i) {
    const auto& c = p.components()[static_cast<std::size_t>(i)];
    s.add(2.0 * (c.hessian * p.component_grad(i, y)));
  }
  return s.value() / p.num_components();
}

Vec aig(const DecomposedProblem& p, const Vec& y) {
  const int m = p.num_components();
  if (m < 2) throw std::domain_error("aig: undefined for a single component");
  const auto g = component_grads(p, y);
  CompensatedVectorSum s(p.dim());
  for (int i = 0; i < m; ++i) {
    const Mat& Ai = p.components()[static_cast<std::size_t>(i)].hessian;
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      const Mat& Aj = p.components()[static_cast<std::size_t>(j)].hessian;
      s.add(Ai * g[static_cast<std::size_t>(j)] + Aj * g[static_cast<std::size_t>(i)]);
    }
  }
  return s.value() / (static_cast<double>(m) * (m - 1));
}

FlowCoefficients flow_coefficients(std::span<const double> alphas, std::span<const int> ks, double gamma, int m) {
  if (alphas.size() != ks.size()) throw std::invalid_argument("flow_coefficients: alphas and ks differ in length");
  if (m < 1) throw std::invalid_argument("flow_coefficients: m must be >= 1");
  if (!(gamma >= 0.0)) throw std::invalid_argument("flow_coefficients: gamma must be nonnegative");
  double shrink = 1.0;      // alpha_{p-1} ... alpha_1
  std::int64_t period = 1;  // k_p ... k_1
  double ai_sum = 0.0;
  for (std::size_t p = 0; p < alphas.size(); ++p) {
    if (!(alphas[p] > 0.0 && alphas[p] <= 1.0)) throw std::invalid_argument("flow_coefficients: alpha outside (0, 1]");
    if (ks[p] < 1) throw std::invalid_argument("flow_coefficients: k must be >= 1");
    period *= ks[p];
    ai_sum += (1.0 - alphas[p]) * shrink * static_cast<double>(period - 1);
    shrink *= alphas[p];
  }
  if (m % period != 0)
    throw std::invalid_argument("flow_coefficients: m=" + std::to_string(m) + " is not a multiple of k_1...k_n=" +
                                std::to_string(period));
  return {gamma * shrink / 4.0, -gamma / 4.0 * ai_sum, gamma, shrink};
}

FlowCoefficients flow_coefficients(const LayerStack& cfg, double gamma, int m) {
  return flow_coefficients(cfg.alphas, cfg.ks, gamma, m);
}

FlowCoefficients gd_flow_coefficients(double gamma, int m) {
  if (m < 1) throw std::invalid_argument("gd_flow_coefficients: m must be >= 1");
  return {gamma / (4.0 * m), gamma * (m - 1) / (4.0 * m), gamma, 1.0};
}

Vec modified_flow_grad(const DecomposedProblem& p, const Vec& y, const FlowCoefficients& coefs) {
  Vec g = p.full_grad(y);
  if (coefs.an_coef != 0.0) g += coefs.an_coef * ang(p, y);
  if (coefs.ai_coef != 0.0) g += coefs.ai_coef * aig(p, y);
  return g;
}

EpochAverage expected_epoch_iterate(const DecomposedProblem& p, const Vec& y0, double gamma,
                                    std::span<const double> alphas, std::span<const int> ks, ExpectationMode mode,
                                    std::int64_t samples, std::uint64_t seed) {
  const int m = p.num_components();
  if (y0.size() != p.dim()) throw std::invalid_argument("expected_epoch_iterate: dimension mismatch");
  LayerStack cfg{{alphas.begin(), alphas.end()}, {ks.begin(), ks.end()}, LrSchedule::constant(gamma)};
  cfg.validate();
  if (m % cfg.round_length() != 0)
    throw std::invalid_argument("expected_epoch_iterate: m is not a multiple of k_1...k_n");

  std::vector<int> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  auto epoch = [&]() {
    MultilayerState s = MultilayerState::start(y0, cfg.layers());
    for (int i : perm) mla_step(s, cfg, p.component_grad(i, s.inner()));
    return s.outer();
  };

  EpochAverage out;
  if (mode == ExpectationMode::exact) {
    if (m > 8) throw std::invalid_argument("expected_epoch_iterate: exact enumeration is limited to m <= 8");
    CompensatedVectorSum sum(p.dim());
    do {
      sum.add(epoch());
      ++out.count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.mean = sum.value() / static_cast<double>(out.count);
    out.std_error = Vec::Zero(p.dim());
    return out;
  }

  if (samples < 2) throw std::invalid_argument("expected_epoch_iterate: Monte Carlo mode needs at least 2 samples");
  RandomStream rng(seed, streams::kPermutation);
  Vec mean = Vec::Zero(p.dim());
  Vec m2 = Vec::Zero(p.dim());
  for (std::int64_t s = 0; s < samples; ++s) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = m - 1; i > 0; --i)
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i) + 1))]);
    const Vec y = epoch();
    const Vec delta = y - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta.cwiseProduct(y - mean);
  }
  out.mean = mean;
  out.std_error = (m2 / static_cast<double>(samples - 1) / static_cast<double>(samples)).cwiseSqrt();
  out.count = samples;
  return out;
}

Vec rk4_integrate(const VectorField& field, const Vec& y0, double horizon, std::int64_t steps) {
  if (steps < 1) throw std::invalid_argument("rk4_integrate: steps must be >= 1");
  if (horizon == 0.0) return y0;
  const double h = horizon / static_cast<double>(steps);
  Vec y = y0;
  for (std::int64_t s = 0; s < steps; ++s) {
    const Vec k1 = field(y);
    const Vec k2 = field(y + 0.5 * h * k1);
    const Vec k3 = field(y + 0.5 * h * k2);
    const Vec k4 = field(y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

double flow_tolerance(const DecomposedProblem& p, const Vec& y0, double gamma) {
  const double eps = std::numeric_limits<double>::epsilon();
  return std::max(1e-3 * gamma * gamma * gamma * p.full_grad(y0).norm(), 64.0 * eps * (1.0 + y0.norm()));
}

FlowIntegration integrate_modified_flow(const DecomposedProblem& p, const Vec& y0, const FlowCoefficients& coefs,
                                        double horizon, double tolerance) {
  if (!(horizon >= 0.0)) throw std::invalid_argument("integrate_modified_flow: horizon must be nonnegative");
  if (horizon == 0.0) return {y0, 0, 0.0};
  const double tol = tolerance > 0.0 ? tolerance : flow_tolerance(p, y0, coefs.base_step);
  const VectorField field = [&](const Vec& y) -> Vec { return -modified_flow_grad(p, y, coefs); };
  std::int64_t steps = 1;
  Vec coarse = rk4_integrate(field, y0, horizon, steps);
  constexpr std::int64_t kMaxSteps = std::int64_t{1} << 22;
  while (steps < kMaxSteps) {
    steps *= 2;
    Vec fine = rk4_integrate(field, y0, horizon, steps);
    const double err = (fine - coarse).norm() / 15.0;
    if (err <= tol) return {fine, steps, err};
    coarse = std::move(fine);
  }
  throw std::runtime_error("integrate_modified_flow: step halving did not reach tolerance " + std::to_string(tol));
}

CsvWriter OrderCheckResult::csv() const {
  CsvWriter w({"gamma", "residual_norm", "prediction_kind"});
  const std::string kind = order == 1 ? "first_order" : "modified_flow";
  for (const auto& s : samples) w.row({format_double(s.gamma), format_double(s.residual), kind});
  return w;
}

std::string OrderCheckResult::summary() const {
  std::ostringstream os;
  os << "order=" << order << " slope=" << format_double(slope) << " bracket=[" << format_double(slope_lo) << ","
     << format_double(slope_hi) << "] pass=" << (pass ? 1 : 0);
  if (!monotone) os << " regime=non-asymptotic (residuals not monotone in gamma)";
  return os.str();
}

OrderCheckResult order_check(const DecomposedProblem& p, const Vec& y0, std::span<const double> alphas,
                             std::span<const int> ks, std::span<const double> gammas, int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("order_check: order must be 1 or 2");
  if (gammas.size() < 2) throw std::invalid_argument("order_check: need at least two step sizes");
  const int m = p.num_components();
  OrderCheckResult res;
  res.order = order;
  const double half_width = order == 1 ? 0.2 : 0.3;
  res.slope_lo = order + 1 - half_width;
  res.slope_hi = order + 1 + half_width;
  const Vec g0 = p.full_grad(y0);
  for (double gamma : gammas) {
    if (!(gamma > 0.0)) throw std::invalid_argument("order_check: step sizes must be positive");
    const FlowCoefficients coefs = flow_coefficients(alphas, ks, gamma, m);
    const Vec expected = expected_epoch_iterate(p, y0, gamma, alphas, ks).mean;
    const double horizon = coefs.shrink * gamma * m;
    const Vec prediction =
        order == 1 ? Vec(y0 - horizon * g0) : integrate_modified_flow(p, y0, coefs, horizon).y;
    res.samples.push_back({gamma, (expected - prediction).norm()});
  }
  std::vector<OrderSample> sorted = res.samples;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.gamma < b.gamma; });
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (!(sorted[i].residual > sorted[i - 1].residual)) res.monotone = false;
  std::vector<double> gs, rs;
  for (const auto& s : res.samples) {
    gs.push_back(s.gamma);
    rs.push_back(s.residual);
  }
  const bool positive = std::all_of(rs.begin(), rs.end(), [](double r) { return r > 0.0; });
  res.slope = positive ? loglog_slope(gs, rs) : std::numeric_limits<double>::quiet_NaN();
  if (!positive) res.monotone = false;
  res.pass = res.monotone && res.slope >= res.slope_lo && res.slope <= res.slope_hi;
  return res;
}

}  // namespace nestla
