// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nestla/commands.hpp"
#include "nestla/config.hpp"
#include "nestla/csv.hpp"
#include "nestla/localsgd.hpp"
#include "nestla/optimizers.hpp"
#include "nestla/problems.hpp"
#include "nestla/regularizer.hpp"
#include "nestla/rng.hpp"
#include "nestla/theory.hpp"
#include "oracles.hpp"

using namespace nestla;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = "first failure: " + what + (detail.empty() ? "" : "; " + detail);
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) { return format_double(v); }

CsvTable parse(const CommandResult& r) {
  std::istringstream in(r.csv.str());
  return read_csv(in);
}

double comment_value(const CsvTable& t, const std::string& key) {
  for (const auto& c : t.comments)
    if (c.rfind(key + "=", 0) == 0) return parse_double(c.substr(key.size() + 1));
  throw std::runtime_error("missing comment " + key);
}

// Commands run once and reused by the determinism criterion.
std::map<std::string, std::string> first_runs;

CommandResult run_and_keep(const std::string& name, const ExperimentConfig& cfg) {
  auto r = run_command(name, cfg);
  first_runs[name] = r.csv.str();
  return r;
}

Outcome equivalence() {
  Outcome o;
  const ExperimentConfig cfg;
  const auto t0 = Clock::now();
  const auto r = run_and_keep("equiv", cfg);
  const double secs = seconds_since(t0);
  const auto t = parse(r);
  const auto dev = t.numeric_column("max_abs_dev");
  const auto T = t.numeric_column("T");
  double worst = 0.0;
  int random_configs = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    worst = std::max(worst, dev[i]);
    o.require(T[i] == 10000, "T != 1e4");
    if (t.rows[i][t.column("mode")] == "recomputed") ++random_configs;
  }
  o.require(r.pass, "equiv command reported a failing row");
  o.require(random_configs >= 20, "fewer than 20 random configs");
  o.require(worst <= 1e-10, "deviation above 1e-10");
  o.require(secs < 10.0, "runtime above 10 s");

  // Independent cross-check: recursive wrapper oracle vs the matrix form on one noise tape.
  const auto p = make_quadratic_suite(8, 4, 1.0, 10.0, 1);
  RandomStream rng(99, streams::kSweep);
  double oracle_worst = 0.0;
  for (int c = 0; c < 3; ++c) {
    const TwoLayerParams tp{0.1 + 0.9 * rng.uniform(), 0.1 + 0.9 * rng.uniform(), 1 + static_cast<int>(rng.below(6)),
                            1 + static_cast<int>(rng.below(6))};
    const double gamma = 0.05 + 0.1 * rng.uniform();
    const Vec z0 = Vec::Ones(8);
    auto opt = oracle::nest(z0, {tp.alpha1, tp.alpha2}, {tp.k1, tp.k2});
    auto s = LocalSgdState::start(z0, tp);
    NoiseTape tape(GradientNoise(100 + c, 8, 1.0));
    for (std::int64_t step = 0; step < 10000; ++step) {
      const Vec& eta = tape.at(step);
      opt->step(p.full_grad(opt->fast()) + eta, gamma);
      local_sgd_step(s, p.full_grad(s.X.col(0)) + eta, gamma, tp);
      oracle_worst = std::max({oracle_worst, (s.X.col(0) - opt->fast()).cwiseAbs().maxCoeff(),
                               (s.X.col(2) - opt->params()).cwiseAbs().maxCoeff()});
    }
  }
  o.require(oracle_worst <= 1e-10, "matrix form disagrees with the recursive oracle");
  o.detail += "configs=" + std::to_string(t.rows.size()) + " max_abs_dev=" + fmt(worst) +
              " oracle_dev=" + fmt(oracle_worst) + " runtime=" + fmt(secs) + "s";
  return o;
}

Outcome theta_recursion() {
  Outcome o;
  const auto p = make_quadratic_suite(8, 4, 1.0, 10.0, 1);
  const LayerStack cfg{{0.6, 0.8}, {2, 5}, LrSchedule::constant(0.2)};
  RunOptions opt;
  opt.record_theta = true;
  opt.record_gradients = true;
  double worst = 0.0;
  std::int64_t boundaries = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto rep = run(p, cfg, p.minimizer() + Vec::Constant(8, 2.0), 10000, seed, opt);
    for (std::size_t t = 0; t + 1 < rep.iterates.size(); ++t) {
      const auto& it = rep.iterates[t];
      const Vec step = -0.2 * 0.48 * it.gradient;
      const Vec diff = rep.iterates[t + 1].theta - it.theta;
      const double scale = std::max({it.theta.norm(), rep.iterates[t + 1].theta.norm(), step.norm()});
      worst = std::max(worst, (diff - step).norm() / scale);
      if (it.sync_depth > 0) ++boundaries;
    }
  }
  o.require(worst <= 1e-12, "relative residual above 1e-12");
  o.require(boundaries > 0, "no round boundaries visited");
  o.detail = "max_relative_residual=" + fmt(worst) + " sync_steps=" + std::to_string(boundaries);
  return o;
}

Outcome degeneracy() {
  Outcome o;
  const auto p = make_quadratic_suite(8, 4, 1.0, 10.0, 1);
  const std::vector<int> all_ks{2, 3, 2, 2};
  int compared = 0;
  for (int n = 1; n <= 4; ++n) {
    const LayerStack cfg{std::vector<double>(n, 1.0), std::vector<int>(all_ks.begin(), all_ks.begin() + n),
                         LrSchedule::constant(0.1)};
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const GradientNoise noise(seed, 8, 1.0);
      Vec x = Vec::Ones(8);
      std::int64_t t = 0;
      bool same = true;
      RunOptions opt;
      opt.record_loss = false;
      opt.keep_records = false;
      opt.record_theta = true;
      opt.observer = [&](const IterationRecord& r) {
        if (!(r.theta.array() == x.array()).all()) same = false;
        x = sgd_step(x, noisy_grad(p, x, noise, t), 0.1);
        ++t;
      };
      const auto rep = run(p, cfg, Vec::Ones(8), 10000, seed, opt);
      same = same && (rep.final_state.inner().array() == x.array()).all();
      o.require(same, "n=" + std::to_string(n) + " seed=" + std::to_string(seed) + " differs from SGD");
      ++compared;
    }
  }
  o.detail += "runs=" + std::to_string(compared) + " T=10000";
  return o;
}

Outcome bound() {
  Outcome o;
  const ExperimentConfig cfg;
  const auto t0 = Clock::now();
  const auto r = run_and_keep("bound", cfg);
  const double secs = seconds_since(t0);
  const auto t = parse(r);
  const auto b = t.numeric_column("bound");
  const auto e = t.numeric_column("empirical_mean");
  const auto se = t.numeric_column("std_error");
  double worst_margin = -INFINITY;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    o.require(e[i] <= b[i] + 3 * se[i], "cell " + std::to_string(i) + " above bound + 3 SE");
    worst_margin = std::max(worst_margin, (e[i] + 3 * se[i]) / b[i]);
  }
  o.require(t.rows.size() == 6, "expected 6 cells");
  o.require(secs < 180.0, "runtime above 3 min");
  o.detail += "cells=" + std::to_string(t.rows.size()) + " max (mean+3SE)/bound=" + fmt(worst_margin) +
              " runtime=" + fmt(secs) + "s";
  return o;
}

Outcome corollary2() {
  Outcome o;
  const ExperimentConfig cfg;
  const auto p = make_problem(cfg);
  const Vec x0 = start_point(p, cfg);
  const auto b = BoundInputs::from_problem(p, x0, {0.6, 0.8, 2, 5});
  const double gs = gamma_star(b);
  const double thr = corollary2_lr(b, 10).threshold;
  const double beta = 0.48, sigma = std::sqrt(b.sigma2);
  const double g_at_thr = std::sqrt(2 * b.gap / (thr * b.L)) / (beta * sigma);
  o.require(std::abs(g_at_thr - gs) <= 1e-12 * gs, "gamma at threshold differs from gamma*");
  double first_scaled = NAN, spread = 0.0;
  std::int64_t T = static_cast<std::int64_t>(std::ceil(thr / 10.0)) * 10;
  for (int j = 0; j < 7; ++j, T *= 10) {
    const auto s = corollary2_lr(b, T);
    o.require(s.feasible && s.gamma <= gs, "step above gamma* at T=" + std::to_string(T));
    const double lead = 2 * sigma * std::sqrt(2 * b.L * b.gap) / std::sqrt(static_cast<double>(T));
    o.require(std::abs(s.leading_term - lead) <= 1e-12 * lead, "leading term mismatch");
    const double rem = theorem2_bound(b, s.gamma, T) - lead;
    o.require(rem > 0.0, "non-positive remainder");
    const double scaled = rem * static_cast<double>(T);
    if (std::isnan(first_scaled)) first_scaled = scaled;
    spread = std::max(spread, std::abs(scaled / first_scaled - 1));
  }
  o.require(spread <= 1e-6, "remainder is not O(1/T)");
  o.detail += "threshold=" + fmt(thr) + " |gamma(thr)-gamma*|/gamma*=" + fmt(std::abs(g_at_thr - gs) / gs) +
              " T*remainder spread=" + fmt(spread);
  return o;
}

Outcome claim1() {
  Outcome o;
  const ExperimentConfig cfg;
  const auto r = run_and_keep("claim1", cfg);
  const auto t = parse(r);
  const auto a1 = t.numeric_column("alpha1"), a2 = t.numeric_column("alpha2"), flag = t.numeric_column("argmin");
  int winners = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (flag[i] == 1.0) {
      ++winners;
      o.require(a1[i] == 1.0 && a2[i] == 1.0, "argmin is not (1,1)");
    }
  o.require(winners == 1 && t.rows.size() == 16, "grid shape");
  o.require(r.pass, "claim1 command failed");
  o.detail += "T=1e10 cells=" + std::to_string(t.rows.size());
  return o;
}

CommandResult restart_result;

Outcome restarts() {
  Outcome o;
  const ExperimentConfig cfg;
  const auto t0 = Clock::now();
  restart_result = run_and_keep("restart", cfg);
  const double secs = seconds_since(t0);
  const auto t = parse(restart_result);
  const double slope = comment_value(t, "restart_slope");
  int runs = 0;
  for (const auto& row : t.rows)
    if (row[t.column("kind")] == "restart") ++runs;
  o.require(runs == 7, "expected runs M=0..6");
  o.require(slope <= -0.4, "slope above -0.4");
  o.require(secs < 120.0, "runtime above 2 min");
  o.detail += "slope=" + fmt(slope) + " runtime=" + fmt(secs) + "s";
  return o;
}

Outcome schedule() {
  Outcome o;
  const auto t = parse(restart_result);
  const double ratio = comment_value(t, "schedule_ratio");
  o.require(ratio < 0.25, "W_400 / W_20 >= 0.25");
  o.detail += "W400/W20=" + fmt(ratio) + " seeds=32";
  return o;
}

Outcome linrate() {
  Outcome o;
  const ExperimentConfig cfg;
  const auto r = run_and_keep("linrate", cfg);
  const auto t = parse(r);
  const auto pd = t.numeric_column("predicted_distance"), md = t.numeric_column("max_distance_ratio");
  const auto pv = t.numeric_column("predicted_value"), mv = t.numeric_column("max_value_ratio");
  const auto df = t.numeric_column("distance_factor");
  double worst = -INFINITY;
  for (std::size_t i = 1; i < t.rows.size(); ++i) worst = std::max({worst, md[i] - pd[i], mv[i] - pv[i]});
  o.require(t.rows.size() == 101, "expected isotropic case + 100 configs");
  o.require(worst <= 1e-9, "measured contraction above prediction + 1e-9");
  const double iso = std::abs(df[0] - 0.5);
  o.require(iso <= 1e-12 && std::abs(md[0] - 0.5) <= 1e-12, "isotropic factor differs from 1 - alpha");
  o.detail += "max excess=" + fmt(worst) + " isotropic |factor-(1-alpha)|=" + fmt(iso);
  return o;
}

Outcome order_slopes() {
  Outcome o;
  const ExperimentConfig cfg;
  const auto t0 = Clock::now();
  const auto r = run_and_keep("regflow", cfg);
  const double secs = seconds_since(t0);
  const auto t = parse(r);
  std::string slopes;
  for (const auto& c : t.comments)
    if (c.rfind("summary ", 0) == 0) slopes += " [" + c.substr(8) + "]";
  o.require(r.pass, r.first_failure);
  o.require(cfg.regflow_dim == 4, "dimension");
  o.require(secs < 300.0, "runtime above 5 min");
  o.detail += "runtime=" + fmt(secs) + "s" + slopes;
  return o;
}

Outcome identities() {
  Outcome o;
  const auto p = make_quadratic_suite(8, 4, 0.0, 10.0, 1);
  RandomStream rng(123, streams::kSweep);
  double worst = 0.0, worst_grad = 0.0;
  for (int i = 0; i < 100; ++i) {
    Vec y(8);
    for (int j = 0; j < 8; ++j) y[j] = 3 * rng.normal();
    const Vec g = p.full_grad(y);
    const double lhs = g.squaredNorm();
    worst = std::max(worst, std::abs((an(p, y) + 3 * ai(p, y)) / 4 - lhs) / lhs);
    const Vec glhs = 2 * p.mean_hessian() * g;
    worst_grad = std::max(worst_grad, ((ang(p, y) + 3 * aig(p, y)) / 4 - glhs).norm() / glhs.norm());
  }
  double tele = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int n = 1 + static_cast<int>(rng.below(6));
    std::vector<double> al(n);
    std::vector<int> ks(n, 1);
    ks[0] = 2;
    double beta = 1.0;
    for (auto& a : al) {
      a = rng.uniform();
      beta *= a;
    }
    // With k_1 = 2 and k_p = 1 above, each (k_p...k_1 - 1) factor is 1.
    const double sum = -flow_coefficients(al, ks, 4.0, 2).ai_coef;
    tele = std::max(tele, std::abs(sum - (1 - beta)));
  }
  o.require(worst <= 1e-10, "value identity");
  o.require(worst_grad <= 1e-10, "gradient identity");
  o.require(tele <= 1e-14, "telescoping");
  o.detail += "value=" + fmt(worst) + " gradient=" + fmt(worst_grad) + " telescoping=" + fmt(tele);
  return o;
}

Outcome determinism() {
  Outcome o;
  const ExperimentConfig cfg;
  run_and_keep("run", cfg);
  setenv("NESTED_LA_THREADS", "3", 1);
  std::string checked;
  for (const auto& name : command_names()) {
    auto it = first_runs.find(name);
    o.require(it != first_runs.end(), name + " not run");
    if (it == first_runs.end()) continue;
    o.require(run_command(name, cfg).csv.str() == it->second, name + " output differs on rerun");
    checked += " " + name;
  }
  unsetenv("NESTED_LA_THREADS");
  o.detail += "commands:" + checked;
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"local-SGD equivalence", equivalence},
      {"theta recursion", theta_recursion},
      {"alpha=1 degeneracy", degeneracy},
      {"stochastic bound", bound},
      {"corollary step size", corollary2},
      {"alpha grid argmin", claim1},
      {"restart slope", restarts},
      {"decaying schedule", schedule},
      {"linear-rate preservation", linrate},
      {"modified-flow order", order_slopes},
      {"AN/AI identities", identities},
      {"CLI determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    if (!out.pass) ++failures;
    std::printf("criterion %2zu %s: %s  %s\n", i + 1, out.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
