// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#include "nestla/commands.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nestla/localsgd.hpp"
#include "nestla/montecarlo.hpp"
#include "nestla/regularizer.hpp"
#include "nestla/rng.hpp"
#include "nestla/theory.hpp"

namespace nestla {

void CommandResult::check(bool ok, const std::string& what) {
  if (!ok && pass) first_failure = what;
  pass = pass && ok;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"run", "equiv", "bound", "restart", "linrate", "regflow", "claim1"};
  return names;
}

DecomposedProblem make_problem(const ExperimentConfig& cfg) {
  if (!cfg.problem_path.empty()) {
    try {
      return load_problem(cfg.problem_path);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("problem_path: ") + e.what());
    }
  }
  return make_quadratic_suite(cfg.dim, cfg.m, cfg.sigma, cfg.conditioning, cfg.problem_seed);
}

Vec start_point(const DecomposedProblem& p, const ExperimentConfig& cfg) {
  if (!p.strongly_convex()) throw ConfigError("problem is not strongly convex; the start point is defined from x*");
  return p.minimizer() + Vec::Constant(p.dim(), cfg.start_offset);
}

namespace {

std::string join_semicolon(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ";" : "") + format_double(xs[i]);
  return s;
}

std::string join_semicolon(const std::vector<int>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ";" : "") + std::to_string(xs[i]);
  return s;
}

std::string flag(bool b) { return b ? "1" : "0"; }

void stamp(CommandResult& r, const ExperimentConfig& cfg) {
  r.csv.comment("command=" + r.name);
  r.csv.comment("rng=" + std::string(kRngAlgorithm));
  for (const auto& kv : cfg.dump()) r.csv.comment(kv);
}

TwoLayerParams two_layer(const ExperimentConfig& cfg) {
  if (cfg.alphas.size() != 2) throw ConfigError("this command needs a two-layer configuration (two alphas and ks)");
  TwoLayerParams t{cfg.alphas[0], cfg.alphas[1], cfg.ks[0], cfg.ks[1]};
  t.validate();
  return t;
}

std::int64_t round_length(const TwoLayerParams& t) { return static_cast<std::int64_t>(t.k1) * t.k2; }

CommandResult cmd_run(const ExperimentConfig& cfg) {
  CommandResult r;
  r.name = "run";
  const auto p = make_problem(cfg);
  const Vec x0 = start_point(p, cfg);
  double gamma = cfg.gamma;
  if (gamma == 0.0) {
    gamma = cfg.alphas.size() == 2 ? 0.5 * gamma_star(BoundInputs::from_problem(p, x0, two_layer(cfg)))
                                   : 0.5 / p.smoothness_constant();
  }
  const LayerStack stack{cfg.alphas, cfg.ks, LrSchedule::constant(gamma)};
  const auto seed = cfg.seed_list(1).front();
  RunOptions opt;
  opt.record_theta = true;
  const auto report = run(p, stack, x0, cfg.T, seed, opt);
  r.csv = run_report_csv(report);
  stamp(r, cfg);
  bool finite = true;
  for (const auto& it : report.iterates) finite = finite && std::isfinite(it.grad_norm_sq) && std::isfinite(it.loss);
  r.check(finite, "run: iterates stay finite");
  const auto& last = report.iterates.back();
  r.summary.push_back("run: T=" + std::to_string(cfg.T) + " gamma=" + format_double(gamma) +
                      " final loss=" + format_double(last.loss) + " |grad|^2=" + format_double(last.grad_norm_sq));
  return r;
}

CommandResult cmd_equiv(const ExperimentConfig& cfg) {
  CommandResult r;
  r.name = "equiv";
  r.csv = CsvWriter({"config", "mode", "alpha1", "alpha2", "k1", "k2", "gamma", "T", "max_abs_dev",
                     "first_divergence_t", "pass"});
  stamp(r, cfg);
  const auto p = make_problem(cfg);
  const Vec x0 = start_point(p, cfg);
  const double L = p.smoothness_constant();
  RandomStream rng(cfg.sweep_seed, streams::kSweep);
  double worst = 0.0;
  for (int c = 0; c <= cfg.equiv_configs; ++c) {
    // Config 0 uses dyadic weights, for which both forms round identically.
    const bool exact = c == 0;
    LayerStack stack;
    if (exact) {
      stack = {{0.5, 0.5}, {2, 4}, LrSchedule::constant(0.25 / L)};
    } else {
      const double a1 = 0.05 + 0.95 * rng.uniform();
      const double a2 = 0.05 + 0.95 * rng.uniform();
      const int k1 = 1 + static_cast<int>(rng.below(8));
      const int k2 = 1 + static_cast<int>(rng.below(8));
      const double gamma = (0.05 + 0.95 * rng.uniform()) / L;
      stack = {{a1, a2}, {k1, k2}, LrSchedule::constant(gamma)};
    }
    const auto seed = cfg.seed_list(1).front() + static_cast<std::uint64_t>(c);
    const auto rep = verify_equivalence(p, stack, x0, cfg.equiv_T, seed,
                                        exact ? EquivalenceMode::exact : EquivalenceMode::recomputed);
    const bool ok = rep.pass && rep.max_abs_dev <= 1e-10;
    worst = std::max(worst, rep.max_abs_dev);
    r.csv.row({std::to_string(c), exact ? "exact" : "recomputed", format_double(stack.alphas[0]),
               format_double(stack.alphas[1]), std::to_string(stack.ks[0]), std::to_string(stack.ks[1]),
               format_double(stack.lr(0)), std::to_string(rep.T), format_double(rep.max_abs_dev),
               std::to_string(rep.first_divergence_t), flag(ok)});
    r.check(ok, "equiv: config " + std::to_string(c) + " deviates (first at t=" +
                    std::to_string(rep.first_divergence_t) + ")");
  }
  r.summary.push_back("equiv: " + std::to_string(cfg.equiv_configs + 1) + " configs, T=" +
                      std::to_string(cfg.equiv_T) + ", max_abs_dev=" + format_double(worst));
  return r;
}

CommandResult cmd_bound(const ExperimentConfig& cfg) {
  CommandResult r;
  r.name = "bound";
  r.csv = CsvWriter({"gamma_fraction", "gamma", "T", "bound", "empirical_mean", "std_error", "pass"});
  stamp(r, cfg);
  const auto p = make_problem(cfg);
  const Vec x0 = start_point(p, cfg);
  const auto params = two_layer(cfg);
  const auto b = BoundInputs::from_problem(p, x0, params);
  const double gs = gamma_star(b);
  const auto seeds = cfg.seed_list(64);
  for (auto T : cfg.bound_Ts) {
    if (T % round_length(params) != 0) throw ConfigError("bound_Ts must be multiples of k1*k2");
    for (double f : cfg.bound_fractions) {
      const double gamma = f * gs;
      const double bound = theorem2_bound(b, gamma, T);
      const LayerStack stack{cfg.alphas, cfg.ks, LrSchedule::constant(gamma)};
      const auto mc = monte_carlo(p, stack, x0, T, seeds);
      const auto est = mean_and_error(mc.time_average);
      const bool ok = est.mean <= bound + 3.0 * est.std_error;
      r.csv.row({format_double(f), format_double(gamma), std::to_string(T), format_double(bound),
                 format_double(est.mean), format_double(est.std_error), flag(ok)});
      r.check(ok, "bound: empirical average exceeds the bound at gamma=" + format_double(f) + "*gamma*, T=" +
                      std::to_string(T));
      r.summary.push_back("bound: T=" + std::to_string(T) + " gamma=" + format_double(f) + "*gamma* bound=" +
                          format_double(bound) + " empirical=" + format_double(est.mean) + " +- " +
                          format_double(est.std_error));
    }
  }
  r.summary.push_back("bound: gamma*=" + format_double(gs) + " seeds=" + std::to_string(seeds.size()));
  return r;
}

CommandResult cmd_restart(const ExperimentConfig& cfg) {
  CommandResult r;
  r.name = "restart";
  r.csv = CsvWriter({"kind", "index", "iterations", "gamma", "mean", "std_error"});
  stamp(r, cfg);
  const auto p = make_problem(cfg);
  const Vec x0 = start_point(p, cfg);
  const auto params = two_layer(cfg);
  const auto b = BoundInputs::from_problem(p, x0, params);
  const double gs = gamma_star(b);
  const std::int64_t len = round_length(params);
  const auto seeds = cfg.seed_list(32);

  // Restarts: every run starts from x0; the x-axis is the total iteration count so far.
  const auto schedule = restart_schedule(gs, cfg.restart_M);
  std::vector<double> totals, means;
  std::int64_t total = 0;
  for (std::size_t m = 0; m < schedule.runs.size(); ++m) {
    const auto& run_m = schedule.runs[m];
    const std::int64_t T = run_m.rounds * len;
    total += T;
    const LayerStack stack{cfg.alphas, cfg.ks, LrSchedule::constant(run_m.gamma)};
    const auto mc = monte_carlo(p, stack, x0, T, seeds);
    const auto est = mean_and_error(mc.time_average);
    r.csv.row({"restart", std::to_string(m), std::to_string(total), format_double(run_m.gamma),
               format_double(est.mean), format_double(est.std_error)});
    if (static_cast<int>(m) >= cfg.restart_fit_from) {
      totals.push_back(static_cast<double>(total));
      means.push_back(est.mean);
    }
  }
  const double slope = loglog_slope(totals, means);
  r.csv.comment("restart_slope=" + format_double(slope));
  r.check(slope <= cfg.restart_slope_max, "restart: log-log slope " + format_double(slope) + " above " +
                                              format_double(cfg.restart_slope_max));
  r.summary.push_back("restart: M=" + std::to_string(cfg.restart_M) + " slope=" + format_double(slope) +
                      " (max " + format_double(cfg.restart_slope_max) + ")");

  // Decaying per-round schedule and its weighted average W_R.
  const double g0 = cfg.schedule_gamma0;
  const LayerStack stack{cfg.alphas, cfg.ks, LrSchedule::per_round(len, [gs, g0](std::int64_t round) {
                           return std::min(gs, g0 / std::sqrt(static_cast<double>(round) + 1.0));
                         })};
  const std::int64_t T = static_cast<std::int64_t>(cfg.schedule_rounds) * len;
  std::vector<double> gammas(static_cast<std::size_t>(T));
  for (std::int64_t t = 0; t < T; ++t) gammas[static_cast<std::size_t>(t)] = stack.lr(t);
  const auto per_seed = map_seeds(seeds, [&](std::uint64_t s) {
    return theorem1_weighted_average(gammas, grad_norm_trajectory(p, stack, x0, T, s), len);
  });
  std::vector<double> column(per_seed.size());
  std::vector<double> w(static_cast<std::size_t>(cfg.schedule_rounds));
  for (int R = 1; R <= cfg.schedule_rounds; ++R) {
    for (std::size_t s = 0; s < per_seed.size(); ++s) column[s] = per_seed[s][static_cast<std::size_t>(R - 1)];
    const auto est = mean_and_error(column);
    w[static_cast<std::size_t>(R - 1)] = est.mean;
    r.csv.row({"schedule", std::to_string(R), std::to_string(R * len),
               format_double(gammas[static_cast<std::size_t>((R - 1) * len)]), format_double(est.mean),
               format_double(est.std_error)});
  }
  const double ratio = w.back() / w[static_cast<std::size_t>(cfg.schedule_check_round - 1)];
  r.csv.comment("schedule_ratio=" + format_double(ratio));
  r.check(ratio < cfg.schedule_ratio_max, "restart: W_R ratio " + format_double(ratio) + " not below " +
                                              format_double(cfg.schedule_ratio_max));
  r.summary.push_back("schedule: W_" + std::to_string(cfg.schedule_rounds) + "/W_" +
                      std::to_string(cfg.schedule_check_round) + "=" + format_double(ratio) + " (max " +
                      format_double(cfg.schedule_ratio_max) + ")");
  return r;
}

CommandResult cmd_linrate(const ExperimentConfig& cfg) {
  CommandResult r;
  r.name = "linrate";
  r.csv = CsvWriter({"config", "layers", "alphas", "ks", "dim", "m", "conditioning", "gamma", "c",
                     "predicted_distance", "max_distance_ratio", "distance_factor", "predicted_value",
                     "max_value_ratio", "value_factor", "rounds", "pass"});
  stamp(r, cfg);
  RandomStream rng(cfg.sweep_seed, streams::kSweep);
  auto emit = [&](int c, const DecomposedProblem& p, const LayerStack& stack, const ContractionReport& rep, bool ok) {
    r.csv.row({std::to_string(c), std::to_string(stack.layers()), join_semicolon(stack.alphas),
               join_semicolon(stack.ks), std::to_string(p.dim()), std::to_string(p.num_components()),
               format_double(p.smoothness_constant() / p.strong_convexity()), format_double(stack.lr(0)),
               format_double(rep.inner_contraction), format_double(rep.predicted_distance),
               format_double(rep.max_distance_ratio), format_double(rep.distance_factor),
               format_double(rep.predicted_value), format_double(rep.max_value_ratio),
               format_double(rep.value_factor), std::to_string(rep.rounds_measured), flag(ok)});
  };

  // Isotropic case: gamma = 1/L lands every inner step on x*, so a round contracts by exactly 1 - alpha.
  {
    const auto p = make_quadratic_suite(4, 3, 0.0, 1.0, cfg.sweep_seed);
    const LayerStack stack{{0.5}, {3}, LrSchedule::constant(1.0 / p.smoothness_constant())};
    const Vec x0 = p.minimizer() + Vec::Constant(4, 1.0);
    const auto rep = measure_contraction(p, stack, x0, 5);
    const bool ok = std::abs(rep.distance_factor - 0.5) <= 1e-12 && std::abs(rep.max_distance_ratio - 0.5) <= 1e-12;
    emit(0, p, stack, rep, ok);
    r.check(ok, "linrate: isotropic factor differs from 1 - alpha");
  }
  int failures = 0;
  for (int c = 1; c <= cfg.linrate_configs; ++c) {
    const int dim = 2 + static_cast<int>(rng.below(7));
    const int m = 1 + static_cast<int>(rng.below(4));
    const double kappa = std::exp(std::log(100.0) * rng.uniform());
    const auto p = make_quadratic_suite(dim, m, 0.0, kappa, rng.next_u64());
    const int n = 1 + static_cast<int>(rng.below(3));
    LayerStack stack;
    for (int q = 0; q < n; ++q) {
      stack.alphas.push_back(0.05 + 0.95 * rng.uniform());
      stack.ks.push_back(1 + static_cast<int>(rng.below(5)));
    }
    stack.lr = LrSchedule::constant((0.05 + 1.9 * rng.uniform()) / p.smoothness_constant());
    Vec x0 = p.minimizer();
    for (int j = 0; j < dim; ++j) x0[j] += rng.normal();
    const auto rep = measure_contraction(p, stack, x0, cfg.linrate_rounds);
    const bool ok = rep.within(1e-9);
    if (!ok) ++failures;
    emit(c, p, stack, rep, ok);
    r.check(ok, "linrate: config " + std::to_string(c) + " contracts slower than predicted");
  }
  r.summary.push_back("linrate: " + std::to_string(cfg.linrate_configs) + " random configs, " +
                      std::to_string(failures) + " violations");
  return r;
}

CommandResult cmd_regflow(const ExperimentConfig& cfg) {
  CommandResult r;
  r.name = "regflow";
  r.csv = CsvWriter({"case", "gamma", "residual_norm", "prediction_kind"});
  stamp(r, cfg);
  struct Case {
    std::string name;
    int m;
    std::vector<double> alphas;
    std::vector<int> ks;
  };
  const std::vector<Case> cases{
      {"la1_m4", 4, {0.5}, {2}},
      {"la2_m8", 8, {0.5, 0.7}, {2, 2}},
      {"sgd_m4", 4, {}, {}},
  };
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const auto& cs = cases[c];
    const auto p = make_quadratic_suite(cfg.regflow_dim, cs.m, 0.0, cfg.conditioning, cfg.regflow_seed + c);
    RandomStream rng(cfg.regflow_seed + c, streams::kSweep);
    Vec y0(cfg.regflow_dim);
    for (int j = 0; j < cfg.regflow_dim; ++j) y0[j] = rng.normal();
    for (int order : {1, 2}) {
      const auto res = order_check(p, y0, cs.alphas, cs.ks, cfg.regflow_gammas, order);
      double largest = 0.0;
      for (const auto& s : res.samples) {
        largest = std::max(largest, s.residual);
        r.csv.row({cs.name, format_double(s.gamma), format_double(s.residual),
                   order == 1 ? "first_order" : "modified_flow"});
      }
      const bool in_regime = largest <= 1e-2 * y0.norm();
      const std::string line = "summary case=" + cs.name + " " + res.summary();
      r.csv.comment(line);
      r.summary.push_back("regflow: " + line + (in_regime ? "" : " (largest residual above 1e-2 |y0|)"));
      r.check(res.pass && in_regime, "regflow: " + cs.name + " order " + std::to_string(order));
    }
  }
  return r;
}

CommandResult cmd_claim1(const ExperimentConfig& cfg) {
  CommandResult r;
  r.name = "claim1";
  r.csv = CsvWriter({"alpha1", "alpha2", "gamma_star", "best_gamma", "best_bound", "argmin"});
  stamp(r, cfg);
  const auto p = make_problem(cfg);
  const Vec x0 = start_point(p, cfg);
  const auto b = BoundInputs::from_problem(p, x0, two_layer(cfg));
  const auto T = static_cast<std::int64_t>(cfg.claim1_T);
  if (T % round_length(b.cfg) != 0) throw ConfigError("claim1_T must be a multiple of k1*k2");
  const auto res = claim1_grid_check(b, T, {cfg.claim1_alphas, cfg.claim1_points_per_decade, cfg.claim1_decades});
  for (const auto& cell : res.cells) {
    const bool is_min = cell.alpha1 == res.argmin.alpha1 && cell.alpha2 == res.argmin.alpha2;
    r.csv.row({format_double(cell.alpha1), format_double(cell.alpha2), format_double(cell.gamma_star),
               format_double(cell.best_gamma), format_double(cell.best_bound), flag(is_min)});
  }
  const double top = *std::max_element(cfg.claim1_alphas.begin(), cfg.claim1_alphas.end());
  r.check(res.argmin.alpha1 == top && res.argmin.alpha2 == top, "claim1: argmin is not the largest alpha pair");
  r.summary.push_back("claim1: argmin alpha=(" + format_double(res.argmin.alpha1) + "," +
                      format_double(res.argmin.alpha2) + ") bound=" + format_double(res.argmin.best_bound));
  return r;
}

}  // namespace

CommandResult run_command(const std::string& name, const ExperimentConfig& cfg) {
  cfg.validate();
  if (name == "run") return cmd_run(cfg);
  if (name == "equiv") return cmd_equiv(cfg);
  if (name == "bound") return cmd_bound(cfg);
  if (name == "restart") return cmd_restart(cfg);
  if (name == "linrate") return cmd_linrate(cfg);
  if (name == "regflow") return cmd_regflow(cfg);
  if (name == "claim1") return cmd_claim1(cfg);
  throw ConfigError("unknown command '" + name + "'");
}

}  // namespace nestla
