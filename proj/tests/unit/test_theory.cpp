// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "nestla/rng.hpp"
#include "nestla/theory.hpp"
#include "oracles.hpp"

using namespace nestla;

namespace {

BoundInputs inputs(double L, double sigma2, double gap, double a1, double a2, int k1, int k2) {
  BoundInputs b;
  b.L = L;
  b.sigma2 = sigma2;
  b.gap = gap;
  b.cfg = {a1, a2, k1, k2};
  return b;
}

BoundInputs random_inputs(RandomStream& r) {
  return inputs(0.1 + 10 * r.uniform(), 4 * r.uniform(), 5 * r.uniform(), r.uniform(), r.uniform(),
                1 + static_cast<int>(r.below(8)), 1 + static_cast<int>(r.below(8)));
}

}  // namespace

TEST_SUITE("theory") {
  TEST_CASE("gamma* with unit alphas is 1/L") {
    CHECK(gamma_star(inputs(4.0, 1.0, 1.0, 1.0, 1.0, 3, 7)) == 0.25);
  }

  TEST_CASE("gamma* matches bisection and is a root") {
    const auto b = inputs(1.0, 1.0, 1.0, 0.5, 0.5, 5, 5);
    auto g = [&](double x) { return oracle::feasibility(1.0, 0.5, 0.5, 5, 5, x); };
    const double A = 0.25;
    CHECK(std::abs(gamma_star(b) - oracle::bisect(g, 0.0, 1.0 / A)) <= 1e-12 * gamma_star(b));

    RandomStream r(1, streams::kSweep);
    for (int rep = 0; rep < 500; ++rep) {
      const auto bi = random_inputs(r);
      const double gs = gamma_star(bi);
      auto gi = [&](double x) {
        return oracle::feasibility(bi.L, bi.cfg.alpha1, bi.cfg.alpha2, bi.cfg.k1, bi.cfg.k2, x);
      };
      CHECK(std::abs(feasibility(bi, gs)) <= 1e-12);
      CHECK(feasibility(bi, gs / 2) > 0.0);
      CHECK(std::abs(gs - oracle::bisect(gi, 0.0, 1.0 / feasibility_linear_coef(bi))) <= 1e-12 * gs);
      double prev = feasibility(bi, 0.0);
      CHECK(prev == 1.0);
      for (int i = 1; i <= 50; ++i) {
        const double v = feasibility(bi, gs * i / 50.0);
        CHECK(v < prev);
        prev = v;
      }
    }
  }

  TEST_CASE("bound inputs are validated") {
    CHECK_THROWS_AS(gamma_star(inputs(0.0, 1, 1, 0.5, 0.5, 1, 1)), std::invalid_argument);
    CHECK_THROWS_AS(gamma_star(inputs(1.0, -1, 1, 0.5, 0.5, 1, 1)), std::invalid_argument);
    CHECK_THROWS_AS(gamma_star(inputs(1.0, 1, NAN, 0.5, 0.5, 1, 1)), std::invalid_argument);
    CHECK_THROWS_AS(gamma_star(inputs(1.0, 1, 1, 0.0, 0.5, 1, 1)), std::invalid_argument);
  }

  TEST_CASE("bound special cases") {
    const auto sgd = inputs(2.0, 0.5, 3.0, 1.0, 1.0, 2, 5);
    const double g = 0.3;
    CHECK(theorem2_bound(sgd, g, 1000) == doctest::Approx(2 * 3.0 / (g * 1000) + g * 2.0 * 0.5).epsilon(1e-15));

    const auto quiet = inputs(2.0, 0.0, 3.0, 0.5, 0.8, 2, 5);
    const double gq = gamma_star(quiet) / 3;
    CHECK(theorem2_bound(quiet, gq, 1000) == doctest::Approx(2 * 3.0 / (gq * 0.4 * 1000)).epsilon(1e-15));
    CHECK(theorem2_bound(quiet, gq, 10000) == doctest::Approx(theorem2_bound(quiet, gq, 1000) / 10).epsilon(1e-14));

    // Third term uses the 4/3 coefficient.
    const auto b = inputs(1.5, 2.0, 1.0, 0.5, 0.6, 3, 2);
    const double gb = 0.5 * gamma_star(b);
    const double drift = 0.25 * 0.36 + 2 * 0.16 + 4.0 / 3.0 * 0.25 * 0.16 * 4;
    const double expect = 2.0 / (gb * 0.3 * 600) + gb * 0.3 * 1.5 * 2.0 + 2 * gb * gb * 2.25 * 2.0 * 3 * drift;
    CHECK(theorem2_bound(b, gb, 600) == doctest::Approx(expect).epsilon(1e-14));
  }

  TEST_CASE("bound preconditions") {
    const auto b = inputs(1.0, 1.0, 1.0, 0.5, 0.5, 2, 5);
    const double gs = gamma_star(b);
    CHECK_NOTHROW(theorem2_bound(b, gs, 100));
    CHECK_THROWS_AS(theorem2_bound(b, gs * 1.001, 100), std::domain_error);
    CHECK_THROWS_AS(theorem2_bound(b, gs / 2, 105), std::invalid_argument);
    CHECK_THROWS_AS(theorem2_bound(b, 0.0, 100), std::invalid_argument);
  }

  TEST_CASE("bound is convex in gamma and its minimum matches the two-term stationary point") {
    RandomStream r(2, streams::kSweep);
    for (int rep = 0; rep < 100; ++rep) {
      auto b = random_inputs(r);
      b.sigma2 += 0.1;
      const double gs = gamma_star(b);
      const std::int64_t T = 1000 * b.cfg.k1 * b.cfg.k2;
      const int N = 400;
      for (int i = 1; i < N - 1; ++i) {
        const double h = gs / N;
        const double second = theorem2_bound(b, (i - 1) * h + h, T) - 2 * theorem2_bound(b, i * h + h, T) +
                              theorem2_bound(b, (i + 1) * h + h, T);
        CHECK(second >= -1e-12 * theorem2_bound(b, i * h + h, T));
      }
    }
    // Stationary point of 2 gap/(g s T) + g s L sigma^2 is g = sqrt(2 gap / (T L sigma^2)) / s.
    const auto b = inputs(1.0, 1.0, 0.5, 0.9, 0.9, 2, 2);
    const std::int64_t T = 400000000;
    const double g2 = std::sqrt(2 * 0.5 / (T * 1.0 * 1.0)) / 0.81;
    REQUIRE(g2 <= gamma_star(b));
    const double third = theorem2_bound(b, g2, T) - 2 * 0.5 / (g2 * 0.81 * T) - g2 * 0.81;
    REQUIRE(third <= 0.01 * theorem2_bound(b, g2, T));
    double best = INFINITY, arg = 0;
    for (int i = 1; i <= 20000; ++i) {
      const double g = gamma_star(b) * std::pow(10.0, -6.0 * (1.0 - i / 20000.0));
      const double v = theorem2_bound(b, g, T);
      if (v < best) {
        best = v;
        arg = g;
      }
    }
    CHECK(std::abs(arg - g2) <= 0.02 * g2);
  }

  TEST_CASE("horizon-tuned step size") {
    const auto unit = inputs(1.0, 1.0, 0.5, 1.0, 1.0, 1, 1);
    CHECK(corollary2_lr(unit, 100).gamma == doctest::Approx(0.1).epsilon(1e-15));

    const auto b = inputs(2.0, 0.7, 1.3, 0.6, 0.8, 2, 5);
    const auto s1 = corollary2_lr(b, 10000);
    const auto s2 = corollary2_lr(b, 20000);
    CHECK(s2.gamma == doctest::Approx(s1.gamma / std::sqrt(2.0)).epsilon(1e-14));

    const double gs = gamma_star(b);
    const double thr = s1.threshold;
    // gamma at the threshold, evaluated in closed form at real-valued T
    const double g_thr = std::sqrt(2 * 1.3 / (thr * 2.0)) / (0.48 * std::sqrt(0.7));
    CHECK(std::abs(g_thr - gs) <= 1e-12 * gs);

    const auto T = static_cast<std::int64_t>(std::ceil(thr / 10.0)) * 10;
    const auto st = corollary2_lr(b, T);
    CHECK(st.feasible);
    CHECK(st.gamma <= gs);
    CHECK_FALSE(corollary2_lr(b, 10).feasible);

    CHECK_THROWS_AS(corollary2_lr(inputs(1, 0, 1, 0.5, 0.5, 1, 1), 100), std::domain_error);
  }

  TEST_CASE("bound at the horizon-tuned step = leading term + positive O(1/T) remainder") {
    const auto b = inputs(2.0, 0.7, 1.3, 0.6, 0.8, 2, 5);
    const double thr = corollary2_lr(b, 10).threshold;
    std::vector<double> scaled;
    for (std::int64_t T = static_cast<std::int64_t>(std::ceil(thr / 10.0)) * 10; T < 1000000000; T *= 10) {
      const auto s = corollary2_lr(b, T);
      REQUIRE(s.feasible);
      CHECK(s.leading_term == doctest::Approx(2 * std::sqrt(0.7) * std::sqrt(2 * 2.0 * 1.3) / std::sqrt(T)));
      const double rem = theorem2_bound(b, s.gamma, T) - s.leading_term;
      CHECK(rem > 0.0);
      scaled.push_back(rem * static_cast<double>(T));
    }
    // T * remainder is the constant 4 L k1 gap C / (a1 a2)^2.
    const double C = 0.16 * 0.64 + 2 * 0.04 + 4.0 / 3.0 * 0.36 * 0.04 * 25;
    const double expect = 4 * 2.0 * 2 * 1.3 * C / (0.48 * 0.48);
    for (double v : scaled) CHECK(v == doctest::Approx(expect).epsilon(1e-6));
  }

  TEST_CASE("alpha grid argmin") {
    const auto b = inputs(1.0, 1.0, 2.0, 0.5, 0.5, 2, 5);
    const auto res = claim1_grid_check(b, 10000000000LL);
    CHECK(res.cells.size() == 16);
    CHECK(res.argmin.alpha1 == 1.0);
    CHECK(res.argmin.alpha2 == 1.0);
    // The unconstrained inner minimum for alpha = (1, 1) is 2 sigma sqrt(2 L gap / T).
    CHECK(res.argmin.best_bound == doctest::Approx(2 * std::sqrt(2 * 2.0 / 1e10)).epsilon(1e-9));
    for (const auto& c : res.cells) CHECK(c.best_gamma <= c.gamma_star);

    const auto quiet = inputs(1.0, 0.0, 2.0, 0.5, 0.5, 2, 5);
    const auto rq = claim1_grid_check(quiet, 10000000000LL);
    CHECK(rq.argmin.alpha1 == 1.0);
    CHECK(rq.argmin.alpha2 == 1.0);
    for (const auto& c : rq.cells) {
      // With sigma = 0 the bound decreases in gamma, so the minimum is at gamma*,
      // and a1 a2 gamma* <= 1/L with equality only at (1, 1).
      CHECK(c.best_gamma == doctest::Approx(c.gamma_star).epsilon(1e-12));
      const double progress = c.alpha1 * c.alpha2 * c.gamma_star;
      if (c.alpha1 == 1.0 && c.alpha2 == 1.0)
        CHECK(progress == 1.0);
      else
        CHECK(progress < 1.0);
    }
    CHECK_THROWS_AS(claim1_grid_check(b, 10000000001LL), std::invalid_argument);
  }

  TEST_CASE("weighted average W_R") {
    const std::vector<double> gam{0.1, 0.1, 0.1, 0.1, 0.05, 0.05};
    const std::vector<double> norms{4, 2, 3, 1, 6, 2};
    const auto w = theorem1_weighted_average(gam, norms, 2);
    REQUIRE(w.size() == 3);
    CHECK(w[0] == doctest::Approx(3.0));
    CHECK(w[1] == doctest::Approx(2.5));
    CHECK(w[2] == doctest::Approx((0.1 * 6 + 0.1 * 4 + 0.05 * 8) / (2 * 0.25)));
    const std::vector<double> broken{0.1, 0.2, 0.1, 0.1};
    CHECK_THROWS_AS(theorem1_weighted_average(broken, std::vector<double>(4, 1.0), 2), std::invalid_argument);

    // Constant schedule: W_R is the plain average.
    const auto p = make_quadratic_suite(4, 2, 1.0, 10.0, 3);
    const LayerStack cfg{{0.5, 0.5}, {2, 2}, LrSchedule::constant(0.1)};
    const auto rep = run(p, cfg, Vec::Ones(4), 400, 1);
    const auto wc = theorem1_weighted_average(rep, 4);
    double sum = 0;
    for (const auto& it : rep.iterates) sum += it.grad_norm_sq;
    CHECK(wc.back() == doctest::Approx(sum / 400).epsilon(1e-12));
  }

  TEST_CASE("weighted average decreases on a deterministic quadratic") {
    const auto p = make_quadratic_suite(4, 2, 0.0, 10.0, 5);
    const Vec x0 = p.minimizer() + Vec::Constant(4, 2.0);
    const TwoLayerParams tp{0.6, 0.8, 2, 5};
    const double gs = gamma_star(BoundInputs::from_problem(p, x0, tp));
    const LayerStack cfg{{0.6, 0.8}, {2, 5}, LrSchedule::per_round(10, [gs](std::int64_t r) {
                           return std::min(gs, 0.5 / std::sqrt(r + 1.0));
                         })};
    const auto w = theorem1_weighted_average(run(p, cfg, x0, 2000, 1), 10);
    for (std::size_t r = 5; r + 1 < w.size(); ++r) CHECK(w[r + 1] < w[r]);
  }

  TEST_CASE("restart schedule") {
    const auto s0 = restart_schedule(0.3, 0);
    REQUIRE(s0.runs.size() == 1);
    CHECK(s0.runs[0].rounds == 1);
    CHECK(s0.runs[0].gamma == 0.3);
    const auto s3 = restart_schedule(0.3, 3);
    const std::vector<std::int64_t> rounds{1, 4, 16, 64};
    const std::vector<double> steps{0.3, 0.15, 0.075, 0.0375};
    for (int m = 0; m < 4; ++m) {
      CHECK(s3.runs[m].rounds == rounds[m]);
      CHECK(s3.runs[m].gamma == steps[m]);
    }
    for (int M = 0; M < 10; ++M) CHECK(restart_schedule(1.0, M).total_rounds() == ((1LL << (2 * M + 2)) - 1) / 3);
    CHECK_THROWS_AS(restart_schedule(1.0, -1), std::invalid_argument);
  }

  TEST_CASE("linear-rate constants") {
    CHECK(linear_rate_constant(1.0, 3, 0.5) == 0.125);
    CHECK(linear_rate_constant(0.5, 2, 0.5) == 0.625);
    CHECK(linear_rate_constant(0.5, 2, 0.5) == oracle::simulated_rate(0.5, 2, 0.5));
    CHECK(linear_rate_constant(0.9, 3, 0.7) < linear_rate_constant(0.1, 3, 0.7));
    RandomStream r(3);
    for (int rep = 0; rep < 200; ++rep) {
      const double a = r.uniform(), c = 0.999 * r.uniform();
      const int k = 1 + static_cast<int>(r.below(10));
      const double v = linear_rate_constant(a, k, c);
      CHECK(v > 0.0);
      CHECK(v < 1.0);
      CHECK(v == doctest::Approx(oracle::simulated_rate(a, k, c)).epsilon(1e-14));
    }
    const std::vector<double> al{0.5, 0.7};
    const std::vector<int> ks{2, 3};
    const double inner = 1 - 0.5 * (1 - 0.8 * 0.8);
    CHECK(nested_linear_rate_constant(al, ks, 0.8) == doctest::Approx(1 - 0.7 * (1 - std::pow(inner, 3))));
    CHECK(gd_contraction(0.1, 1.0, 10.0) == doctest::Approx(0.9));
    CHECK(gd_contraction(0.19, 1.0, 10.0) == doctest::Approx(0.9));
    CHECK_THROWS_AS(linear_rate_constant(0.0, 1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(linear_rate_constant(0.5, 0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(linear_rate_constant(0.5, 1, 1.0), std::invalid_argument);
  }

  TEST_CASE("measured contraction") {
    const auto iso = make_quadratic_suite(3, 2, 0.0, 1.0, 4);
    const Vec x0 = iso.minimizer() + Vec::Constant(3, 1.0);
    const auto ri = measure_contraction(iso, LayerStack{{0.3}, {4}, LrSchedule::constant(1.0)}, x0, 5);
    CHECK(std::abs(ri.distance_factor - 0.7) <= 1e-12);
    CHECK(std::abs(ri.max_distance_ratio - 0.7) <= 1e-12);

    const auto p = make_quadratic_suite(5, 3, 0.0, 20.0, 6);
    const Vec y0 = p.minimizer() + Vec::Constant(5, 1.0);
    const double gamma = 1.0 / p.smoothness_constant();
    const double c = 1.0 - gamma * p.strong_convexity();
    const auto r1 = measure_contraction(p, LayerStack{{1.0}, {3}, LrSchedule::constant(gamma)}, y0, 20);
    CHECK(r1.max_distance_ratio <= std::pow(c, 3) + 1e-9);
    const auto r2 = measure_contraction(p, LayerStack{{0.5, 0.6}, {2, 3}, LrSchedule::constant(gamma)}, y0, 20);
    const double nested = 1 - 0.6 * (1 - std::pow(1 - 0.5 * (1 - c * c), 3));
    CHECK(r2.predicted_distance == doctest::Approx(nested).epsilon(1e-14));
    CHECK(r2.max_distance_ratio <= nested + 1e-9);
    CHECK(r2.max_value_ratio <= r2.predicted_value + 1e-9);
    CHECK(r2.rounds_measured > 0);

    CHECK_THROWS_AS(measure_contraction(make_quadratic_suite(3, 2, 0.1, 2.0, 1), LayerStack{{0.5}, {2}}, Vec::Zero(3), 3),
                    std::invalid_argument);
    const DecomposedProblem flat({{Vec::Unit(2, 0).asDiagonal(), Vec::Zero(2)}}, 0.0);
    CHECK_THROWS_AS(measure_contraction(flat, LayerStack{{0.5}, {2}}, Vec::Ones(2), 3), std::invalid_argument);
    CHECK_THROWS_AS(measure_contraction(p, LayerStack{{0.5}, {2}, LrSchedule::constant(2.5 / p.smoothness_constant())},
                                        y0, 3),
                    std::invalid_argument);
  }
}
