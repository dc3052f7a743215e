// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#include "nestla/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "nestla/csv.hpp"

namespace nestla {

int worker_threads() {
  if (const char* env = std::getenv("NESTED_LA_THREADS")) {
    try {
      const long long n = parse_int(env);
      if (n >= 1) return static_cast<int>(std::min<long long>(n, 1024));
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<std::vector<double>> map_seeds(std::span<const std::uint64_t> seeds,
                                           const std::function<std::vector<double>(std::uint64_t)>& fn) {
  std::vector<std::vector<double>> out(seeds.size());
  const int workers = std::min<int>(worker_threads(), static_cast<int>(seeds.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) out[i] = fn(seeds[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < seeds.size(); i = next++) {
        try {
          out[i] = fn(seeds[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

MeanWithError mean_and_error(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_and_error: no values");
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); }))
    return {values.front(), 0.0};
  const double n = static_cast<double>(values.size());
  CompensatedSum s;
  for (double v : values) s.add(v);
  const double mean = s.value() / n;
  CompensatedSum ss;
  for (double v : values) ss.add((v - mean) * (v - mean));
  return {mean, std::sqrt(ss.value() / (n - 1.0) / n)};
}

std::vector<double> grad_norm_trajectory(const DecomposedProblem& p, const LayerStack& cfg, const Vec& x0,
                                         std::int64_t T, std::uint64_t seed) {
  std::vector<double> norms;
  norms.reserve(static_cast<std::size_t>(T));
  RunOptions opt;
  opt.record_loss = false;
  opt.keep_records = false;
  opt.observer = [&](const IterationRecord& r) { norms.push_back(r.grad_norm_sq); };
  run(p, cfg, x0, T, seed, opt);
  return norms;
}

MonteCarloTrajectory monte_carlo(const DecomposedProblem& p, const LayerStack& cfg, const Vec& x0, std::int64_t T,
                                 std::span<const std::uint64_t> seeds) {
  if (seeds.size() < 2) throw std::invalid_argument("monte_carlo: needs at least 2 seeds");
  MonteCarloTrajectory mc;
  mc.seeds.assign(seeds.begin(), seeds.end());
  std::sort(mc.seeds.begin(), mc.seeds.end());
  if (std::adjacent_find(mc.seeds.begin(), mc.seeds.end()) != mc.seeds.end())
    throw std::invalid_argument("monte_carlo: duplicate seeds");

  const auto runs = map_seeds(mc.seeds, [&](std::uint64_t s) { return grad_norm_trajectory(p, cfg, x0, T, s); });

  const std::size_t len = static_cast<std::size_t>(T);
  mc.mean.resize(len);
  mc.std_error.resize(len);
  std::vector<double> column(runs.size());
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t s = 0; s < runs.size(); ++s) column[s] = runs[s][t];
    const auto me = mean_and_error(column);
    mc.mean[t] = me.mean;
    mc.std_error[t] = me.std_error;
  }
  for (const auto& r : runs) {
    CompensatedSum s;
    for (double v : r) s.add(v);
    mc.time_average.push_back(s.value() / static_cast<double>(T));
  }
  return mc;
}

}  // namespace nestla
