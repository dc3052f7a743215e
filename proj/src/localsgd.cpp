// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#include "nestla/localsgd.hpp"

#include <cmath>
#include <stdexcept>

#include "nestla/csv.hpp"

namespace nestla {

void TwoLayerParams::validate() const {
  if (!(alpha1 > 0.0 && alpha1 <= 1.0) || !(alpha2 > 0.0 && alpha2 <= 1.0))
    throw std::invalid_argument("two-layer parameters: alphas must lie in (0, 1]");
  if (k1 < 1 || k2 < 1) throw std::invalid_argument("two-layer parameters: k1, k2 must be >= 1");
}

TwoLayerParams TwoLayerParams::from(const LayerStack& cfg) {
  if (cfg.layers() != 2) throw std::invalid_argument("expected a two-layer configuration");
  TwoLayerParams p{cfg.alphas[0], cfg.alphas[1], cfg.ks[0], cfg.ks[1]};
  p.validate();
  return p;
}

Eigen::Matrix3d sync_matrix(std::int64_t t, const TwoLayerParams& params) {
  const std::int64_t next = t + 1;
  const double a1 = params.alpha1;
  const double a2 = params.alpha2;
  Eigen::Matrix3d P;
  if (next % params.k1 != 0) {
    P.setIdentity();
  } else if (next % (static_cast<std::int64_t>(params.k1) * params.k2) != 0) {
    P << a1, a1, 0.0,
         1.0 - a1, 1.0 - a1, 0.0,
         0.0, 0.0, 1.0;
  } else {
    const double w0 = a1 * a2;
    const double w1 = (1.0 - a1) * a2;
    const double w2 = 1.0 - a2;
    P << w0, w0, w0,
         w1, w1, w1,
         w2, w2, w2;
  }
  return P;
}

Eigen::Vector3d aggregation_vector(const TwoLayerParams& params) {
  return {params.alpha1 * params.alpha2, (1.0 - params.alpha1) * params.alpha2, 1.0 - params.alpha2};
}

LocalSgdState LocalSgdState::start(const Vec& z0, const TwoLayerParams& params) {
  params.validate();
  LocalSgdState s;
  s.X.resize(z0.size(), 3);
  s.X.col(0) = z0;
  s.X.col(1) = z0;
  s.X.col(2) = z0;
  s.a = aggregation_vector(params);
  return s;
}

void local_sgd_step(LocalSgdState& s, const Vec& g, double gamma, const TwoLayerParams& params) {
  if (g.size() != s.X.rows()) throw std::invalid_argument("local_sgd_step: dimension mismatch");
  if (!(gamma > 0.0)) throw std::invalid_argument("local_sgd_step: step size must be positive");
  ParamMatrix moved = s.X;
  moved.col(0) -= gamma * g;
  s.X = moved * sync_matrix(s.t, params);
  ++s.t;
}

Vec theta(const LocalSgdState& s) { return s.X * s.a; }

std::string EquivalenceReport::csv_line() const {
  return std::to_string(T) + "," + format_double(max_abs_dev) + "," + std::to_string(first_divergence_t);
}

EquivalenceReport verify_equivalence(const DecomposedProblem& p, const LayerStack& cfg, const Vec& z0, std::int64_t T,
                                     std::uint64_t seed, EquivalenceMode mode) {
  cfg.validate();
  const TwoLayerParams params = TwoLayerParams::from(cfg);
  if (T < 1) throw std::invalid_argument("verify_equivalence: T must be >= 1");

  NoiseTape tape(GradientNoise(seed, p.dim(), p.noise_sigma()));
  MultilayerState nested = MultilayerState::start(z0, 2);
  LocalSgdState local = LocalSgdState::start(z0, params);

  EquivalenceReport rep;
  rep.T = T;
  bool failed = false;
  for (std::int64_t t = 0; t < T; ++t) {
    const Vec& eta = tape.at(t);
    const double gamma = cfg.lr(t);

    Vec g_nested = p.full_grad(nested.inner());
    Vec g_local = p.full_grad(local.X.col(0));
    if (p.noise_sigma() != 0.0) {
      g_nested += eta;
      g_local += eta;
    }
    mla_step(nested, cfg, g_nested);
    local_sgd_step(local, g_local, gamma, params);

    const double tol = mode == EquivalenceMode::exact ? 0.0 : 1e-10 * (1.0 + local.X.cwiseAbs().maxCoeff());
    for (int c = 0; c < 3; ++c) {
      const double dev = (nested.weights[static_cast<std::size_t>(c)] - local.X.col(c)).cwiseAbs().maxCoeff();
      if (!(dev <= rep.max_abs_dev)) rep.max_abs_dev = dev;  // also latches NaN
      if (!failed && !(dev <= tol)) {
        failed = true;
        rep.first_divergence_t = t + 1;
        rep.divergence_column = c;
        rep.tolerance = tol;
      }
    }
    if (!failed) rep.tolerance = tol;
  }
  rep.pass = !failed;
  return rep;
}

}  // namespace nestla
