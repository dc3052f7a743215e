// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "nestla/numerics.hpp"
#include "nestla/optimizers.hpp"
#include "nestla/problems.hpp"

namespace nestla {

/// Two-layer Lookahead written as local SGD over a d x 3 parameter matrix
/// X = (x, y, z):  X_{t+1} = (X_t - gamma_t G_t) P_t,  G_t = (g_t, 0, 0).
struct TwoLayerParams {
  double alpha1 = 0.5;
  double alpha2 = 0.5;
  int k1 = 1;
  int k2 = 1;

  void validate() const;
  static TwoLayerParams from(const LayerStack& cfg);
};

using ParamMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// P_t: identity unless k1 | t+1; the (x,y) mixing block when k1 | t+1 but
/// not k1 k2 | t+1; the rank-one full mixing matrix when k1 k2 | t+1.
Eigen::Matrix3d sync_matrix(std::int64_t t, const TwoLayerParams& params);

/// a = (a1 a2, (1 - a1) a2, 1 - a2); P_t a = a for every t.
Eigen::Vector3d aggregation_vector(const TwoLayerParams& params);

struct LocalSgdState {
  ParamMatrix X;
  Eigen::Vector3d a;
  std::int64_t t = 0;

  static LocalSgdState start(const Vec& z0, const TwoLayerParams& params);
};

/// Applies X <- (X - gamma G) P_t with P_t = sync_matrix(t) and advances t.
void local_sgd_step(LocalSgdState& s, const Vec& g, double gamma, const TwoLayerParams& params);

/// theta = X a.
Vec theta(const LocalSgdState& s);

enum class EquivalenceMode {
  exact,       // pass iff every entry agrees bit-for-bit
  recomputed,  // pass iff deviation <= 1e-10 (1 + |X|_max)
};

struct EquivalenceReport {
  std::int64_t T = 0;
  double max_abs_dev = 0.0;
  std::int64_t first_divergence_t = -1;  // first t whose deviation breaks the tolerance
  int divergence_column = -1;            // 0 = x, 1 = y, 2 = z
  double tolerance = 0.0;
  bool pass = false;

  /// "T,max_abs_dev,first_divergence_t"
  std::string csv_line() const;
};

/// Runs the nested optimizer and the matrix formulation on one shared noise
/// tape and compares (x_t, y_t, z_t) against the columns of X_t for t <= T.
EquivalenceReport verify_equivalence(const DecomposedProblem& p, const LayerStack& cfg, const Vec& z0, std::int64_t T,
                                     std::uint64_t seed, EquivalenceMode mode = EquivalenceMode::recomputed);

}  // namespace nestla
