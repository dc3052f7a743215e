// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <deque>
#include <vector>

#include "nestla/numerics.hpp"

namespace nestla {

/// f_i(x) = 1/2 (x - c)^T A (x - c) with A symmetric positive semidefinite.
struct QuadraticComponent {
  Mat hessian;
  Vec center;
};

/// Finite-sum objective f = (1/m) sum_i f_i over quadratic components, plus
/// the standard deviation budget of the additive gradient noise.
///
/// Immutable after construction; all queries are const and thread-safe.
class DecomposedProblem {
 public:
  DecomposedProblem(std::vector<QuadraticComponent> components, double noise_sigma);

  int dim() const { return dim_; }
  int num_components() const { return static_cast<int>(components_.size()); }
  double noise_sigma() const { return noise_sigma_; }
  const std::vector<QuadraticComponent>& components() const { return components_; }

  double component_loss(int i, const Vec& x) const;
  double loss(const Vec& x) const;

  /// A_i (x - c_i), no noise.
  Vec component_grad(int i, const Vec& x) const;
  /// (1/m) sum_i component_grad(i, x), summed in index order.
  Vec full_grad(const Vec& x) const;

  /// Mean of the q permuted component losses/gradients of block `block`:
  /// f^{(q)}_block(x) = (1/q) sum_{j = block*q}^{(block+1)q - 1} f_{perm[j]}(x).
  double block_average_loss(int q, int block, std::span<const int> perm, const Vec& x) const;
  Vec block_average_grad(int q, int block, std::span<const int> perm, const Vec& x) const;

  /// Hessian of f, (1/m) sum_i A_i.
  const Mat& mean_hessian() const { return mean_hessian_; }
  /// lambda_max of the mean Hessian.
  double smoothness_constant() const { return smoothness_; }
  /// lambda_min of the mean Hessian (0 up to round-off when only convex).
  double strong_convexity() const { return strong_convexity_; }
  bool strongly_convex() const { return has_minimizer_; }

  /// Unique minimizer x*; throws std::domain_error if f is not strongly convex.
  const Vec& minimizer() const;
  /// f(x*).
  double min_loss() const;
  /// f(y) - f(x*) evaluated as 1/2 (y - x*)^T H (y - x*), free of cancellation.
  double excess_loss(const Vec& y) const;

 private:
  void check_index(int i) const;
  void check_dim(const Vec& x) const;

  std::vector<QuadraticComponent> components_;
  double noise_sigma_;
  int dim_;
  Mat mean_hessian_;
  double smoothness_ = 0.0;
  double strong_convexity_ = 0.0;
  bool has_minimizer_ = false;
  Vec minimizer_;
  double min_loss_ = 0.0;
};

/// Random quadratic suite: each A_i = Q_i diag(lambda) Q_i^T with Q_i Haar
/// orthogonal and lambda log-uniform on [1/conditioning, 1]; c_i ~ N(0, I).
/// conditioning == 1 yields A_i = I exactly.
DecomposedProblem make_quadratic_suite(int dim, int m, double noise_sigma, double conditioning, std::uint64_t seed);

/// Additive isotropic Gaussian gradient noise. Coordinates are i.i.d.
/// N(0, sigma^2 / d), so E|eta|^2 = sigma^2. Draw t is a pure function of
/// (seed, t), which makes the stream a random-access noise tape.
class GradientNoise {
 public:
  GradientNoise(std::uint64_t seed, int dim, double sigma);

  Vec draw(std::int64_t t) const;
  std::uint64_t seed() const { return seed_; }
  int dim() const { return dim_; }
  double sigma() const { return sigma_; }

 private:
  std::uint64_t seed_;
  int dim_;
  double sigma_;
};

/// g(x, xi_t) = full_grad(x) + eta_t.
Vec noisy_grad(const DecomposedProblem& p, const Vec& x, const GradientNoise& noise, std::int64_t t);

/// Recorded sequence of noise draws indexed by iteration; shared between
/// simulations that must see the same gradient stream.
class NoiseTape {
 public:
  explicit NoiseTape(GradientNoise source) : source_(std::move(source)) {}

  const Vec& at(std::int64_t t);
  std::size_t recorded() const { return draws_.size(); }

 private:
  GradientNoise source_;
  std::deque<Vec> draws_;  // stable references
};

// Key-value text format, replayable bit-exactly:
//   # nestla-problem v1
//   dim = <d>
//   m = <m>
//   sigma = <sigma>
//   A.<i> = <d*d values, row-major>
//   c.<i> = <d values>
void write_problem(std::ostream& out, const DecomposedProblem& p);
DecomposedProblem read_problem(std::istream& in);
void save_problem(const std::string& path, const DecomposedProblem& p);
DecomposedProblem load_problem(const std::string& path);

}  // namespace nestla
