// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#include "nestla/problems.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "nestla/rng.hpp"

namespace nestla {

DecomposedProblem::DecomposedProblem(std::vector<QuadraticComponent> components, double noise_sigma)
    : components_(std::move(components)), noise_sigma_(noise_sigma) {
  if (components_.empty()) throw std::invalid_argument("DecomposedProblem: need at least one component");
  if (!(noise_sigma_ >= 0.0) || !std::isfinite(noise_sigma_))
    throw std::invalid_argument("DecomposedProblem: noise sigma must be finite and nonnegative");
  dim_ = static_cast<int>(components_.front().center.size());
  if (dim_ < 1) throw std::invalid_argument("DecomposedProblem: dimension must be positive");

  mean_hessian_ = Mat::Zero(dim_, dim_);
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    if (c.center.size() != dim_ || c.hessian.rows() != dim_ || c.hessian.cols() != dim_)
      throw std::invalid_argument("DecomposedProblem: component " + std::to_string(i) + " has inconsistent shape");
    if (!c.hessian.allFinite() || !c.center.allFinite())
      throw std::invalid_argument("DecomposedProblem: component " + std::to_string(i) + " is not finite");
    if ((c.hessian - c.hessian.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + c.hessian.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("DecomposedProblem: component " + std::to_string(i) + " Hessian is not symmetric");
    const double lo = Eigen::SelfAdjointEigenSolver<Mat>(c.hessian, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (lo < -1e-12 * (1.0 + c.hessian.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("DecomposedProblem: component " + std::to_string(i) + " Hessian is not PSD");
    mean_hessian_ += c.hessian;
  }
  mean_hessian_ /= static_cast<double>(components_.size());

  const Eigen::SelfAdjointEigenSolver<Mat> eig(mean_hessian_, Eigen::EigenvaluesOnly);
  smoothness_ = eig.eigenvalues().maxCoeff();
  strong_convexity_ = eig.eigenvalues().minCoeff();

  if (strong_convexity_ > 1e-12 * std::max(1.0, smoothness_)) {
    Vec rhs = Vec::Zero(dim_);
    for (const auto& c : components_) rhs += c.hessian * c.center;
    rhs /= static_cast<double>(components_.size());
    minimizer_ = mean_hessian_.ldlt().solve(rhs);
    has_minimizer_ = true;
    min_loss_ = loss(minimizer_);
  }
}

void DecomposedProblem::check_index(int i) const {
  if (i < 0 || i >= num_components())
    throw std::out_of_range("component index " + std::to_string(i) + " out of range [0, " +
                            std::to_string(num_components()) + ")");
}

void DecomposedProblem::check_dim(const Vec& x) const {
  if (x.size() != dim_)
    throw std::invalid_argument("point has dimension " + std::to_string(x.size()) + ", expected " +
                                std::to_string(dim_));
}

double DecomposedProblem::component_loss(int i, const Vec& x) const {
  check_index(i);
  check_dim(x);
  const auto& c = components_[static_cast<std::size_t>(i)];
  const Vec e = x - c.center;
  return 0.5 * e.dot(c.hessian * e);
}

double DecomposedProblem::loss(const Vec& x) const {
  double s = 0.0;
  for (int i = 0; i < num_components(); ++i) s += component_loss(i, x);
  return s / num_components();
}

Vec DecomposedProblem::component_grad(int i, const Vec& x) const {
  check_index(i);
  check_dim(x);
  const auto& c = components_[static_cast<std::size_t>(i)];
  return c.hessian * (x - c.center);
}

Vec DecomposedProblem::full_grad(const Vec& x) const {
  check_dim(x);
  Vec g = Vec::Zero(dim_);
  Vec e(dim_);
  for (const auto& c : components_) {
    e = x - c.center;
    g.noalias() += c.hessian * e;
  }
  return g / static_cast<double>(num_components());
}

namespace {

void check_block(int m, int q, int block, std::span<const int> perm) {
  if (q < 1 || m % q != 0)
    throw std::invalid_argument("block length " + std::to_string(q) + " does not divide m = " + std::to_string(m));
  if (block < 0 || block >= m / q) throw std::out_of_range("block index " + std::to_string(block) + " out of range");
  if (static_cast<int>(perm.size()) != m) throw std::invalid_argument("permutation has wrong length");
  std::vector<bool> seen(static_cast<std::size_t>(m), false);
  for (int v : perm) {
    if (v < 0 || v >= m || seen[static_cast<std::size_t>(v)]) throw std::invalid_argument("not a permutation");
    seen[static_cast<std::size_t>(v)] = true;
  }
}

}  // namespace

double DecomposedProblem::block_average_loss(int q, int block, std::span<const int> perm, const Vec& x) const {
  check_block(num_components(), q, block, perm);
  double s = 0.0;
  for (int j = block * q; j < (block + 1) * q; ++j) s += component_loss(perm[static_cast<std::size_t>(j)], x);
  return s / q;
}

Vec DecomposedProblem::block_average_grad(int q, int block, std::span<const int> perm, const Vec& x) const {
  check_block(num_components(), q, block, perm);
  Vec g = Vec::Zero(dim_);
  for (int j = block * q; j < (block + 1) * q; ++j) g += component_grad(perm[static_cast<std::size_t>(j)], x);
  return g / static_cast<double>(q);
}

const Vec& DecomposedProblem::minimizer() const {
  if (!has_minimizer_) throw std::domain_error("problem is not strongly convex; minimizer is not unique");
  return minimizer_;
}

double DecomposedProblem::min_loss() const {
  if (!has_minimizer_) throw std::domain_error("problem is not strongly convex; f_inf not available");
  return min_loss_;
}

double DecomposedProblem::excess_loss(const Vec& y) const {
  check_dim(y);
  const Vec e = y - minimizer();
  return 0.5 * e.dot(mean_hessian_ * e);
}

DecomposedProblem make_quadratic_suite(int dim, int m, double noise_sigma, double conditioning, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("make_quadratic_suite: dim must be >= 1");
  if (m < 1) throw std::invalid_argument("make_quadratic_suite: m must be >= 1");
  if (!(conditioning >= 1.0) || !std::isfinite(conditioning))
    throw std::invalid_argument("make_quadratic_suite: conditioning must be >= 1");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("make_quadratic_suite: noise sigma must be >= 0");

  RandomStream rs(seed, streams::kProblem);
  std::vector<QuadraticComponent> comps;
  comps.reserve(static_cast<std::size_t>(m));
  const double log_span = std::log(conditioning);
  for (int i = 0; i < m; ++i) {
    QuadraticComponent c;
    if (conditioning == 1.0) {
      c.hessian = Mat::Identity(dim, dim);
    } else {
      Mat g(dim, dim);
      for (int r = 0; r < dim; ++r)
        for (int k = 0; k < dim; ++k) g(r, k) = rs.normal();
      const Eigen::HouseholderQR<Mat> qr(g);
      Mat q = qr.householderQ() * Mat::Identity(dim, dim);
      const Mat rmat = qr.matrixQR().triangularView<Eigen::Upper>();
      for (int k = 0; k < dim; ++k)
        if (rmat(k, k) < 0.0) q.col(k) = -q.col(k);
      Vec lambda(dim);
      for (int k = 0; k < dim; ++k) lambda[k] = std::exp(-log_span * (1.0 - rs.uniform()));
      const Mat a = q * lambda.asDiagonal() * q.transpose();
      c.hessian = 0.5 * (a + a.transpose());
    }
    c.center.resize(dim);
    for (int k = 0; k < dim; ++k) c.center[k] = rs.normal();
    comps.push_back(std::move(c));
  }
  return DecomposedProblem(std::move(comps), noise_sigma);
}

GradientNoise::GradientNoise(std::uint64_t seed, int dim, double sigma) : seed_(seed), dim_(dim), sigma_(sigma) {
  if (dim < 1) throw std::invalid_argument("GradientNoise: dim must be >= 1");
  if (!(sigma >= 0.0)) throw std::invalid_argument("GradientNoise: sigma must be >= 0");
}

Vec GradientNoise::draw(std::int64_t t) const {
  Vec eta = Vec::Zero(dim_);
  if (sigma_ == 0.0) return eta;
  const double scale = sigma_ / std::sqrt(static_cast<double>(dim_));
  const std::uint64_t pairs = static_cast<std::uint64_t>(dim_ + 1) / 2;
  const std::uint64_t base = static_cast<std::uint64_t>(t) * pairs;
  for (int j = 0; j < dim_; j += 2) {
    const auto z = gaussian_pair(seed_, base + static_cast<std::uint64_t>(j / 2), streams::kNoise);
    eta[j] = scale * z[0];
    if (j + 1 < dim_) eta[j + 1] = scale * z[1];
  }
  return eta;
}

Vec noisy_grad(const DecomposedProblem& p, const Vec& x, const GradientNoise& noise, std::int64_t t) {
  if (noise.dim() != p.dim()) throw std::invalid_argument("noisy_grad: noise dimension mismatch");
  Vec g = p.full_grad(x);
  if (noise.sigma() != 0.0) g += noise.draw(t);
  return g;
}

const Vec& NoiseTape::at(std::int64_t t) {
  if (t < 0) throw std::out_of_range("NoiseTape: negative index");
  while (static_cast<std::int64_t>(draws_.size()) <= t)
    draws_.push_back(source_.draw(static_cast<std::int64_t>(draws_.size())));
  return draws_[static_cast<std::size_t>(t)];
}

}  // namespace nestla
