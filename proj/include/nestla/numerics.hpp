// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>

namespace nestla {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Coordinate-wise compensated sum of equally sized vectors.
class CompensatedVectorSum {
 public:
  explicit CompensatedVectorSum(Eigen::Index dim);
  void add(const Vec& v);
  Vec value() const { return sum_ + comp_; }

 private:
  Vec sum_;
  Vec comp_;
};

/// Step used by the central-difference checks: 1e-5 * (1 + |x|).
double default_fd_step(const Vec& x);

/// Central-difference gradient of a scalar function.
Vec central_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h);
Vec central_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& x);

/// Ordinary least-squares slope of y against x.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

/// Slope of log(y) against log(x); all entries must be positive.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace nestla
