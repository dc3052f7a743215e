// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#include "nestla/numerics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace nestla {

void CompensatedSum::add(double v) {
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v)) {
    comp_ += (sum_ - t) + v;
  } else {
    comp_ += (v - t) + sum_;
  }
  sum_ = t;
}

CompensatedVectorSum::CompensatedVectorSum(Eigen::Index dim) : sum_(Vec::Zero(dim)), comp_(Vec::Zero(dim)) {}

void CompensatedVectorSum::add(const Vec& v) {
  if (v.size() != sum_.size()) throw std::invalid_argument("CompensatedVectorSum: dimension mismatch");
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double s = sum_[i];
    const double t = s + v[i];
    if (std::abs(s) >= std::abs(v[i])) {
      comp_[i] += (s - t) + v[i];
    } else {
      comp_[i] += (v[i] - t) + s;
    }
    sum_[i] = t;
  }
}

double default_fd_step(const Vec& x) { return 1e-5 * (1.0 + x.norm()); }

Vec central_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  Vec probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

Vec central_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& x) {
  return central_difference_gradient(f, x, default_fd_step(x));
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least_squares_slope: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("least_squares_slope: degenerate abscissae");
  return sxy / sxx;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw std::invalid_argument("loglog_slope: non-positive abscissa");
    lx[i] = std::log(x[i]);
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0)) throw std::invalid_argument("loglog_slope: non-positive ordinate");
    ly[i] = std::log(y[i]);
  }
  return least_squares_slope(lx, ly);
}

}  // namespace nestla
