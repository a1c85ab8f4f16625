#pragma once

#include "fbmlab/core.hpp"

#include <cmath>
#include <vector>

namespace fbmlab {

/// Ordinary least-squares line y = intercept + slope * x.
struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double r_squared = 0.0;
  int n_points = 0;
  long long samples_per_point = 0;
  bool degenerate = false;  // fewer than two distinct x, or all y identical
};

ScalingFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Fit log(y) against log(x); points with y <= 0 make the fit degenerate.
ScalingFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

template <typename Derived>
double sample_mean(const Eigen::DenseBase<Derived>& v) {
  return v.derived().mean();
}

template <typename Derived>
double sample_variance(const Eigen::DenseBase<Derived>& v) {
  const auto n = v.size();
  if (n < 2) return 0.0;
  const double m = v.derived().mean();
  return (v.derived().array() - m).square().sum() / static_cast<double>(n - 1);
}

template <typename Derived>
double standard_error(const Eigen::DenseBase<Derived>& v) {
  return std::sqrt(sample_variance(v) / static_cast<double>(v.size()));
}

double median(std::vector<double> v);
double quantile(std::vector<double> v, double p);

}  // namespace fbmlab
