#include "fbmlab/stats.hpp"

#include <algorithm>

namespace fbmlab {

ScalingFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DomainError("fit_line: x and y sizes differ");
  ScalingFit fit;
  fit.n_points = static_cast<int>(x.size());
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) {
    fit.degenerate = true;
    return fit;
  }
  const Eigen::Map<const Vec> xv(x.data(), x.size());
  const Eigen::Map<const Vec> yv(y.data(), y.size());
  const double mx = xv.mean(), my = yv.mean();
  const double sxx = (xv.array() - mx).square().sum();
  const double syy = (yv.array() - my).square().sum();
  const double sxy = ((xv.array() - mx) * (yv.array() - my)).sum();
  if (sxx <= 0.0) {
    fit.degenerate = true;
    fit.intercept = my;
    return fit;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double sse = ((yv.array() - fit.intercept - fit.slope * xv.array()).square()).sum();
  if (syy > 0.0) {
    fit.r_squared = std::clamp(1.0 - sse / syy, 0.0, 1.0);
  } else {
    fit.degenerate = true;
    fit.r_squared = 1.0;
  }
  fit.stderr_slope = x.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
  return fit;
}

ScalingFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      ScalingFit f;
      f.n_points = static_cast<int>(x.size());
      f.degenerate = true;
      return f;
    }
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_line(lx, ly);
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw DomainError("quantile: empty sample");
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

}  // namespace fbmlab
