#include "fbmlab/fbm.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <ostream>
#include <tuple>

namespace fbmlab {

double fbm_covariance(double hurst, double s, double t) {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw DomainError("fbm_covariance: closed form requires H in (0,1)");
  if (s < 0.0 || t < 0.0) throw DomainError("fbm_covariance: times must be nonnegative");
  const double h2 = 2.0 * hurst;
  return 0.5 * (std::pow(t, h2) + std::pow(s, h2) - std::pow(std::abs(t - s), h2));
}

void validate_hurst(double hurst) {
  if (!(hurst > 0.0 && hurst < 2.0) || hurst == 1.0)
    throw DomainError("Hurst parameter must lie in (0,2) \\ {1}");
}

namespace {

Mat closed_form_covariance(double hurst, const TimeGrid& grid) {
  const int n = grid.n_steps;
  Mat c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      c(i, j) = fbm_covariance(hurst, grid.node(i + 1), grid.node(j + 1));
      c(j, i) = c(i, j);
    }
  return c;
}

// Y_i = sum_{j=1}^{i} dt/2 (X_{j-1} + X_j) with X_0 = 0, written as Y = T X.
Mat trapezoid_operator(const TimeGrid& grid) {
  const int n = grid.n_steps;
  const double dt = grid.dt();
  Mat T = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) T(i, j) = dt;
    T(i, i) = 0.5 * dt;
  }
  return T;
}

}  // namespace

Mat fbm_grid_covariance(double hurst, const TimeGrid& grid) {
  validate_hurst(hurst);
  if (hurst < 1.0) return closed_form_covariance(hurst, grid);
  const Mat T = trapezoid_operator(grid);
  return T * closed_form_covariance(hurst - 1.0, grid) * T.transpose();
}

std::shared_ptr<const FbmFactor> fbm_factor(double hurst, const TimeGrid& grid) {
  validate_hurst(hurst);
  static std::mutex mutex;
  static std::map<std::tuple<double, int, double>, std::shared_ptr<const FbmFactor>> cache;
  const auto key = std::make_tuple(hurst, grid.n_steps, grid.horizon);
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto factor = std::make_shared<FbmFactor>();
  factor->hurst = hurst;
  factor->grid = grid;
  if (hurst < 1.0) {
    Eigen::LLT<Mat> llt(closed_form_covariance(hurst, grid));
    if (llt.info() != Eigen::Success)
      throw NumericalError("fbm_factor: covariance factorization failed; grid too fine");
    factor->lower = llt.matrixL();
  } else {
    // Trapezoid map is lower triangular, so T L stays a valid Cholesky-type factor.
    const auto inner = fbm_factor(hurst - 1.0, grid);
    factor->lower = trapezoid_operator(grid).triangularView<Eigen::Lower>() * inner->lower;
  }
  std::lock_guard lock(mutex);
  cache.emplace(key, factor);
  return factor;
}

FbmPath fbm_from_driver(std::shared_ptr<const FbmFactor> factor, Mat driver) {
  const int n = factor->grid.n_steps;
  if (driver.rows() != n) throw DomainError("fbm_from_driver: driver must have n_steps rows");
  FbmPath path;
  path.hurst = factor->hurst;
  path.dim = static_cast<int>(driver.cols());
  path.grid = factor->grid;
  path.values = Mat::Zero(n + 1, path.dim);
  path.values.bottomRows(n).noalias() = factor->lower.triangularView<Eigen::Lower>() * driver;
  path.driver = std::move(driver);
  path.factor = std::move(factor);
  return path;
}

FbmPath sample_fbm(double hurst, const TimeGrid& grid, int dim, std::uint64_t seed) {
  validate_hurst(hurst);
  if (dim < 1) throw DomainError("sample_fbm: dimension must be positive");
  Rng rng(seed, "fbm-driver");
  return fbm_from_driver(fbm_factor(hurst, grid), rng.gaussian_matrix(grid.n_steps, dim));
}

double conditional_variance(const FbmFactor& factor, int s_index, int t_index) {
  const int n = factor.grid.n_steps;
  if (s_index < 0 || t_index > n || s_index > t_index)
    throw DomainError("conditional_variance: need 0 <= s_index <= t_index <= n");
  if (t_index == s_index || t_index == 0) return 0.0;
  // Row t of L (node t is row t-1); past drivers are columns 0..s-1.
  return factor.lower.row(t_index - 1).segment(s_index, t_index - s_index).squaredNorm();
}

ConditionalLaw conditional_law(const FbmPath& path, int s_index, int t_index) {
  ConditionalLaw law;
  law.s_index = s_index;
  law.t_index = t_index;
  law.variance = conditional_variance(*path.factor, s_index, t_index);
  if (t_index == 0 || s_index == t_index) {
    law.mean = path.values.row(t_index).transpose();
    return law;
  }
  // The factor is triangular, so the past values pin down the first s drivers.
  law.mean = (path.factor->lower.row(t_index - 1).head(s_index) * path.driver.topRows(s_index))
                 .transpose();
  return law;
}

std::vector<FbmPath> branch_futures(const FbmPath& path, int s_index, int branches,
                                    std::uint64_t seed) {
  const int n = path.grid.n_steps;
  if (s_index < 0 || s_index >= n) throw DomainError("branch_futures: need 0 <= s_index < n");
  if (branches < 1) throw DomainError("branch_futures: branch count must be positive");
  std::vector<FbmPath> out;
  out.reserve(branches);
  for (int b = 0; b < branches; ++b) {
    Rng rng(seed, "fbm-branch", static_cast<std::uint64_t>(b));
    Mat driver = path.driver;
    driver.bottomRows(n - s_index) = rng.gaussian_matrix(n - s_index, path.dim);
    FbmPath branch = fbm_from_driver(path.factor, std::move(driver));
    // exact agreement on the shared past, independent of summation order
    branch.values.topRows(s_index + 1) = path.values.topRows(s_index + 1);
    out.push_back(std::move(branch));
  }
  return out;
}

ScalingMomentReport scaling_moment_check(double hurst, double lambda, int samples,
                                         const TimeGrid& grid, std::uint64_t seed) {
  validate_hurst(hurst);
  if (!(lambda > 0.0)) throw DomainError("scaling_moment_check: lambda must be positive");
  if (samples < 2) throw DomainError("scaling_moment_check: need at least two samples");
  ScalingMomentReport rep;
  rep.hurst = hurst;
  rep.lambda = lambda;
  rep.samples = samples;
  const double scale = std::pow(lambda, 2.0 * hurst);
  if (hurst < 1.0) {
    rep.closed_form_deviation =
        std::abs(fbm_covariance(hurst, lambda, lambda) - scale * fbm_covariance(hurst, 1.0, 1.0)) /
        scale;
  }

  std::vector<std::pair<int, int>> pairs;  // (t index, lambda t index)
  for (int i = 1; i <= grid.n_steps; ++i) {
    const double lt = lambda * grid.node(i);
    if (lt > grid.horizon + 1e-12) continue;
    const int j = grid.index_of(lt);
    if (j > 0 && std::abs(grid.node(j) - lt) < 1e-12 * grid.horizon) pairs.emplace_back(i, j);
  }
  if (pairs.empty()) throw DomainError("scaling_moment_check: lambda t never lands on the grid");

  const auto factor = fbm_factor(hurst, grid);
  Rng rng(seed, "scaling-moment");
  const Mat z = rng.gaussian_matrix(grid.n_steps, samples);
  const Mat values = factor->lower.triangularView<Eigen::Lower>() * z;  // n x samples

  for (auto [i, j] : pairs) {
    // difference of paired squared values, one per sample
    const Vec diff = (values.row(j - 1).array().square() -
                      scale * values.row(i - 1).array().square())
                         .transpose();
    const double mean_diff = diff.mean();
    const double ref = scale * values.row(i - 1).array().square().mean();
    const double se = std::sqrt((diff.array() - mean_diff).square().sum() / (samples - 1) / samples);
    rep.empirical_deviation = std::max(rep.empirical_deviation, std::abs(mean_diff) / ref);
    if (se > 0.0) rep.max_z_score = std::max(rep.max_z_score, std::abs(mean_diff) / se);
  }
  return rep;
}

void write_fbm_csv(std::ostream& os, const FbmPath& path, std::uint64_t seed) {
  os << "# H=" << path.hurst << ",seed=" << seed << ",n=" << path.grid.n_steps << "\n";
  os << "t";
  for (int k = 0; k < path.dim; ++k) os << ",B_" << (k + 1);
  os << "\n";
  os.precision(17);
  for (int i = 0; i < path.grid.size(); ++i) {
    os << path.grid.node(i);
    for (int k = 0; k < path.dim; ++k) os << "," << path.values(i, k);
    os << "\n";
  }
}

}  // namespace fbmlab
