#pragma once

#include "fbmlab/core.hpp"

#include <iosfwd>
#include <memory>
#include <vector>

namespace fbmlab {

/// Closed-form fBm covariance 1/2 (t^{2H} + s^{2H} - |t-s|^{2H}), H in (0,1).
double fbm_covariance(double hurst, double s, double t);

/// Throws DomainError unless hurst is in (0,2) and not 1.
void validate_hurst(double hurst);

/// Covariance of the grid values at nodes t_1..t_n (node 0 is pinned to zero).
/// For H in (1,2) this is the exact covariance of the trapezoid integral of an
/// (H-1)-path on the same grid, i.e. the law sample_fbm actually produces.
Mat fbm_grid_covariance(double hurst, const TimeGrid& grid);

/// Lower-triangular L with L L^T = fbm_grid_covariance, shared between paths.
struct FbmFactor {
  double hurst = 0.5;
  TimeGrid grid;
  Mat lower;  // n x n over nodes 1..n
};

/// Cached factor for (H, grid); thread-safe. Throws NumericalError when the
/// Cholesky factorization fails (grid too fine for double precision).
std::shared_ptr<const FbmFactor> fbm_factor(double hurst, const TimeGrid& grid);

/// Grid-sampled fBm. values has one row per node (row 0 is zero); driver holds
/// the i.i.d. standard Gaussians z with values.bottomRows(n) = L z.
struct FbmPath {
  double hurst = 0.5;
  int dim = 1;
  TimeGrid grid;
  Mat values;  // (n+1) x d
  Mat driver;  // n x d
  std::shared_ptr<const FbmFactor> factor;

  DiscretePath as_path() const { return DiscretePath(grid, values); }
};

FbmPath sample_fbm(double hurst, const TimeGrid& grid, int dim, std::uint64_t seed);

/// Builds the path from a given driver (n x d); used by branching and tests.
FbmPath fbm_from_driver(std::shared_ptr<const FbmFactor> factor, Mat driver);

/// Gaussian law of B_t given the grid history B_{t_0..t_s}.
struct ConditionalLaw {
  int s_index = 0;
  int t_index = 0;
  Vec mean;         // per component
  double variance;  // shared by all components (i.i.d. coordinates)
};

/// Conditional variance from the factor alone: sum_{j > s} L(t, j)^2.
double conditional_variance(const FbmFactor& factor, int s_index, int t_index);

ConditionalLaw conditional_law(const FbmPath& path, int s_index, int t_index);

/// m futures drawn from the exact conditional law given the parent's history
/// up to s_index; every branch coincides with the parent on nodes <= s_index.
std::vector<FbmPath> branch_futures(const FbmPath& path, int s_index, int branches,
                                    std::uint64_t seed);

struct ScalingMomentReport {
  double hurst = 0.5;
  double lambda = 1.0;
  int samples = 0;
  double closed_form_deviation = 0.0;  // |E B_{lambda}^2 - lambda^{2H} E B_1^2| / lambda^{2H}
  double empirical_deviation = 0.0;    // max relative deviation across nodes
  double max_z_score = 0.0;            // deviation in units of Monte-Carlo standard errors
};

/// Compares E[B_{lambda t}^2] with lambda^{2H} E[B_t^2] on grid nodes t with
/// lambda t inside the horizon.
ScalingMomentReport scaling_moment_check(double hurst, double lambda, int samples,
                                         const TimeGrid& grid, std::uint64_t seed);

/// CSV: header comment "# H=..,seed=..,n=..", then columns t,B_1..B_d.
void write_fbm_csv(std::ostream& os, const FbmPath& path, std::uint64_t seed);

}  // namespace fbmlab
