#pragma once

#include "fbmlab/drift.hpp"
#include "fbmlab/sde.hpp"
#include "fbmlab/stats.hpp"

#include <complex>
#include <cstdint>
#include <vector>

namespace fbmlab {

// Moments ---------------------------------------------------------------------

struct MomentEstimate {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double m = 1.0;
  int samples = 0;
};

/// (mean |x|^m)^{1/m} with a percentile bootstrap interval.
MomentEstimate moment_estimator(const Vec& samples, double m, int bootstrap_reps = 1000,
                                std::uint64_t seed = 0, double level = 0.95);

// Conditional regularity ------------------------------------------------------

struct ConditionalRegularityConfig {
  double hurst = 1.0 / 3.0;
  double q = 2.0;
  double alpha = 0.5;
  double m = 2.0;
  TimeGrid grid{512};
  int s_index = 256;
  std::vector<int> lags;  // t - s in grid steps
  int pasts = 64;
  int branches = 256;
  Vec x0;
  std::uint64_t seed = 0;
};

struct ConditionalIncrementStats {
  std::vector<double> lags;        // t - s
  std::vector<double> estimates;   // outer max over pasts of the conditional L^m norm
  std::vector<double> stderrs;     // delta-method standard error of the maximizing past
  std::vector<double> crude_bounds;  // 2 w_{b,0,q}(s,t)^{1/q} (t-s)^{1/q'}
  int pasts = 0;
  int branches = 0;
  double m = 2.0;
  double predicted_slope = 0.0;  // 1/q' + alpha H
  double max_relative_se = 0.0;
  bool budget_flag = false;      // some branch standard error exceeds 20% of its estimate
  bool exact_zero = false;
  ScalingFit fit;
  RegimeReport regime;
};

/// Nested Monte Carlo for ||phi_t - E_s phi_t||_{L^m | F_s}: P pasts, M branches
/// each, the branch mean standing in for E_s. Requires condition A or B.
ConditionalIncrementStats conditional_regularity_exponent(const DriftField& b,
                                                          const ConditionalRegularityConfig& cfg);

// rho-irregularity --------------------------------------------------------------

/// Trapezoid rule for int_{t_s}^{t_t} exp(i xi . X_r) dr.
std::complex<double> oscillatory_integral(const DiscretePath& path, int s_index, int t_index,
                                          const Vec& xi);

struct RhoIrregularityConfig {
  int band_lo = 2;          // bands 2^k (1 + j / mags_per_band), k in [band_lo, band_hi]
  int band_hi = 6;
  int mags_per_band = 4;
  int directions = 32;
  int gamma_levels = 4;     // dyadic window levels for the gamma fit
  std::uint64_t seed = 0;
};

/// Band range tied to the grid: ξ up to about n^H keeps phase steps per cell O(1).
/// band_hi = min(cap, floor(H log2 n)), band_lo = max(1, band_hi - 4).
RhoIrregularityConfig resolution_band(double hurst, int n_steps, int cap = 6);

struct RhoPathResult {
  double rho = 0.0;
  double rho_r2 = 0.0;
  double gamma = 0.0;
};

struct RhoIrregularityReport {
  std::vector<double> band_centers;
  std::vector<double> mean_band_rms;  // averaged over paths
  std::vector<RhoPathResult> per_path;
  double median_rho = 0.0;
  double q25_rho = 0.0;
  double q75_rho = 0.0;
  double median_gamma = 0.0;
  double max_bound_ratio = 0.0;  // max |Phi_{s,t}| / (t - s), never above 1
};

/// rho-hat per path: minus the slope of log RMS_band |Phi_{0,T}(xi)| against
/// log |xi|, with RMS over random directions and magnitudes within each band.
RhoIrregularityReport rho_irregularity(const std::vector<DiscretePath>& paths,
                                       const RhoIrregularityConfig& cfg);

// Stability -------------------------------------------------------------------

struct StabilityConfig {
  double hurst = 0.5;
  TimeGrid grid{256};
  int replicates = 200;
  Vec x0;
  std::vector<double> perturbations;  // |dx0| or |c|
  std::uint64_t seed = 0;
};

struct StabilityReport {
  std::vector<double> magnitudes;   // regression abscissa
  std::vector<double> mean_distance;
  std::vector<double> stderrs;
  ScalingFit fit;
  RegimeReport regime;
};

/// E sup_t |X^{x0} - X^{x0 + e}| for e = perturbation * (1, ..., 1)/sqrt(d).
StabilityReport stability_initial(const DriftField& b, const StabilityConfig& cfg);

/// E sup_t |X^{b} - X^{b + c}| against the heat-kernel (alpha - 1)-norm of c.
StabilityReport stability_drift(const DriftField& b, const StabilityConfig& cfg);

// Counterexample ----------------------------------------------------------------

struct CounterexampleConfig {
  double hurst = 0.8;
  double q_tilde = 4.0;
  double alpha = 0.05;
  double delta = 0.25;
  std::vector<double> rho_scan;
  std::vector<double> x_sequence;
  int paths = 200;
  TimeGrid grid{1024};
  std::uint64_t seed = 0;
};

struct CounterexampleReport {
  double gamma = 0.0;   // 1 / (q~' (1 - alpha))
  RegimeReport regime;
  std::vector<double> rho_scan;
  std::vector<double> x_sequence;
  Mat upper_fraction;   // x index by rho index: X^{x}_t >= delta t^gamma on (0, rho]
  Mat lower_fraction;   // X^{-x}_t <= -delta t^gamma on (0, rho]
  double best_rho = 0.0;  // largest scanned rho with min over x of both fractions >= 3/4
  double best_upper = 0.0;
  double best_lower = 0.0;
  double mirror_residual = 0.0;  // max |X(-x, -B) + X(x, B)|
};

/// Throws DomainError unless alpha < 1 - 1/(H q~'), gamma < H and
/// delta^alpha / gamma > 2 delta.
CounterexampleReport counterexample_branching(const CounterexampleConfig& cfg);

struct GapReport {
  std::vector<double> x_sequence;
  std::vector<double> gap;  // E sup_t |X^{x} - X^{-x}| under shared noise
  std::vector<double> gap_se;
  RegimeReport regime;
};

GapReport counterexample_gap(const CounterexampleConfig& cfg);

}  // namespace fbmlab
