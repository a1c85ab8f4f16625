#pragma once

#include "fbmlab/drift.hpp"
#include "fbmlab/young.hpp"

#include <iosfwd>
#include <vector>

namespace fbmlab {

/// X_t = x0 + int_0^t b_r(X_r) dr + B_t with B given on the grid (row 0 zero).
struct SdeProblem {
  DriftField drift;
  DiscretePath noise;
  Vec x0;

  SdeProblem(DriftField b, DiscretePath B, Vec x);
  const TimeGrid& grid() const { return noise.grid; }
};

/// X and phi = X - B; phi_0 = x0.
struct SolutionPath {
  DiscretePath X;
  DiscretePath phi;
  bool diverged = false;
  int diverged_index = -1;
};

inline constexpr double kOverflowBound = 1e12;

/// X_{i+1} = X_i + G(t_i, t_{i+1}) f_{t_i}(X_i) + B_{i+1} - B_i, where
/// b = g f and G is the exact cell integral of g. With g constant this is the
/// plain Euler step b_{t_i}(X_i) dt. Rows after an overflow are NaN.
SolutionPath solve_euler(const SdeProblem& problem);

/// Euler from node s with state x; row j is the state at node s + j. `phi`,
/// when given, receives x - B(s) plus the accumulated drift cells, so a zero
/// drift leaves it exactly constant.
Mat euler_from(const DriftField& b, const DiscretePath& noise, int s_index, const Vec& x,
               bool* diverged = nullptr, Mat* phi = nullptr);

// Distributional drifts ------------------------------------------------------

struct MollifiedFamily {
  std::vector<double> levels;
  std::vector<SolutionPath> solutions;
  std::vector<double> cauchy_deltas;  // sup_t |X^{k+1} - X^k|
  bool converged = false;
  bool non_cauchy = false;
  RegimeReport regime;
};

/// Solves with P_tau b for every tau in `levels` (decreasing) under shared
/// noise. Throws DomainError unless condition A holds for (H, b.q, b.alpha).
MollifiedFamily solve_distributional(const DriftField& b, const std::vector<double>& levels, double hurst,
                                     const DiscretePath& noise, const Vec& x0, double tol = 1e-3);

// Averaged field -------------------------------------------------------------

/// (T b)_t(x) = int_0^t b_r(x + B_r) dr on lattice points, cell rule G f_{t_i}.
struct AveragedField {
  TimeGrid grid;
  Mat lattice;                // one point per row
  std::vector<Mat> values;    // per lattice point: (n+1) x d cumulative integral

  Vec increment(int point, int s_index, int t_index) const {
    return (values[point].row(t_index) - values[point].row(s_index)).transpose();
  }
  /// Lattice points stacked as columns, for temporal p-variation.
  Mat stacked() const;
};

AveragedField averaged_field(const DriftField& b, const DiscretePath& noise, const Mat& lattice);

/// A_{s,t}(x) = sum over cells in [s,t] of G f(x + B_{t_i}); s, t are rounded
/// to grid nodes, so use it with max_level = 0.
TwoParamField averaged_two_param(const DriftField& b, const DiscretePath& noise);

/// p_{alpha,H} = ((1 + (alpha - 1) H)^{-1} + 2) / 2.
double averaged_pvar_exponent(double alpha, double hurst);

// Flows and Jacobians --------------------------------------------------------

struct FlowEntry {
  int s = 0;
  int t = 0;
  int x_index = 0;
  Vec phi;
  Mat J;  // empty when the Jacobian was not requested
  Mat K;
};

struct FlowGrid {
  std::vector<int> s_list;
  std::vector<int> t_list;
  Mat lattice;
  std::vector<FlowEntry> entries;  // t >= s only
  double semiflow_residual = 0.0;
  double identity_residual = 0.0;  // max |J K - I|
  double min_det = 0.0;            // min det J over entries
  bool diverged = false;

  const FlowEntry& at(int s, int t, int x_index) const;
};

FlowGrid compute_flow(const DriftField& b, const DiscretePath& noise, const std::vector<int>& s_list,
                      const std::vector<int>& t_list, const Mat& lattice, bool with_jacobian = false);

/// J_{i+1} = (I + G grad f(X_i)) J_i is the exact derivative of the Euler map;
/// K_{i+1} = K_i (I + G grad f(X_i))^{-1} is an implicit step of dK = -K grad b dt.
struct JacobianPath {
  Mat trajectory;          // rows from node s to n
  std::vector<Mat> J, K;   // one per row of trajectory
};

JacobianPath jacobian_flow(const DriftField& b, const DiscretePath& noise, int s_index, const Vec& x);

/// D_{i+1} = D_i + G grad f(X_i) D_i + h_{i+1} - h_i (derivative of X in the
/// noise direction h).
DiscretePath malliavin_directional(const SdeProblem& problem, const DiscretePath& h);

/// E[ |x - y| / inf_t |Phi_t(x) - Phi_t(y)| ] over fresh fBm samples.
struct InverseMomentReport {
  double mean = 0.0;
  double stderr_mean = 0.0;
  int samples = 0;
};
InverseMomentReport two_point_inverse_moment(const DriftField& b, double hurst, const TimeGrid& grid,
                                             const Vec& x, const Vec& y, int samples, std::uint64_t seed);

// Characteristics ------------------------------------------------------------

struct Characteristic {
  Vec x;
  double div_integral = 0.0;  // sum of G div f along the visited states
  bool diverged = false;
};

/// Explicit reverse-time Euler from (t_index, y) back to s_index:
/// x_i = x_{i+1} - (B_{i+1} - B_i) - G f_{t_i}(x_{i+1}).
Characteristic backward_characteristic(const DriftField& b, const DiscretePath& noise, int t_index,
                                       const Vec& y, int s_index = 0, bool with_divergence = false);

/// Forward Euler from (s_index, x) to t_index with the same divergence ledger.
Characteristic forward_characteristic(const DriftField& b, const DiscretePath& noise, int s_index,
                                      const Vec& x, int t_index, bool with_divergence = false);

// Export ---------------------------------------------------------------------

void write_solution_csv(std::ostream& os, const SolutionPath& sol);
void write_flow_csv(std::ostream& os, const FlowGrid& flow, const TimeGrid& grid);

}  // namespace fbmlab
