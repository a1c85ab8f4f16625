#pragma once

#include "fbmlab/core.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace fbmlab {

// p-variation ------------------------------------------------------------

enum class PVarMethod { exact_dp, greedy };

struct PVarResult {
  double value = 0.0;        // [[f]]_{p-var}
  double sum = 0.0;          // value^p, the optimal partition sum
  std::vector<int> optimal_partition;
  PVarMethod method = PVarMethod::exact_dp;
};

/// Exact DP is O(n^2) and restricted to n <= kExactPVarLimit nodes; longer
/// paths silently fall back to greedy and report it in `method`.
inline constexpr int kExactPVarLimit = 2049;

/// p-variation of the rows of `values` (Euclidean norm of row increments)
/// restricted to node indices [first, last].
PVarResult p_variation(const Mat& values, double p, PVarMethod method = PVarMethod::exact_dp,
                       int first = 0, int last = -1);

inline PVarResult p_variation(const DiscretePath& path, double p,
                              PVarMethod method = PVarMethod::exact_dp) {
  return p_variation(path.values, p, method);
}

// Sewing -------------------------------------------------------------------

/// Two-parameter germ A(s,t) in real time.
struct Germ {
  int dim = 1;
  std::function<Vec(double s, double t)> A;
  double eps1 = 0.0;  // claimed decay exponent of the level deltas
  std::string description;
};

struct SewingDiagnostics {
  /// level_deltas[k] = max over grid cells of |A^{k+1} - A^k| on the cell.
  std::vector<double> level_deltas;
  /// total_deltas[k] = |S^{k+1} - S^k| for the whole window.
  std::vector<double> total_deltas;
  double decay_rate = 0.0;  // fitted -log2 slope of total_deltas
  double decay_r2 = 0.0;
  int levels_used = 0;
  bool converged = false;
};

struct SewResult {
  Vec increment;
  SewingDiagnostics diagnostics;
};

/// Dyadic Riemann sums of the germ over [t_s, t_t]: level k splits every grid
/// cell into 2^k equal pieces. Stops once the total delta falls below `tol`.
SewResult sew(const Germ& germ, const TimeGrid& grid, int s_index, int t_index, int max_level = 14,
              double tol = 1e-9);

void write_sewing_csv(std::ostream& os, const SewingDiagnostics& diag);

/// Germ f_s (g_t - g_s) for real-time functions f, g (scalar).
Germ riemann_germ(std::function<double(double)> f, std::function<double(double)> g);

/// int_0^t f dg per component for piecewise-linear interpolants of f and g:
/// the trapezoid germ 1/2 (f_s + f_t) g_{s,t} is exact on each cell, so the
/// dyadic refinement adds nothing and the result is additive in t.
DiscretePath young_integral(const DiscretePath& f, const DiscretePath& g);

// Affine Young equations ---------------------------------------------------

/// Matrix-valued path A_t (d x d per node).
struct MatrixPath {
  TimeGrid grid;
  std::vector<Mat> values;

  int dim() const { return values.empty() ? 0 : static_cast<int>(values.front().rows()); }
};

/// A_{tau - t}: the time-reversed path. Reversing twice is the identity.
MatrixPath reverse_path(const MatrixPath& A);
DiscretePath reverse_path(const DiscretePath& z);

struct AffineYoungResult {
  DiscretePath x;
  bool blow_up = false;
  double sup_norm = 0.0;
  double x_pvar = 0.0;      // [[x]]_{p~-var}
  double a_pvar_p = 0.0;    // [[A]]^p_{p-var}
  double z_pvar = 0.0;      // [[z]]_{p~-var}
  double measured_c = 0.0;  // smallest C with LHS <= C e^{C [[A]]^p} (|x0| + [[z]])
};

/// dx = dA x + dz. Each cell is solved exactly for the piecewise-linear
/// interpolants: x_{i+1} = e^{dA} x_i + phi_1(dA) dz via one augmented
/// matrix exponential. p, p_tilde are the declared variation exponents.
AffineYoungResult solve_affine_young(const MatrixPath& A, const DiscretePath& z, const Vec& x0,
                                     double p = 1.0, double p_tilde = 1.0, bool measure = true);

/// Propagator of the homogeneous equation from node s to node t (s <= t).
Mat affine_propagator(const MatrixPath& A, int s_index, int t_index);

/// Solves backwards from the terminal value y_tau at the last node; row i of
/// the result is the solution at t_i. Exact inverse of solve_affine_young.
DiscretePath reverse_linear_flow(const MatrixPath& A, const DiscretePath& z, const Vec& terminal);

/// Smallest C > 0 with lhs <= C e^{C v} rhs (bisection).
double measure_exponential_constant(double lhs, double v, double rhs);

// Nonlinear Young equations ------------------------------------------------

/// A_{s,t}(x) in real time with declared exponents and control w_A.
struct TwoParamField {
  int dim = 1;
  std::function<Vec(double s, double t, const Vec& x)> A;
  std::function<double(double s, double t)> control;  // defaults to t - s
  double eta = 1.0;
  double p = 1.0;
};

struct NonlinearYoungResult {
  DiscretePath y;
  SewingDiagnostics diagnostics;  // deltas at the nodes between refinement levels
  /// remainder_windows[j] = 2^j cells; max |y_{s,t} - A_{s,t}(y_s)| over aligned windows.
  std::vector<double> window_control;
  std::vector<double> window_remainder;
  double remainder_slope = 0.0;
  double measured_constant = 0.0;  // max remainder / w^{(1+eta)/p}
};

/// Midpoint germ A_{s,t}(y + A_{s,t}(y)/2) on every cell, each refined
/// dyadically until successive levels agree at all nodes within `tol`.
NonlinearYoungResult solve_nonlinear_yde(const TwoParamField& A, const Vec& y0, const TimeGrid& grid,
                                         int max_level = 6, double tol = 1e-9);

}  // namespace fbmlab
