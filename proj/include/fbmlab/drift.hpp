#pragma once

#include "fbmlab/core.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fbmlab {

/// Scalar time weight g(t) with its exact cell integral; fields are g(t) f_t(x).
struct TimeProfile {
  std::function<double(double)> value;
  std::function<double(double, double)> integral;
  /// Exact int_a^b |g|^q when known (empty otherwise).
  std::function<double(double q, double a, double b)> moment;
  std::string description = "1";

  static TimeProfile constant(double c = 1.0);
  /// |t - origin|^{-exponent}, exponent < 1 so the singularity is integrable.
  static TimeProfile power_singularity(double exponent, double origin = 0.0);
};

using SpatialFn = std::function<void(double t, Eigen::Ref<const Vec> x, Eigen::Ref<Vec> out)>;
using SpatialGradFn = std::function<void(double t, Eigen::Ref<const Vec> x, Eigen::Ref<Mat> out)>;

/// Drift b_t(x) = g(t) f_t(x) with declared regularity b in L^q_t C^alpha_x.
///
/// Distributional members (alpha < 0) carry no pointwise spatial map; they are
/// reached through heat_smooth, which uses the analytic smoothing hook.
struct DriftField {
  std::string name;
  int dim = 1;
  double alpha = 1.0;
  double q = std::numeric_limits<double>::infinity();
  TimeProfile time = TimeProfile::constant();
  SpatialFn spatial;
  std::optional<SpatialGradFn> spatial_gradient;
  /// Bounds on the spatial part: sup |f| and the inhomogeneous C^alpha norm.
  double spatial_sup_norm = 0.0;
  double spatial_holder_norm = 0.0;
  /// Exact heat smoothing P_tau f, when the family admits it.
  std::function<DriftField(double tau)> analytic_heat;

  bool pointwise() const { return static_cast<bool>(spatial); }
  bool has_gradient() const { return spatial_gradient.has_value(); }

  Vec value(double t, const Vec& x) const;
  /// Frozen-point cell integral int_{t0}^{t1} b_r(x) dr = G(t0,t1) f_{t0}(x).
  void cell_increment(double t0, double t1, Eigen::Ref<const Vec> x, Eigen::Ref<Vec> out) const;
  /// Spatial Jacobian of f_t at x (without the time weight).
  void spatial_jacobian(double t, Eigen::Ref<const Vec> x, Eigen::Ref<Mat> out) const;
  Mat gradient(double t, const Vec& x) const;
  double divergence(double t, const Vec& x) const;

  /// t -> ||b_t||_{C^alpha} and t -> ||b_t||_{C^0}.
  double norm_profile(double t) const;
  double sup_profile(double t) const;
};

/// Regime bookkeeping for (H, q, alpha).
enum class Regime { subcritical, critical, supercritical };

struct RegimeReport {
  double hurst = 0.5;
  double q = 2.0;
  double alpha = 0.0;
  double q_conjugate = 2.0;
  double threshold = 0.0;        // 1 - 1/(q' H)
  double scaling_exponent = 0.0; // 1 - H - 1/q + alpha H
  Regime classification = Regime::critical;
  bool condition_a = false;
  bool condition_b = false;
  /// Human-readable reasons when a condition fails.
  std::vector<std::string> violations_a;
  std::vector<std::string> violations_b;
};

RegimeReport classify_regime(double hurst, double q, double alpha);
std::string to_string(Regime r);

/// Control function w(s,t) with a note on where it came from.
struct ControlFn {
  std::function<double(double, double)> w;
  std::string source;
  double operator()(double s, double t) const { return w(s, t); }
};

/// w(s,t) = int_s^t g(r)^q dr via adaptive quadrature (tolerance 1e-10).
ControlFn control_from_profile(std::function<double(double)> profile, double q,
                               std::string source = "profile");

/// w_{b,alpha,q}(s,t) = int_s^t ||b_r||_{C^alpha}^q dr (use_sup: C^0 norms).
ControlFn drift_control(const DriftField& b, bool use_sup = false);

/// P_tau b: the analytic hook when present, else adaptive Gauss-Kronrod over
/// the Gaussian weight (d = 1) or a 64-point Gauss-Hermite tensor rule (d = 2).
DriftField heat_smooth(const DriftField& b, double tau);

std::vector<DriftField> mollify_sequence(const DriftField& b, const std::vector<double>& levels);

/// max_{i<j} |f(x_i) - f(x_j)| / |x_i - x_j|^alpha over a 1-d lattice.
template <typename DerivedX, typename DerivedF>
double holder_seminorm_estimate(const Eigen::MatrixBase<DerivedX>& lattice,
                                const Eigen::MatrixBase<DerivedF>& values, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("holder_seminorm_estimate: alpha in (0,1]");
  const auto n = lattice.size();
  if (n < 2 || values.rows() != n) throw DomainError("holder_seminorm_estimate: bad lattice");
  double best = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dx = std::abs(lattice(j) - lattice(i));
      if (dx <= 0.0) continue;
      const double df = (values.row(j) - values.row(i)).norm();
      best = std::max(best, df / std::pow(dx, alpha));
    }
  return best;
}

/// sup_x |f(x)| over lattice rows, f evaluated at time t.
double lattice_sup(const DriftField& b, double t, const Mat& lattice);

/// Heat-kernel estimate of ||b1_t - b2_t||_{C^beta}, beta < 0:
/// sup over tau in {2^-k} of tau^{-beta/2} sup_x |P_tau (b1 - b2)(x)|.
double negative_holder_distance(const DriftField& b1, const DriftField& b2, double beta,
                                const Mat& lattice, double t = 0.0, int tau_levels = 12);

// Field library ----------------------------------------------------------

using FieldParams = std::map<std::string, double>;

/// Builds a registered field; throws DomainError on unknown name or missing
/// parameters. Names: zero, constant, linear, sine, tanh, cross_sine, bump, sign_power,
/// counterexample, counterexample_nd, weierstrass.
DriftField make_field(const std::string& name, const FieldParams& params);
std::vector<std::string> field_names();
/// Every parameter key a registered field reads (configs must supply all).
std::vector<std::string> field_parameters(const std::string& name);

DriftField zero_field(int dim = 1);
DriftField constant_field(const Vec& c);
DriftField linear_field(double slope, int dim = 1);
DriftField sine_field(double amplitude, double frequency = 1.0, int dim = 1);
DriftField tanh_field(double amplitude, int dim = 1);
/// f(x) = amplitude (sin x2, sin x1) in d = 2: smooth, divergence free.
DriftField cross_sine_field(double amplitude);
/// sign(x)|x|^alpha in d=1, time independent.
DriftField sign_power_field(double alpha);
/// t^{-1/q~} sign(x)|x|^alpha (d = 1).
DriftField counterexample_field(double alpha, double q_tilde);
/// b^1 = t^{-1/q~} sign(x^1)|x|^alpha, other components zero.
DriftField counterexample_field_nd(double alpha, double q_tilde, int dim);
/// amplitude * sum over k in [base_level, base_level + levels) of 2^{-k alpha} cos(2^k x + k),
/// per component; alpha < 0 gives a distribution (no pointwise map, exact heat
/// smoothing only). A negative base_level adds slow modes, widening the range of
/// scales on which the field looks alpha-Holder.
DriftField weierstrass_field(double alpha, int levels, int dim = 1,
                             TimeProfile time = TimeProfile::constant(), int base_level = 0,
                             double amplitude = 1.0);

/// b_t(z + h_t) where h is a path on the grid (time looked up at nodes).
DriftField shifted_field(const DriftField& b, const DiscretePath& shift);

/// b1 + b2 (same dimension; time profiles multiplied in, no exact cell rule).
DriftField sum_field(const DriftField& b1, const DriftField& b2);

}  // namespace fbmlab
