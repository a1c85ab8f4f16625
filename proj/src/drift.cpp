#include "fbmlab/drift.hpp"

#include "fbmlab/quadrature.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace fbmlab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kHermiteOrder = 64;
constexpr double kHeatCutoff = 10.0;  // Gaussian tail beyond 10 sd is below 1e-22

double sgn(double x) { return (x > 0.0) - (x < 0.0); }
}  // namespace

TimeProfile TimeProfile::constant(double c) {
  TimeProfile p;
  p.value = [c](double) { return c; };
  p.integral = [c](double a, double b) { return c * (b - a); };
  p.moment = [c](double q, double a, double b) { return std::pow(std::abs(c), q) * (b - a); };
  std::ostringstream os;
  os << c;
  p.description = os.str();
  return p;
}

TimeProfile TimeProfile::power_singularity(double exponent, double origin) {
  if (!(exponent >= 0.0 && exponent < 1.0))
    throw DomainError("power_singularity: exponent must lie in [0,1)");
  TimeProfile p;
  p.value = [exponent, origin](double t) {
    const double d = std::abs(t - origin);
    if (exponent == 0.0) return 1.0;
    return d == 0.0 ? kInf : std::pow(d, -exponent);
  };
  p.integral = [exponent, origin](double a, double b) {
    auto F = [&](double t) {
      const double d = t - origin;
      return sgn(d) * std::pow(std::abs(d), 1.0 - exponent) / (1.0 - exponent);
    };
    return F(b) - F(a);
  };
  p.moment = [exponent, origin](double q, double a, double b) {
    const double e = exponent * q;
    if (!(e < 1.0)) return kInf;
    auto F = [&](double t) {
      const double d = t - origin;
      return sgn(d) * std::pow(std::abs(d), 1.0 - e) / (1.0 - e);
    };
    return F(b) - F(a);
  };
  std::ostringstream os;
  os << "|t-" << origin << "|^-" << exponent;
  p.description = os.str();
  return p;
}

Vec DriftField::value(double t, const Vec& x) const {
  if (!pointwise()) throw DomainError("DriftField '" + name + "' has no pointwise values; mollify first");
  Vec out(dim);
  spatial(t, x, out);
  return time.value(t) * out;
}

void DriftField::cell_increment(double t0, double t1, Eigen::Ref<const Vec> x,
                                Eigen::Ref<Vec> out) const {
  if (!pointwise()) throw DomainError("DriftField '" + name + "' has no pointwise values; mollify first");
  spatial(t0, x, out);
  out *= time.integral(t0, t1);
}

void DriftField::spatial_jacobian(double t, Eigen::Ref<const Vec> x, Eigen::Ref<Mat> out) const {
  if (!spatial_gradient)
    throw DomainError("DriftField '" + name + "' has no gradient; use a mollified level");
  (*spatial_gradient)(t, x, out);
}

Mat DriftField::gradient(double t, const Vec& x) const {
  Mat g(dim, dim);
  spatial_jacobian(t, x, g);
  return time.value(t) * g;
}

double DriftField::divergence(double t, const Vec& x) const { return gradient(t, x).trace(); }

double DriftField::norm_profile(double t) const {
  return std::abs(time.value(t)) * spatial_holder_norm;
}

double DriftField::sup_profile(double t) const { return std::abs(time.value(t)) * spatial_sup_norm; }

// Regime ------------------------------------------------------------------

RegimeReport classify_regime(double hurst, double q, double alpha) {
  if (!(hurst > 0.0) || std::isinf(hurst)) throw DomainError("classify_regime: H must be positive");
  if (std::abs(hurst - std::round(hurst)) < 1e-12)
    throw DomainError("classify_regime: H must not be an integer");
  if (!(q > 1.0)) throw DomainError("classify_regime: q must exceed 1");
  RegimeReport r;
  r.hurst = hurst;
  r.q = q;
  r.alpha = alpha;
  r.q_conjugate = conjugate_exponent(q);
  r.threshold = 1.0 - 1.0 / (r.q_conjugate * hurst);
  const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
  r.scaling_exponent = 1.0 - hurst - inv_q + alpha * hurst;
  constexpr double tol = 1e-12;
  if (std::abs(alpha - r.threshold) <= tol)
    r.classification = Regime::critical;
  else
    r.classification = alpha > r.threshold ? Regime::subcritical : Regime::supercritical;

  auto fmt = [](const std::string& lhs, double a, const std::string& op, double b) {
    std::ostringstream os;
    os << lhs << " = " << a << " must be " << op << " " << b;
    return os.str();
  };
  if (!(q <= 2.0)) r.violations_a.push_back(fmt("q", q, "<=", 2.0));
  if (!(alpha > r.threshold + tol))
    r.violations_a.push_back(fmt("alpha", alpha, "> 1 - 1/(q'H) =", r.threshold));
  if (!(alpha < 1.0)) r.violations_a.push_back(fmt("alpha", alpha, "<", 1.0));
  r.condition_a = r.violations_a.empty();

  if (!(hurst < 1.0)) r.violations_b.push_back(fmt("H", hurst, "<", 1.0));
  const double half_bound = 0.5 - 0.5 / hurst;
  if (!(alpha > half_bound))
    r.violations_b.push_back(fmt("alpha", alpha, "> 1/2 - 1/(2H) =", half_bound));
  if (!(alpha > r.threshold + tol))
    r.violations_b.push_back(fmt("alpha", alpha, "> 1 - 1/(q'H) =", r.threshold));
  r.condition_b = r.violations_b.empty();
  return r;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::subcritical: return "subcritical";
    case Regime::critical: return "critical";
    case Regime::supercritical: return "supercritical";
  }
  return "unknown";
}

// Controls ----------------------------------------------------------------

ControlFn control_from_profile(std::function<double(double)> profile, double q,
                               std::string source) {
  if (!(q >= 1.0) || std::isinf(q)) throw DomainError("control_from_profile: q must be finite and >= 1");
  ControlFn c;
  c.source = std::move(source);
  c.w = [profile = std::move(profile), q](double s, double t) {
    if (t < s) throw DomainError("control: need s <= t");
    if (t == s) return 0.0;
    auto res = integrate_adaptive([&](double r) { return std::pow(std::abs(profile(r)), q); }, s, t,
                                  1e-12, 1e-10);
    if (!res.converged)
      throw NumericalError("control_from_profile: quadrature did not converge; profile not q-integrable?");
    return res.value;
  };
  return c;
}

ControlFn drift_control(const DriftField& b, bool use_sup) {
  const double q = std::isinf(b.q) ? 2.0 : b.q;
  if (b.time.moment) {
    // Separable field: ||b_r|| = |g(r)| * (spatial norm), so w is exact.
    const double c = std::pow(use_sup ? b.spatial_sup_norm : b.spatial_holder_norm, q);
    ControlFn w;
    w.source = "w_{" + b.name + (use_sup ? ",0," : ",alpha,") + "q} (exact)";
    w.w = [moment = b.time.moment, c, q](double s, double t) {
      if (t < s) throw DomainError("control: need s <= t");
      return t == s ? 0.0 : c * moment(q, s, t);
    };
    return w;
  }
  auto profile = use_sup ? std::function<double(double)>([b](double t) { return b.sup_profile(t); })
                         : std::function<double(double)>([b](double t) { return b.norm_profile(t); });
  return control_from_profile(std::move(profile), q, "w_{" + b.name + (use_sup ? ",0," : ",alpha,") + "q}");
}

// Heat smoothing -----------------------------------------------------------

DriftField heat_smooth(const DriftField& b, double tau) {
  if (!(tau > 0.0)) throw DomainError("heat_smooth: smoothing time must be positive");
  if (b.analytic_heat) return b.analytic_heat(tau);
  if (!b.pointwise()) throw DomainError("heat_smooth: field '" + b.name + "' is not evaluable");
  if (b.dim > 2) throw DomainError("heat_smooth: quadrature smoothing supports d <= 2");

  const double sd = std::sqrt(tau);
  auto base = b.spatial;
  DriftField out = b;
  std::ostringstream nm;
  nm << "P[" << tau << "]" << b.name;
  out.name = nm.str();
  // Semigroup property: smoothing again restarts from the unsmoothed field.
  out.analytic_heat = [b, tau](double more) { return heat_smooth(b, tau + more); };

  if (b.dim == 1) {
    // Fixed Hermite rules lose accuracy on kinks and cusps; adaptive
    // Gauss-Kronrod over the Gaussian weight does not.
    auto convolve = [base, sd](double t, double x, bool gradient) {
      auto integrand = [&](double z) {
        Vec y(1), fy(1);
        y(0) = x + sd * z;
        base(t, y, fy);
        const double w = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
        return (gradient ? z / sd : 1.0) * fy(0) * w;
      };
      return integrate_adaptive(integrand, -kHeatCutoff, kHeatCutoff, 1e-12, 1e-10).value;
    };
    out.spatial = [convolve](double t, Eigen::Ref<const Vec> x, Eigen::Ref<Vec> res) {
      res(0) = convolve(t, x(0), false);
    };
    out.spatial_gradient = [convolve](double t, Eigen::Ref<const Vec> x, Eigen::Ref<Mat> res) {
      res(0, 0) = convolve(t, x(0), true);
    };
    return out;
  }

  const GaussHermiteRule& rule = gauss_hermite(kHermiteOrder);
  const int m = static_cast<int>(rule.nodes.size());
  const int d = b.dim;
  const int count = d == 1 ? m : m * m;
  Mat offsets(d, count);
  Vec weights(count);
  for (int k = 0; k < count; ++k) {
    const int i = k % m, j = k / m;
    offsets(0, k) = rule.nodes(i);
    weights(k) = rule.weights(i);
    if (d == 2) {
      offsets(1, k) = rule.nodes(j);
      weights(k) *= rule.weights(j);
    }
  }
  out.spatial = [base, offsets, weights, sd, d, count](double t, Eigen::Ref<const Vec> x,
                                                        Eigen::Ref<Vec> res) {
    Vec y(d), fy(d);
    res.setZero();
    for (int k = 0; k < count; ++k) {
      y = x + sd * offsets.col(k);
      base(t, y, fy);
      res += weights(k) * fy;
    }
  };
  out.spatial_gradient = [base, offsets, weights, sd, d, count](double t, Eigen::Ref<const Vec> x,
                                                                 Eigen::Ref<Mat> res) {
    Vec y(d), fy(d);
    res.setZero();
    for (int k = 0; k < count; ++k) {
      y = x + sd * offsets.col(k);
      base(t, y, fy);
      res += (weights(k) / sd) * fy * offsets.col(k).transpose();
    }
  };
  return out;
}

std::vector<DriftField> mollify_sequence(const DriftField& b, const std::vector<double>& levels) {
  std::vector<DriftField> out;
  out.reserve(levels.size());
  for (double tau : levels) out.push_back(heat_smooth(b, tau));
  return out;
}

double lattice_sup(const DriftField& b, double t, const Mat& lattice) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < lattice.rows(); ++i) {
    const Vec x = lattice.row(i).transpose();
    best = std::max(best, b.value(t, x).norm());
  }
  return best;
}

double negative_holder_distance(const DriftField& b1, const DriftField& b2, double beta,
                                const Mat& lattice, double t, int tau_levels) {
  if (!(beta < 0.0)) throw DomainError("negative_holder_distance: beta must be negative");
  double best = 0.0;
  for (int k = 0; k <= tau_levels; ++k) {
    const double tau = std::ldexp(1.0, -k);
    const DriftField s1 = heat_smooth(b1, tau), s2 = heat_smooth(b2, tau);
    double sup = 0.0;
    for (Eigen::Index i = 0; i < lattice.rows(); ++i) {
      const Vec x = lattice.row(i).transpose();
      sup = std::max(sup, (s1.value(t, x) - s2.value(t, x)).norm());
    }
    best = std::max(best, std::pow(tau, -beta / 2.0) * sup);
  }
  return best;
}

// Field library -------------------------------------------------------------

DriftField zero_field(int dim) {
  DriftField b;
  b.name = "zero";
  b.dim = dim;
  b.alpha = 1.0;
  b.spatial = [](double, Eigen::Ref<const Vec>, Eigen::Ref<Vec> out) { out.setZero(); };
  b.spatial_gradient = [](double, Eigen::Ref<const Vec>, Eigen::Ref<Mat> out) { out.setZero(); };
  b.analytic_heat = [dim](double) { return zero_field(dim); };
  return b;
}

DriftField constant_field(const Vec& c) {
  DriftField b;
  b.name = "constant";
  b.dim = static_cast<int>(c.size());
  b.alpha = 1.0;
  b.spatial = [c](double, Eigen::Ref<const Vec>, Eigen::Ref<Vec> out) { out = c; };
  b.spatial_gradient = [](double, Eigen::Ref<const Vec>, Eigen::Ref<Mat> out) { out.setZero(); };
  b.spatial_sup_norm = c.norm();
  b.spatial_holder_norm = c.norm();
  b.analytic_heat = [c](double) { return constant_field(c); };
  return b;
}

DriftField linear_field(double slope, int dim) {
  DriftField b;
  b.name = "linear";
  b.dim = dim;
  b.alpha = 1.0;
  b.spatial = [slope](double, Eigen::Ref<const Vec> x, Eigen::Ref<Vec> out) { out = slope * x; };
  b.spatial_gradient = [slope](double, Eigen::Ref<const Vec>, Eigen::Ref<Mat> out) {
    out.setIdentity();
    out *= slope;
  };
  b.spatial_sup_norm = kInf;
  b.spatial_holder_norm = std::abs(slope);
  b.analytic_heat = [slope, dim](double) { return linear_field(slope, dim); };
  return b;
}

DriftField sine_field(double amplitude, double frequency, int dim) {
  DriftField b;
  b.name = "sine";
  b.dim = dim;
  b.alpha = 1.0;
  b.spatial = [amplitude, frequency](double, Eigen::Ref<const Vec> x, Eigen::Ref<Vec> out) {
    out = amplitude * (frequency * x.array()).sin().matrix();
  };
  b.spatial_gradient = [amplitude, frequency](double, Eigen::Ref<const Vec> x, Eigen::Ref<Mat> out) {
    out = (amplitude * frequency * (frequency * x.array()).cos()).matrix().asDiagonal();
  };
  b.spatial_sup_norm = std::abs(amplitude) * std::sqrt(static_cast<double>(dim));
  b.spatial_holder_norm = b.spatial_sup_norm + std::abs(amplitude * frequency);
  // P_tau sin(kx) = exp(-tau k^2 / 2) sin(kx)
  b.analytic_heat = [amplitude, frequency, dim](double tau) {
    DriftField s = sine_field(amplitude * std::exp(-0.5 * tau * frequency * frequency), frequency, dim);
    return s;
  };
  return b;
}

DriftField tanh_field(double amplitude, int dim) {
  DriftField b;
  b.name = "tanh";
  b.dim = dim;
  b.alpha = 1.0;
  b.spatial = [amplitude](double, Eigen::Ref<const Vec> x, Eigen::Ref<Vec> out) {
    out = amplitude * x.array().tanh().matrix();
  };
  b.spatial_gradient = [amplitude](double, Eigen::Ref<const Vec> x, Eigen::Ref<Mat> out) {
    out = (amplitude * (1.0 - x.array().tanh().square())).matrix().asDiagonal();
  };
  b.spatial_sup_norm = std::abs(amplitude) * std::sqrt(static_cast<double>(dim));
  b.spatial_holder_norm = 2.0 * b.spatial_sup_norm;
  return b;
}

namespace {


DriftField bump_field(double amplitude, double width) {
  DriftField b;
  b.name = "bump";
  b.dim = 1;
  b.alpha = 1.0;
  b.spatial = [amplitude, width](double, Eigen::Ref<const Vec> x, Eigen::Ref<Vec> out) {
    out(0) = amplitude * x(0) * std::exp(-x(0) * x(0) / (2.0 * width * width));
  };
  b.spatial_gradient = [amplitude, width](double, Eigen::Ref<const Vec> x, Eigen::Ref<Mat> out) {
    const double w2 = width * width;
    out(0, 0) = amplitude * (1.0 - x(0) * x(0) / w2) * std::exp(-x(0) * x(0) / (2.0 * w2));
  };
  b.spatial_sup_norm = std::abs(amplitude) * width * std::exp(-0.5);
  b.spatial_holder_norm = b.spatial_sup_norm + std::abs(amplitude);
  return b;
}

DriftField sign_power_impl(double alpha, TimeProfile time, std::string name) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("sign_power: alpha must lie in (0,1)");
  DriftField b;
  b.name = std::move(name);
  b.dim = 1;
  b.alpha = alpha;
  b.time = std::move(time);
  b.spatial = [alpha](double, Eigen::Ref<const Vec> x, Eigen::Ref<Vec> out) {
    out(0) = sgn(x(0)) * std::pow(std::abs(x(0)), alpha);
  };
  b.spatial_sup_norm = kInf;
  b.spatial_holder_norm = std::pow(2.0, 1.0 - alpha);
  return b;
}

DriftField weierstrass_impl(double amplitude, double alpha, int levels, int base, int dim, TimeProfile time,
                            double tau) {
  DriftField b;
  std::ostringstream nm;
  nm << "weierstrass(" << alpha << ")";
  if (tau > 0.0) nm << "*P[" << tau << "]";
  b.name = nm.str();
  b.dim = dim;
  b.alpha = alpha;
  b.time = time;
  // Coefficients 2^{-k alpha} exp(-tau 4^k / 2); negligible modes are dropped.
  std::vector<double> coef, freq, phase;
  for (int k = base; k < base + levels; ++k) {
    const double f = std::ldexp(1.0, k);
    const double c = amplitude * std::pow(2.0, -k * alpha) * std::exp(-0.5 * tau * f * f);
    if (std::abs(c) < 1e-18) break;
    coef.push_back(c);
    freq.push_back(f);
    phase.push_back(static_cast<double>(k));
  }
  double sup = 0.0;
  for (double c : coef) sup += std::abs(c);
  b.spatial_sup_norm = sup * std::sqrt(static_cast<double>(dim));
  if (alpha > 0.0 && alpha < 1.0)
    b.spatial_holder_norm =
        b.spatial_sup_norm +
        std::abs(amplitude) * (1.0 / (1.0 - std::pow(2.0, alpha - 1.0)) + 2.0 / (1.0 - std::pow(2.0, -alpha)));
  else
    b.spatial_holder_norm = std::abs(amplitude);
  if (alpha > 0.0 || tau > 0.0) {
    b.spatial = [coef, freq, phase](double, Eigen::Ref<const Vec> x, Eigen::Ref<Vec> out) {
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < coef.size(); ++k) s += coef[k] * std::cos(freq[k] * x(i) + phase[k]);
        out(i) = s;
      }
    };
    if (tau > 0.0 || alpha > 1.0) {
      b.spatial_gradient = [coef, freq, phase](double, Eigen::Ref<const Vec> x, Eigen::Ref<Mat> out) {
        out.setZero();
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          double s = 0.0;
          for (std::size_t k = 0; k < coef.size(); ++k)
            s -= coef[k] * freq[k] * std::sin(freq[k] * x(i) + phase[k]);
          out(i, i) = s;
        }
      };
    }
  }
  b.analytic_heat = [amplitude, alpha, levels, base, dim, time, tau](double more) {
    return weierstrass_impl(amplitude, alpha, levels, base, dim, time, tau + more);
  };
  return b;
}

double require(const FieldParams& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) throw DomainError("field parameter '" + key + "' is required");
  return it->second;
}

double optional(const FieldParams& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

}  // namespace

// f(x) = a (sin x_2, sin x_1): smooth, bounded, with off-diagonal Jacobian.
DriftField cross_sine_field(double amplitude) {
  DriftField b;
  b.name = "cross_sine";
  b.dim = 2;
  b.alpha = 1.0;
  b.spatial = [amplitude](double, Eigen::Ref<const Vec> x, Eigen::Ref<Vec> out) {
    out(0) = amplitude * std::sin(x(1));
    out(1) = amplitude * std::sin(x(0));
  };
  b.spatial_gradient = [amplitude](double, Eigen::Ref<const Vec> x, Eigen::Ref<Mat> out) {
    out << 0.0, amplitude * std::cos(x(1)), amplitude * std::cos(x(0)), 0.0;
  };
  b.spatial_sup_norm = std::abs(amplitude) * std::sqrt(2.0);
  b.spatial_holder_norm = 2.0 * b.spatial_sup_norm;
  return b;
}

DriftField sign_power_field(double alpha) {
  return sign_power_impl(alpha, TimeProfile::constant(), "sign_power");
}

DriftField counterexample_field(double alpha, double q_tilde) {
  if (!(q_tilde > 1.0)) throw DomainError("counterexample_field: q~ must exceed 1");
  DriftField b = sign_power_impl(alpha, TimeProfile::power_singularity(1.0 / q_tilde), "counterexample");
  b.q = q_tilde;
  return b;
}

DriftField counterexample_field_nd(double alpha, double q_tilde, int dim) {
  if (!(q_tilde > 1.0)) throw DomainError("counterexample_field_nd: q~ must exceed 1");
  if (!(alpha > -1.0 && alpha < 1.0) || alpha == 0.0)
    throw DomainError("counterexample_field_nd: alpha must lie in (-1,0) or (0,1)");
  DriftField b;
  b.name = "counterexample_nd";
  b.dim = dim;
  b.alpha = alpha;
  b.q = q_tilde;
  b.time = TimeProfile::power_singularity(1.0 / q_tilde);
  b.spatial = [alpha](double, Eigen::Ref<const Vec> x, Eigen::Ref<Vec> out) {
    out.setZero();
    const double r = x.norm();
    out(0) = r == 0.0 ? 0.0 : sgn(x(0)) * std::pow(r, alpha);
  };
  b.spatial_sup_norm = kInf;
  b.spatial_holder_norm = alpha > 0.0 ? std::pow(2.0, 1.0 - alpha) : 1.0;
  return b;
}

DriftField weierstrass_field(double alpha, int levels, int dim, TimeProfile time, int base_level,
                             double amplitude) {
  if (levels < 1) throw DomainError("weierstrass_field: need at least one level");
  if (!(alpha > -1.0 && alpha < 2.0)) throw DomainError("weierstrass_field: alpha must lie in (-1,2)");
  return weierstrass_impl(amplitude, alpha, levels, base_level, dim, std::move(time), 0.0);
}

DriftField shifted_field(const DriftField& b, const DiscretePath& shift) {
  if (shift.dim() != b.dim) throw DomainError("shifted_field: dimension mismatch");
  DriftField out = b;
  out.name = b.name + "(.+h)";
  out.analytic_heat = nullptr;
  const auto base = b.spatial;
  out.spatial = [base, shift](double t, Eigen::Ref<const Vec> x, Eigen::Ref<Vec> res) {
    const Vec y = x + shift.values.row(shift.grid.index_of(t)).transpose();
    base(t, y, res);
  };
  if (b.spatial_gradient) {
    const auto grad = *b.spatial_gradient;
    out.spatial_gradient = [grad, shift](double t, Eigen::Ref<const Vec> x, Eigen::Ref<Mat> res) {
      const Vec y = x + shift.values.row(shift.grid.index_of(t)).transpose();
      grad(t, y, res);
    };
  }
  return out;
}

DriftField sum_field(const DriftField& b1, const DriftField& b2) {
  if (b1.dim != b2.dim) throw DomainError("sum_field: dimension mismatch");
  if (!b1.pointwise() || !b2.pointwise()) throw DomainError("sum_field: both fields must be evaluable");
  DriftField out;
  out.name = b1.name + "+" + b2.name;
  out.dim = b1.dim;
  out.alpha = std::min(b1.alpha, b2.alpha);
  out.q = std::min(b1.q, b2.q);
  out.spatial_sup_norm = b1.spatial_sup_norm + b2.spatial_sup_norm;
  out.spatial_holder_norm = b1.spatial_holder_norm + b2.spatial_holder_norm;
  const bool shared_time = b1.time.description == b2.time.description;
  if (shared_time) out.time = b1.time;
  const TimeProfile t1 = b1.time, t2 = b2.time;
  const auto f1 = b1.spatial, f2 = b2.spatial;
  out.spatial = [=](double t, Eigen::Ref<const Vec> x, Eigen::Ref<Vec> res) {
    Vec tmp(res.size());
    f1(t, x, res);
    f2(t, x, tmp);
    if (shared_time)
      res += tmp;
    else
      res = t1.value(t) * res + t2.value(t) * tmp;
  };
  if (b1.spatial_gradient && b2.spatial_gradient) {
    const auto g1 = *b1.spatial_gradient, g2 = *b2.spatial_gradient;
    out.spatial_gradient = [=](double t, Eigen::Ref<const Vec> x, Eigen::Ref<Mat> res) {
      Mat tmp(res.rows(), res.cols());
      g1(t, x, res);
      g2(t, x, tmp);
      if (shared_time)
        res += tmp;
      else
        res = t1.value(t) * res + t2.value(t) * tmp;
    };
  }
  if (b1.analytic_heat && b2.analytic_heat) {
    const auto h1 = b1.analytic_heat, h2 = b2.analytic_heat;
    out.analytic_heat = [h1, h2](double tau) { return sum_field(h1(tau), h2(tau)); };
  }
  return out;
}

DriftField make_field(const std::string& name, const FieldParams& p) {
  const int dim = static_cast<int>(optional(p, "dim", 1.0));
  if (name == "zero") return zero_field(dim);
  if (name == "constant") return constant_field(Vec::Constant(dim, require(p, "c")));
  if (name == "linear") return linear_field(require(p, "slope"), dim);
  if (name == "sine") return sine_field(require(p, "amplitude"), optional(p, "frequency", 1.0), dim);
  if (name == "tanh") return tanh_field(require(p, "amplitude"), dim);
  if (name == "cross_sine") return cross_sine_field(require(p, "amplitude"));
  if (name == "bump") return bump_field(require(p, "amplitude"), optional(p, "width", 1.0));
  if (name == "sign_power") return sign_power_field(require(p, "alpha"));
  if (name == "counterexample") return counterexample_field(require(p, "alpha"), require(p, "q_tilde"));
  if (name == "counterexample_nd")
    return counterexample_field_nd(require(p, "alpha"), require(p, "q_tilde"), dim);
  if (name == "weierstrass") {
    TimeProfile time = TimeProfile::constant();
    if (p.count("time_exponent"))
      time = TimeProfile::power_singularity(require(p, "time_exponent"), optional(p, "time_origin", 0.0));
    return weierstrass_field(require(p, "alpha"), static_cast<int>(optional(p, "levels", 12.0)), dim, time,
                             static_cast<int>(optional(p, "base_level", 0.0)), optional(p, "amplitude", 1.0));
  }
  throw DomainError("unknown field '" + name + "'");
}

std::vector<std::string> field_parameters(const std::string& name) {
  if (name == "zero") return {"dim"};
  if (name == "constant") return {"dim", "c"};
  if (name == "linear") return {"dim", "slope"};
  if (name == "sine") return {"dim", "amplitude", "frequency"};
  if (name == "tanh") return {"dim", "amplitude"};
  if (name == "cross_sine") return {"amplitude"};
  if (name == "bump") return {"amplitude", "width"};
  if (name == "sign_power") return {"alpha"};
  if (name == "counterexample") return {"alpha", "q_tilde"};
  if (name == "counterexample_nd") return {"alpha", "q_tilde", "dim"};
  if (name == "weierstrass") return {"alpha", "amplitude", "levels", "base_level", "dim", "time_exponent", "time_origin"};
  throw DomainError("unknown field '" + name + "'");
}

std::vector<std::string> field_names() {
  return {"zero", "constant", "linear", "sine", "tanh", "cross_sine", "bump",
          "sign_power", "counterexample", "counterexample_nd", "weierstrass"};
}

}  // namespace fbmlab
