#include "fbmlab/estimators.hpp"

#include "fbmlab/fbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fbmlab {

namespace {

std::string joined(const std::vector<std::string>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "; " : "") << v[i];
  return os.str();
}

void require_regime(const RegimeReport& r, const char* where) {
  if (r.condition_a || r.condition_b) return;
  throw DomainError(std::string(where) + ": parameters outside the solvable regime (condition A: " +
                    joined(r.violations_a) + " | condition B: " + joined(r.violations_b) + ")");
}

}  // namespace

MomentEstimate moment_estimator(const Vec& samples, double m, int bootstrap_reps, std::uint64_t seed,
                                double level) {
  if (samples.size() == 0) throw DomainError("moment_estimator: empty sample");
  if (!(m >= 1.0) || std::isinf(m)) throw DomainError("moment_estimator: m must lie in [1, inf)");
  const Eigen::ArrayXd pw = samples.array().abs().pow(m);
  MomentEstimate est;
  est.m = m;
  est.samples = static_cast<int>(samples.size());
  est.value = std::pow(pw.mean(), 1.0 / m);
  if (bootstrap_reps < 2) {
    est.ci_low = est.ci_high = est.value;
    return est;
  }
  Rng rng(seed, "bootstrap");
  std::uniform_int_distribution<Eigen::Index> pick(0, samples.size() - 1);
  std::vector<double> reps(bootstrap_reps);
  for (int r = 0; r < bootstrap_reps; ++r) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < samples.size(); ++k) acc += pw(pick(rng.engine()));
    reps[r] = std::pow(acc / static_cast<double>(samples.size()), 1.0 / m);
  }
  const double tail = 0.5 * (1.0 - level);
  est.ci_low = quantile(reps, tail);
  est.ci_high = quantile(reps, 1.0 - tail);
  return est;
}

// Conditional regularity ----------------------------------------------------------

ConditionalIncrementStats conditional_regularity_exponent(const DriftField& b,
                                                          const ConditionalRegularityConfig& cfg) {
  ConditionalIncrementStats out;
  out.regime = classify_regime(cfg.hurst, cfg.q, cfg.alpha);
  require_regime(out.regime, "conditional_regularity_exponent");
  if (cfg.lags.empty()) throw DomainError("conditional_regularity_exponent: empty lag schedule");
  if (cfg.pasts < 1 || cfg.branches < 2)
    throw DomainError("conditional_regularity_exponent: need P >= 1 pasts and M >= 2 branches");
  const int n = cfg.grid.n_steps, s = cfg.s_index;
  for (int lag : cfg.lags)
    if (lag < 1 || s + lag > n) throw DomainError("conditional_regularity_exponent: lag leaves the grid");
  const Vec x0 = cfg.x0.size() ? cfg.x0 : Vec::Zero(b.dim);
  const int L = static_cast<int>(cfg.lags.size());
  const int max_lag = *std::max_element(cfg.lags.begin(), cfg.lags.end());
  out.pasts = cfg.pasts;
  out.branches = cfg.branches;
  out.m = cfg.m;
  out.predicted_slope = 1.0 / conjugate_exponent(cfg.q) + cfg.alpha * cfg.hurst;
  out.estimates.assign(L, 0.0);
  out.stderrs.assign(L, 0.0);

  // Truncated noise grid: only nodes up to s + max_lag are needed.
  const TimeGrid grid = cfg.grid;
  for (int p = 0; p < cfg.pasts; ++p) {
    const FbmPath past = sample_fbm(cfg.hurst, grid, b.dim, derive_seed(cfg.seed, "past", p));
    bool diverged = false;
    const Mat head = euler_from(b, past.as_path(), 0, x0, &diverged);
    if (diverged) throw DivergenceError("conditional_regularity_exponent: past solve overflowed");
    const Vec xs = head.row(s).transpose();
    const auto futures = branch_futures(past, s, cfg.branches, derive_seed(cfg.seed, "branches", p));
    // phi at each lag, one row per branch, per component
    std::vector<Mat> phi(L, Mat(cfg.branches, b.dim));
    for (int k = 0; k < cfg.branches; ++k) {
      DiscretePath noise(futures[k].grid, futures[k].values);
      // stop integrating after the last lag
      Mat acc;
      {
        DiscretePath cut(TimeGrid(s + max_lag, grid.node(s + max_lag)),
                         noise.values.topRows(s + max_lag + 1));
        euler_from(b, cut, s, xs, &diverged, &acc);
      }
      if (diverged) throw DivergenceError("conditional_regularity_exponent: branch solve overflowed");
      for (int l = 0; l < L; ++l) phi[l].row(k) = acc.row(cfg.lags[l]);
    }
    for (int l = 0; l < L; ++l) {
      const Eigen::RowVectorXd mean = phi[l].colwise().mean();
      const Eigen::ArrayXd dev = (phi[l].rowwise() - mean).rowwise().norm().array().pow(cfg.m);
      const double mom = dev.mean();
      const double est = std::pow(mom, 1.0 / cfg.m);
      if (est > out.estimates[l] || p == 0) {
        out.estimates[l] = est;
        const double se_mom = std::sqrt((dev - mom).square().sum() / (dev.size() - 1) / dev.size());
        out.stderrs[l] = mom > 0.0 ? est * se_mom / (cfg.m * mom) : 0.0;
      }
    }
  }

  const double qq = cfg.q;
  const ControlFn w = std::isinf(qq) ? ControlFn{} : drift_control(
      [&] { DriftField c = b; c.q = qq; return c; }(), true);
  for (int l = 0; l < L; ++l) {
    const double ts = grid.node(s), tt = grid.node(s + cfg.lags[l]);
    out.lags.push_back(tt - ts);
    if (std::isinf(qq)) {
      out.crude_bounds.push_back(2.0 * (tt - ts) * b.spatial_sup_norm);
    } else {
      out.crude_bounds.push_back(2.0 * std::pow(w(ts, tt), 1.0 / qq) *
                                 std::pow(tt - ts, 1.0 / conjugate_exponent(qq)));
    }
    if (out.estimates[l] > 0.0)
      out.max_relative_se = std::max(out.max_relative_se, out.stderrs[l] / out.estimates[l]);
  }
  out.budget_flag = out.max_relative_se > 0.2;
  out.exact_zero = std::all_of(out.estimates.begin(), out.estimates.end(), [](double e) { return e == 0.0; });
  out.fit = fit_loglog(out.lags, out.estimates);
  out.fit.samples_per_point = static_cast<long long>(cfg.pasts) * cfg.branches;
  return out;
}

// rho-irregularity -----------------------------------------------------------------

std::complex<double> oscillatory_integral(const DiscretePath& path, int s_index, int t_index,
                                          const Vec& xi) {
  if (xi.size() != path.dim()) throw DomainError("oscillatory_integral: xi dimension mismatch");
  if (s_index < 0 || t_index > path.grid.n_steps || s_index > t_index)
    throw DomainError("oscillatory_integral: bad window");
  if (s_index == t_index) return {0.0, 0.0};
  const Vec phase = path.values.middleRows(s_index, t_index - s_index + 1) * xi;
  const Eigen::Index m = phase.size();
  double re = 0.5 * (std::cos(phase(0)) + std::cos(phase(m - 1)));
  double im = 0.5 * (std::sin(phase(0)) + std::sin(phase(m - 1)));
  for (Eigen::Index k = 1; k + 1 < m; ++k) {
    re += std::cos(phase(k));
    im += std::sin(phase(k));
  }
  return {re * path.grid.dt(), im * path.grid.dt()};
}

RhoIrregularityConfig resolution_band(double hurst, int n_steps, int cap) {
  RhoIrregularityConfig cfg;
  cfg.band_hi = std::min(cap, static_cast<int>(std::floor(hurst * std::log2(static_cast<double>(n_steps)))));
  cfg.band_lo = std::max(1, cfg.band_hi - 4);
  if (cfg.band_hi <= cfg.band_lo) throw DomainError("resolution_band: grid too coarse for a xi band");
  return cfg;
}

RhoIrregularityReport rho_irregularity(const std::vector<DiscretePath>& paths,
                                       const RhoIrregularityConfig& cfg) {
  if (paths.empty()) throw DomainError("rho_irregularity: no paths");
  if (cfg.band_hi <= cfg.band_lo || cfg.mags_per_band < 1 || cfg.directions < 1)
    throw DomainError("rho_irregularity: bad band configuration");
  const int d = paths.front().dim();
  const TimeGrid grid = paths.front().grid;
  Rng rng(cfg.seed, "rho-directions");
  Mat dirs = rng.gaussian_matrix(cfg.directions, d);
  for (Eigen::Index k = 0; k < dirs.rows(); ++k) dirs.row(k).normalize();

  RhoIrregularityReport rep;
  std::vector<double> mags;
  for (int k = cfg.band_lo; k <= cfg.band_hi; ++k) {
    double c = 0.0;
    for (int j = 0; j < cfg.mags_per_band; ++j) c += std::ldexp(1.0 + double(j) / cfg.mags_per_band, k);
    rep.band_centers.push_back(c / cfg.mags_per_band);
  }
  const int bands = static_cast<int>(rep.band_centers.size());
  rep.mean_band_rms.assign(bands, 0.0);
  const int n = grid.n_steps;

  std::vector<double> rhos, gammas;
  for (const auto& path : paths) {
    if (path.dim() != d || !(path.grid == grid)) throw DomainError("rho_irregularity: paths must share grid and dimension");
    std::vector<double> rms(bands, 0.0);
    for (int bi = 0; bi < bands; ++bi) {
      const int k = cfg.band_lo + bi;
      double acc = 0.0;
      for (int j = 0; j < cfg.mags_per_band; ++j) {
        const double mag = std::ldexp(1.0 + double(j) / cfg.mags_per_band, k);
        for (Eigen::Index r = 0; r < dirs.rows(); ++r) {
          const double v = std::abs(oscillatory_integral(path, 0, n, mag * dirs.row(r).transpose()));
          acc += v * v;
          rep.max_bound_ratio = std::max(rep.max_bound_ratio, v / grid.horizon);
        }
      }
      rms[bi] = std::sqrt(acc / (cfg.mags_per_band * dirs.rows()));
      rep.mean_band_rms[bi] += rms[bi] / static_cast<double>(paths.size());
    }
    RhoPathResult res;
    const ScalingFit fit = fit_loglog(rep.band_centers, rms);
    res.rho = -fit.slope;
    res.rho_r2 = fit.r_squared;

    // gamma: sup over a few xi of |xi|^rho |Phi_{s,t}| on dyadic windows.
    std::vector<double> lens, sups;
    const int ndir = std::min<int>(4, static_cast<int>(dirs.rows()));
    for (int lev = 0; lev < cfg.gamma_levels; ++lev) {
      const int windows = 1 << lev, width = n / windows;
      if (width < 2) break;
      double mean_sup = 0.0;
      for (int w = 0; w < windows; ++w) {
        double sup = 0.0;
        for (double c : rep.band_centers)
          for (int r = 0; r < ndir; ++r) {
            const double v = std::abs(oscillatory_integral(path, w * width, (w + 1) * width,
                                                           c * dirs.row(r).transpose()));
            rep.max_bound_ratio = std::max(rep.max_bound_ratio, v / (width * grid.dt()));
            sup = std::max(sup, std::pow(c, res.rho) * v);
          }
        mean_sup += sup / windows;
      }
      lens.push_back(width * grid.dt());
      sups.push_back(mean_sup);
    }
    if (lens.size() >= 2) res.gamma = fit_loglog(lens, sups).slope;
    rhos.push_back(res.rho);
    gammas.push_back(res.gamma);
    rep.per_path.push_back(res);
  }
  rep.median_rho = median(rhos);
  rep.q25_rho = quantile(rhos, 0.25);
  rep.q75_rho = quantile(rhos, 0.75);
  rep.median_gamma = median(gammas);
  return rep;
}

// Stability -----------------------------------------------------------------------

namespace {

double sup_distance(const Mat& a, const Mat& b) { return (a - b).rowwise().norm().maxCoeff(); }

void finish_stability(StabilityReport& rep, const std::vector<Vec>& samples) {
  for (const Vec& v : samples) {
    rep.mean_distance.push_back(sample_mean(v));
    rep.stderrs.push_back(standard_error(v));
  }
  rep.fit = fit_loglog(rep.magnitudes, rep.mean_distance);
}

}  // namespace

StabilityReport stability_initial(const DriftField& b, const StabilityConfig& cfg) {
  StabilityReport rep;
  rep.regime = classify_regime(cfg.hurst, b.q, b.alpha);
  require_regime(rep.regime, "stability_initial");
  if (cfg.perturbations.empty() || cfg.replicates < 2) throw DomainError("stability_initial: empty budget");
  const Vec x0 = cfg.x0.size() ? cfg.x0 : Vec::Zero(b.dim);
  const Vec dir = Vec::Constant(b.dim, 1.0 / std::sqrt(static_cast<double>(b.dim)));
  std::vector<Vec> samples(cfg.perturbations.size(), Vec(cfg.replicates));
  for (int r = 0; r < cfg.replicates; ++r) {
    const DiscretePath noise =
        sample_fbm(cfg.hurst, cfg.grid, b.dim, derive_seed(cfg.seed, "stability-noise", r)).as_path();
    bool div = false;
    const Mat base = euler_from(b, noise, 0, x0, &div);
    if (div) throw DivergenceError("stability_initial: base solve overflowed");
    for (std::size_t k = 0; k < cfg.perturbations.size(); ++k)
      samples[k](r) = sup_distance(base, euler_from(b, noise, 0, x0 + cfg.perturbations[k] * dir));
  }
  rep.magnitudes = cfg.perturbations;
  finish_stability(rep, samples);
  return rep;
}

StabilityReport stability_drift(const DriftField& b, const StabilityConfig& cfg) {
  StabilityReport rep;
  rep.regime = classify_regime(cfg.hurst, b.q, b.alpha);
  require_regime(rep.regime, "stability_drift");
  if (cfg.perturbations.empty() || cfg.replicates < 2) throw DomainError("stability_drift: empty budget");
  const Vec x0 = cfg.x0.size() ? cfg.x0 : Vec::Zero(b.dim);
  std::vector<DriftField> perturbed;
  Mat lattice(9, b.dim);
  for (int i = 0; i < 9; ++i) lattice.row(i).setConstant(-2.0 + 0.5 * i);
  for (double c : cfg.perturbations) {
    perturbed.push_back(sum_field(b, constant_field(Vec::Constant(b.dim, c))));
    const double beta = b.alpha - 1.0;
    double dist;
    if (beta < 0.0) {
      dist = negative_holder_distance(b, perturbed.back(), beta, lattice, 0.0);
    } else {
      dist = 0.0;
      for (Eigen::Index i = 0; i < lattice.rows(); ++i) {
        const Vec x = lattice.row(i).transpose();
        dist = std::max(dist, (b.value(0.0, x) - perturbed.back().value(0.0, x)).norm());
      }
    }
    rep.magnitudes.push_back(dist);
  }
  std::vector<Vec> samples(perturbed.size(), Vec(cfg.replicates));
  for (int r = 0; r < cfg.replicates; ++r) {
    const DiscretePath noise =
        sample_fbm(cfg.hurst, cfg.grid, b.dim, derive_seed(cfg.seed, "stability-noise", r)).as_path();
    bool div = false;
    const Mat base = euler_from(b, noise, 0, x0, &div);
    if (div) throw DivergenceError("stability_drift: base solve overflowed");
    for (std::size_t k = 0; k < perturbed.size(); ++k)
      samples[k](r) = sup_distance(base, euler_from(perturbed[k], noise, 0, x0));
  }
  finish_stability(rep, samples);
  return rep;
}

// Counterexample -----------------------------------------------------------------

namespace {

Mat solve_counterexample(const DriftField& b, const DiscretePath& noise, double x) {
  bool div = false;
  Mat path = euler_from(b, noise, 0, Vec::Constant(1, x), &div);
  if (div) throw DivergenceError("counterexample: solve overflowed");
  return path;
}

// First grid time in (0, T] where sign * X_t < delta t^gamma; +inf if never.
double envelope_exit(const Mat& X, const TimeGrid& grid, double sign, double delta, double gamma) {
  for (int i = 1; i <= grid.n_steps; ++i) {
    const double t = grid.node(i);
    if (sign * X(i, 0) < delta * std::pow(t, gamma)) return t;
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace

CounterexampleReport counterexample_branching(const CounterexampleConfig& cfg) {
  CounterexampleReport rep;
  rep.regime = classify_regime(cfg.hurst, cfg.q_tilde, cfg.alpha);
  const double qc = conjugate_exponent(cfg.q_tilde);
  rep.gamma = 1.0 / (qc * (1.0 - cfg.alpha));
  std::vector<std::string> why;
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) why.push_back("alpha must lie in (0,1)");
  if (!(cfg.alpha < rep.regime.threshold)) {
    std::ostringstream os;
    os << "alpha = " << cfg.alpha << " must be < 1 - 1/(H q~') = " << rep.regime.threshold
       << " (parameters are not supercritical)";
    why.push_back(os.str());
  }
  if (!(rep.gamma < cfg.hurst)) {
    std::ostringstream os;
    os << "gamma = 1/(q~'(1-alpha)) = " << rep.gamma << " must be < H = " << cfg.hurst;
    why.push_back(os.str());
  }
  if (!(std::pow(cfg.delta, cfg.alpha) / rep.gamma > 2.0 * cfg.delta)) {
    std::ostringstream os;
    os << "delta = " << cfg.delta << " must satisfy delta^alpha / gamma > 2 delta";
    why.push_back(os.str());
  }
  if (!why.empty()) throw DomainError("counterexample_branching: " + joined(why));
  if (cfg.rho_scan.empty() || cfg.x_sequence.empty() || cfg.paths < 1)
    throw DomainError("counterexample_branching: empty scan");
  for (double x : cfg.x_sequence)
    if (!(x > 0.0)) throw DomainError("counterexample_branching: x_n must be positive");

  const DriftField b = counterexample_field(cfg.alpha, cfg.q_tilde);
  rep.rho_scan = cfg.rho_scan;
  rep.x_sequence = cfg.x_sequence;
  const int X = static_cast<int>(cfg.x_sequence.size()), R = static_cast<int>(cfg.rho_scan.size());
  rep.upper_fraction = Mat::Zero(X, R);
  rep.lower_fraction = Mat::Zero(X, R);
  for (int p = 0; p < cfg.paths; ++p) {
    const DiscretePath noise =
        sample_fbm(cfg.hurst, cfg.grid, 1, derive_seed(cfg.seed, "counterexample-noise", p)).as_path();
    const DiscretePath flipped(noise.grid, -noise.values);
    for (int xi = 0; xi < X; ++xi) {
      const double x = cfg.x_sequence[xi];
      const Mat up = solve_counterexample(b, noise, x);
      const Mat down = solve_counterexample(b, noise, -x);
      const double exit_up = envelope_exit(up, cfg.grid, 1.0, cfg.delta, rep.gamma);
      const double exit_down = envelope_exit(down, cfg.grid, -1.0, cfg.delta, rep.gamma);
      for (int r = 0; r < R; ++r) {
        if (exit_up > cfg.rho_scan[r]) rep.upper_fraction(xi, r) += 1.0;
        if (exit_down > cfg.rho_scan[r]) rep.lower_fraction(xi, r) += 1.0;
      }
      if (p == 0) {
        const Mat mirror = solve_counterexample(b, flipped, -x);
        rep.mirror_residual = std::max(rep.mirror_residual, (mirror + up).cwiseAbs().maxCoeff());
      }
    }
  }
  rep.upper_fraction /= cfg.paths;
  rep.lower_fraction /= cfg.paths;
  // Scan order is free; pick the largest rho whose worst case clears 3/4.
  int best = -1;
  for (int r = 0; r < R; ++r) {
    const double worst = std::min(rep.upper_fraction.col(r).minCoeff(), rep.lower_fraction.col(r).minCoeff());
    if (worst >= 0.75 && (best < 0 || cfg.rho_scan[r] > cfg.rho_scan[best])) best = r;
  }
  if (best < 0)
    best = static_cast<int>(std::min_element(cfg.rho_scan.begin(), cfg.rho_scan.end()) - cfg.rho_scan.begin());
  rep.best_rho = cfg.rho_scan[best];
  rep.best_upper = rep.upper_fraction.col(best).minCoeff();
  rep.best_lower = rep.lower_fraction.col(best).minCoeff();
  return rep;
}

GapReport counterexample_gap(const CounterexampleConfig& cfg) {
  GapReport rep;
  rep.regime = classify_regime(cfg.hurst, cfg.q_tilde, cfg.alpha);
  if (cfg.x_sequence.empty() || cfg.paths < 2) throw DomainError("counterexample_gap: empty budget");
  const DriftField b = counterexample_field(cfg.alpha, cfg.q_tilde);
  rep.x_sequence = cfg.x_sequence;
  std::vector<Vec> samples(cfg.x_sequence.size(), Vec(cfg.paths));
  for (int p = 0; p < cfg.paths; ++p) {
    const DiscretePath noise =
        sample_fbm(cfg.hurst, cfg.grid, 1, derive_seed(cfg.seed, "gap-noise", p)).as_path();
    for (std::size_t k = 0; k < cfg.x_sequence.size(); ++k) {
      const double x = cfg.x_sequence[k];
      samples[k](p) = sup_distance(solve_counterexample(b, noise, x), solve_counterexample(b, noise, -x));
    }
  }
  for (const Vec& v : samples) {
    rep.gap.push_back(sample_mean(v));
    rep.gap_se.push_back(standard_error(v));
  }
  return rep;
}

}  // namespace fbmlab
