#include "fbmlab/experiments.hpp"

#include "fbmlab/drift.hpp"
#include "fbmlab/estimators.hpp"
#include "fbmlab/fbm.hpp"
#include "fbmlab/mckean_vlasov.hpp"
#include "fbmlab/sde.hpp"
#include "fbmlab/stats.hpp"
#include "fbmlab/transport.hpp"
#include "fbmlab/young.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace fbmlab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Catalog --------------------------------------------------------------------

std::vector<ExperimentInfo> build_catalog() {
  return {
      {"lnd-constant", 1,
       "Var(B_t - E_s B_t) / |t-s|^{2H} is a constant c_H (local nondeterminism); c_{1/2} = 1",
       {"hurst", "n_steps", "s_min", "s_stride", "lag_levels"},
       {}},
      {"fbm-law", 2, "Cholesky samples reproduce the fBm covariance entrywise",
       {"hurst", "n_steps", "paths"},
       {}},
      {"sewing-convergence", 3,
       "dyadic sewing of a Young germ converges geometrically to the Riemann-Stieltjes integral",
       {"n_steps", "max_level", "oracle_points"},
       {}},
      {"pvar-oracle", 4, "the p-variation DP equals exhaustive partition search",
       {"cases", "points", "p"},
       {}},
      {"affine-young-bound", 5, "affine Young solutions obey sup|x| <= C e^{C [[A]]^p} (|x0| + [[z]])",
       {"cases", "n_steps", "dim", "p", "p_tilde", "hurst_a", "hurst_z", "scale_min", "scale_max"},
       {}},
      {"conditional-regularity", 6,
       "||phi_t - E_s phi_t||_{L^m|F_s} scales like |t-s|^{1/q' + alpha H}",
       {"hurst", "q", "alpha", "m", "n_steps", "s_time", "lags", "pasts", "branches", "x0"},
       {"field"}},
      {"stability-rate", 7, "solutions depend Lipschitz-continuously on x0 and on the drift",
       {"hurst", "q", "alpha", "n_steps", "replicates", "x0", "perturbations"},
       {"field"}},
      {"mollified-cauchy", 8,
       "solutions for heat-mollified distributional drifts form a Cauchy family",
       {"hurst", "q", "alpha", "n_steps", "replicates", "levels", "x0"},
       {"field"}},
      {"flow-jacobian", 9,
       "the solution map is a semiflow whose Jacobian solves the variational equation and is invertible",
       {"hurst", "n_steps", "s_list", "t_list", "lattice_points", "lattice_radius", "fd_step", "tolerance"},
       {"field"}},
      {"malliavin", 10, "the noise-direction derivative solves the affine variational equation",
       {"hurst", "n_steps", "x0", "eps"},
       {"field"}},
      {"rho-irregularity", 11, "fBm paths are rho-irregular for every rho < 1/(2H)",
       {"hurst", "n_steps", "dim", "paths", "directions", "mags_per_band", "band_cap", "gamma_levels"},
       {}},
      {"counterexample", 12,
       "supercritical drifts split solutions from 0 into upper and lower branches with probability >= 3/4",
       {"hurst", "q_tilde", "alpha", "delta", "n_steps", "paths", "x_exponents", "rho_scan", "control_hurst",
        "control_q_tilde", "control_alpha"},
       {}},
      {"mckean-vlasov", 13, "the Picard map on laws is a contraction in the weighted W1 metric",
       {"hurst", "q", "alpha", "n_steps", "particles", "iterations", "x0", "x0_sd", "stride"},
       {"field", "interaction"}},
      {"transport", 14,
       "characteristics solve transport and continuity equations with mass conservation and duality",
       {"hurst", "levels", "lattice_min", "lattice_max", "lattice_points"},
       {"field"}},
  };
}

// Config helpers ---------------------------------------------------------------

struct P {
  const Config& cfg;
  double num(const std::string& k) const { return cfg.number("params", k); }
  int integer(const std::string& k) const { return cfg.integer("params", k); }
  std::vector<double> nums(const std::string& k) const { return cfg.numbers("params", k); }
  std::vector<int> ints(const std::string& k) const { return cfg.integers("params", k); }
  Vec vec(const std::string& k) const {
    const auto v = nums(k);
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
};

std::uint64_t seed_of(const Config& cfg) { return cfg.unsigned_integer("experiment", "seed"); }

DriftField field_from(const Config& cfg, const std::string& section) {
  const std::string name = cfg.raw(section, "name");
  FieldParams params;
  for (const auto& k : field_parameters(name)) params[k] = cfg.number(section, k);
  return make_field(name, params);
}

void check(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

void positive_int(const P& p, const std::string& k, int min = 1) {
  check(p.integer(k) >= min, "params." + k + " must be >= " + std::to_string(min));
}

void hurst_in_unit(double h, const std::string& k) {
  check(h > 0.0 && h < 1.0, "params." + k + " must lie in (0,1)");
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : "; ") + s;
  return out;
}

/// Regime gate shared by the drift experiments.
void require_regime(double h, double q, double alpha, bool allow_b, const std::string& who) {
  const RegimeReport r = classify_regime(h, q, alpha);
  if (r.condition_a || (allow_b && r.condition_b)) return;
  std::string msg = who + ": (H, q, alpha) outside the admissible regime: " + join(r.violations_a);
  if (allow_b) msg += " | condition B: " + join(r.violations_b);
  throw ValidationError(msg);
}

/// The declared class (q, alpha) of a run replaces the factory defaults.
DriftField declared(DriftField b, double q, double alpha) {
  b.q = q;
  b.alpha = alpha;
  return b;
}

json fit_json(const ScalingFit& f) {
  return {{"slope", f.slope}, {"stderr", f.stderr_slope}, {"r2", f.r_squared}, {"intercept", f.intercept},
          {"points", f.n_points}, {"degenerate", f.degenerate}};
}

void set_fit(json& s, const ScalingFit& f) {
  s["slope"] = f.slope;
  s["stderr"] = f.stderr_slope;
  s["r2"] = f.r_squared;
}

std::string hurst_label(double h) {
  std::ostringstream os;
  os << "H=" << h;
  return os.str();
}

// 1. lnd-constant -----------------------------------------------------------------

ExperimentOutput run_lnd(const Config& cfg) {
  const P p{cfg};
  const TimeGrid grid(p.integer("n_steps"));
  const int s0 = static_cast<int>(std::ceil(p.num("s_min") * grid.n_steps));
  const int stride = p.integer("s_stride"), levels = p.integer("lag_levels");
  ExperimentOutput out;
  json per_h = json::array();
  double max_cv = 0.0, max_dev = 0.0, half_error = std::nan("");
  bool first = true;
  for (double h : p.nums("hurst")) {
    const auto factor = fbm_factor(h, grid);
    std::vector<double> all, lag_x, lag_var;
    for (int k = 0; k < levels; ++k) {
      const int lag = 1 << k;
      std::vector<double> ratios;
      for (int s = s0; s + lag <= grid.n_steps; s += stride) {
        const double v = conditional_variance(*factor, s, s + lag);
        ratios.push_back(v / std::pow(lag * grid.dt(), 2.0 * h));
      }
      if (ratios.empty()) continue;
      const Vec r = Eigen::Map<const Vec>(ratios.data(), static_cast<Eigen::Index>(ratios.size()));
      out.points.push_back({hurst_label(h), lag * grid.dt(), r.mean(), std::sqrt(sample_variance(r))});
      lag_x.push_back(lag * grid.dt());
      lag_var.push_back(r.mean() * std::pow(lag * grid.dt(), 2.0 * h));
      all.insert(all.end(), ratios.begin(), ratios.end());
    }
    if (all.empty()) throw DomainError("lnd-constant: no interior pairs for the chosen grid");
    const Vec a = Eigen::Map<const Vec>(all.data(), static_cast<Eigen::Index>(all.size()));
    const double mean = a.mean(), sd = std::sqrt(sample_variance(a)), med = median(all);
    const double dev = (a.array() - med).abs().maxCoeff() / med;
    const double cv = sd / mean;
    const ScalingFit fit = fit_loglog(lag_x, lag_var);
    per_h.push_back({{"hurst", h},
                     {"c_mean", mean},
                     {"c_median", med},
                     {"cv", cv},
                     {"max_relative_deviation_from_median", dev},
                     {"max_over_min", a.maxCoeff() / a.minCoeff()},
                     {"pairs", all.size()},
                     {"variance_fit", fit_json(fit)}});
    if (first) set_fit(out.summary, fit);
    first = false;
    max_cv = std::max(max_cv, cv);
    max_dev = std::max(max_dev, dev);
    if (h == 0.5) half_error = (a.array() - 1.0).abs().maxCoeff();
  }
  out.summary["per_hurst"] = per_h;
  out.summary["budget"] = grid.n_steps;
  out.summary["headline"] = {{"max_cv", max_cv},
                             {"max_relative_deviation_from_median", max_dev},
                             {"half_max_abs_error", half_error}};
  return out;
}

// 2. fbm-law ------------------------------------------------------------------------

ExperimentOutput run_fbm_law(const Config& cfg) {
  const P p{cfg};
  const double h = p.num("hurst");
  const TimeGrid grid(p.integer("n_steps"));
  const int paths = p.integer("paths"), n = grid.n_steps;
  const std::uint64_t seed = seed_of(cfg);
  Mat sum = Mat::Zero(n, n), sum_sq = Mat::Zero(n, n);
  for (int k = 0; k < paths; ++k) {
    const FbmPath path = sample_fbm(h, grid, 1, derive_seed(seed, "fbm-law", static_cast<std::uint64_t>(k)));
    const Vec x = path.values.col(0).tail(n);
    const Mat prod = x * x.transpose();
    sum += prod;
    sum_sq += prod.cwiseAbs2();
  }
  const double N = paths;
  const Mat emp = sum / N;
  const Mat var = ((sum_sq / N) - emp.cwiseAbs2()) * (N / (N - 1.0));
  const Mat se = (var / N).cwiseSqrt();
  const Mat exact = fbm_grid_covariance(h, grid);
  double max_z = 0.0, max_err = 0.0;
  int beyond = 0, entries = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double z = std::abs(emp(i, j) - exact(i, j)) / se(i, j);
      max_z = std::max(max_z, z);
      max_err = std::max(max_err, std::abs(emp(i, j) - exact(i, j)));
      beyond += z > 3.0;
      ++entries;
    }
  ExperimentOutput out;
  for (int i = 0; i < n; ++i) {
    out.points.push_back({"empirical_variance", grid.node(i + 1), emp(i, i), se(i, i)});
    out.points.push_back({"closed_form_variance", grid.node(i + 1), exact(i, i), 0.0});
  }
  std::vector<double> t, v;
  for (int i = 0; i < n; ++i) {
    t.push_back(grid.node(i + 1));
    v.push_back(emp(i, i));
  }
  set_fit(out.summary, fit_loglog(t, v));
  out.summary["budget"] = paths;
  out.summary["headline"] = {{"max_abs_z", max_z},
                             {"entries_beyond_3se", beyond},
                             {"entries", entries},
                             {"expected_beyond_3se", 0.0027 * entries},
                             {"max_abs_error", max_err}};
  return out;
}

// 3. sewing-convergence -------------------------------------------------------------

ExperimentOutput run_sewing(const Config& cfg) {
  const P p{cfg};
  const TimeGrid grid(p.integer("n_steps"));
  const int max_level = p.integer("max_level"), oracle_points = p.integer("oracle_points");
  auto f = [](double t) { return std::cos(3.0 * t); };
  auto g = [](double t) { return std::sin(2.0 * t); };
  Germ germ = riemann_germ(f, g);
  germ.eps1 = 1.0;
  const SewResult res = sew(germ, grid, 0, grid.n_steps, max_level, 0.0);
  // A germ with a coboundary defect: same limit, defect 2(u-s)(t-u) per split.
  Germ bumped = germ;
  bumped.A = [A = germ.A](double s, double t) {
    Vec v = A(s, t);
    v.array() += (t - s) * (t - s);
    return v;
  };
  const SewResult res2 = sew(bumped, grid, 0, grid.n_steps, max_level, 0.0);

  double oracle = 0.0;
  for (int k = 0; k < oracle_points; ++k) {
    const double s = grid.horizon * k / oracle_points, t = grid.horizon * (k + 1) / oracle_points;
    oracle += f(s) * (g(t) - g(s));
  }
  // int_0^T cos(3r) 2 cos(2r) dr = sin(5T)/5 + sin(T).
  const double exact = std::sin(5.0 * grid.horizon) / 5.0 + std::sin(grid.horizon);

  ExperimentOutput out;
  std::vector<double> widths, deltas;
  for (std::size_t k = 0; k < res.diagnostics.total_deltas.size(); ++k) {
    const double w = grid.dt() / std::ldexp(1.0, static_cast<int>(k));
    out.points.push_back({"riemann_germ", w, res.diagnostics.total_deltas[k], 0.0});
    widths.push_back(w);
    deltas.push_back(res.diagnostics.total_deltas[k]);
  }
  for (std::size_t k = 0; k < res2.diagnostics.total_deltas.size(); ++k)
    out.points.push_back(
        {"coboundary_germ", grid.dt() / std::ldexp(1.0, static_cast<int>(k)), res2.diagnostics.total_deltas[k], 0.0});
  set_fit(out.summary, fit_loglog(widths, deltas));
  out.summary["budget"] = oracle_points;
  out.summary["headline"] = {{"decay_rate", res.diagnostics.decay_rate},
                             {"decay_r2", res.diagnostics.decay_r2},
                             {"predicted_rate", germ.eps1},
                             {"coboundary_decay_rate", res2.diagnostics.decay_rate},
                             {"sewing_value", res.increment(0)},
                             {"oracle_value", oracle},
                             {"oracle_abs_difference", std::abs(res.increment(0) - oracle)},
                             {"exact_integral", exact},
                             {"exact_abs_difference", std::abs(res.increment(0) - exact)}};
  return out;
}

// 4. pvar-oracle ---------------------------------------------------------------------

/// Best partition sum by enumerating every subset of interior points.
double brute_force_pvar_sum(const Mat& x, double p) {
  const int n = static_cast<int>(x.rows());
  double best = 0.0;
  for (unsigned mask = 0; mask < (1u << (n - 2)); ++mask) {
    double sum = 0.0;
    int prev = 0;
    for (int i = 1; i < n; ++i) {
      if (i < n - 1 && !(mask & (1u << (i - 1)))) continue;
      sum += std::pow((x.row(i) - x.row(prev)).norm(), p);
      prev = i;
    }
    best = std::max(best, sum);
  }
  return best;
}

ExperimentOutput run_pvar(const Config& cfg) {
  const P p{cfg};
  const int cases = p.integer("cases"), points = p.integer("points");
  const std::uint64_t seed = seed_of(cfg);
  int mismatches = 0, greedy_above = 0, comparisons = 0;
  double max_diff = 0.0;
  ExperimentOutput out;
  for (double pe : p.nums("p")) {
    for (int c = 0; c < cases; ++c) {
      Rng rng(seed, "pvar-case", static_cast<std::uint64_t>(c));
      Mat x(points, 2);
      x.row(0).setZero();
      for (int i = 1; i < points; ++i) x.row(i) = x.row(i - 1) + rng.gaussian_vector(2).transpose();
      const PVarResult dp = p_variation(x, pe);
      const double brute = brute_force_pvar_sum(x, pe);
      const PVarResult greedy = p_variation(x, pe, PVarMethod::greedy);
      mismatches += dp.sum != brute;
      greedy_above += greedy.sum > dp.sum;
      max_diff = std::max(max_diff, std::abs(dp.sum - brute));
      ++comparisons;
      out.points.push_back({"p=" + std::to_string(pe).substr(0, 4), brute, dp.sum, 0.0});
    }
  }
  out.summary["slope"] = 1.0;
  out.summary["stderr"] = 0.0;
  out.summary["r2"] = 1.0;
  out.summary["budget"] = comparisons;
  out.summary["headline"] = {{"comparisons", comparisons},
                             {"mismatches", mismatches},
                             {"max_abs_difference", max_diff},
                             {"greedy_above_exact", greedy_above}};
  return out;
}

// 5. affine-young-bound ---------------------------------------------------------------

ExperimentOutput run_affine(const Config& cfg) {
  const P p{cfg};
  const int cases = p.integer("cases"), d = p.integer("dim");
  const TimeGrid grid(p.integer("n_steps"));
  const double pa = p.num("p"), pz = p.num("p_tilde"), lo = p.num("scale_min"), hi = p.num("scale_max");
  const std::uint64_t seed = seed_of(cfg);
  std::vector<double> v, logsup;
  int blow_ups = 0;
  double max_c = 0.0;
  bool all_finite = true;
  ExperimentOutput out;
  for (int c = 0; c < cases; ++c) {
    const double sigma = cases > 1 ? lo + (hi - lo) * c / (cases - 1) : lo;
    const FbmPath a = sample_fbm(p.num("hurst_a"), grid, d * d, derive_seed(seed, "affine-A", c));
    const FbmPath z = sample_fbm(p.num("hurst_z"), grid, d, derive_seed(seed, "affine-z", c));
    MatrixPath A;
    A.grid = grid;
    for (int i = 0; i <= grid.n_steps; ++i)
      A.values.push_back(sigma * Eigen::Map<const Mat>(Eigen::RowVectorXd(a.values.row(i)).data(), d, d));
    const Vec x0 = Vec::Ones(d) / std::sqrt(static_cast<double>(d));
    const AffineYoungResult r = solve_affine_young(A, z.as_path(), x0, pa, pz);
    blow_ups += r.blow_up;
    all_finite = all_finite && std::isfinite(r.sup_norm);
    max_c = std::max(max_c, r.measured_c);
    v.push_back(r.a_pvar_p);
    logsup.push_back(std::log(r.sup_norm));
    out.points.push_back({"log_sup_norm", r.a_pvar_p, std::log(r.sup_norm), 0.0});
  }
  const ScalingFit fit = fit_line(v, logsup);
  set_fit(out.summary, fit);
  out.divergence = blow_ups > 0;
  out.summary["budget"] = cases;
  out.summary["headline"] = {{"slope", fit.slope},   {"r2", fit.r_squared},        {"blow_ups", blow_ups},
                             {"all_finite", all_finite}, {"max_measured_c", max_c}, {"max_a_pvar_p", *std::max_element(v.begin(), v.end())}};
  return out;
}

// 6. conditional-regularity ---------------------------------------------------------

ExperimentOutput run_conditional(const Config& cfg) {
  const P p{cfg};
  ConditionalRegularityConfig c;
  c.hurst = p.num("hurst");
  c.q = p.num("q");
  c.alpha = p.num("alpha");
  c.m = p.num("m");
  c.grid = TimeGrid(p.integer("n_steps"));
  c.s_index = c.grid.index_of(p.num("s_time"));
  c.lags = p.ints("lags");
  c.pasts = p.integer("pasts");
  c.branches = p.integer("branches");
  c.x0 = p.vec("x0");
  c.seed = seed_of(cfg);
  const DriftField b = declared(field_from(cfg, "field"), c.q, c.alpha);
  const ConditionalIncrementStats st = conditional_regularity_exponent(b, c);
  ExperimentOutput out;
  for (std::size_t k = 0; k < st.lags.size(); ++k) {
    out.points.push_back({"estimate", st.lags[k], st.estimates[k], st.stderrs[k]});
    out.points.push_back({"crude_bound", st.lags[k], st.crude_bounds[k], 0.0});
  }
  set_fit(out.summary, st.fit);
  out.summary["budget"] = static_cast<long long>(c.pasts) * c.branches;
  out.summary["headline"] = {{"slope", st.fit.slope},
                             {"r2", st.fit.r_squared},
                             {"predicted_slope", st.predicted_slope},
                             {"max_relative_se", st.max_relative_se},
                             {"budget_flag", st.budget_flag},
                             {"exact_zero", st.exact_zero},
                             {"regime", to_string(st.regime.classification)}};
  return out;
}

// 7. stability-rate ------------------------------------------------------------------

ExperimentOutput run_stability(const Config& cfg) {
  const P p{cfg};
  StabilityConfig c;
  c.hurst = p.num("hurst");
  c.grid = TimeGrid(p.integer("n_steps"));
  c.replicates = p.integer("replicates");
  c.x0 = p.vec("x0");
  c.perturbations = p.nums("perturbations");
  c.seed = seed_of(cfg);
  const DriftField b = declared(field_from(cfg, "field"), p.num("q"), p.num("alpha"));
  const StabilityReport init = stability_initial(b, c);
  const StabilityReport drift = stability_drift(b, c);
  ExperimentOutput out;
  for (std::size_t k = 0; k < init.magnitudes.size(); ++k)
    out.points.push_back({"initial", init.magnitudes[k], init.mean_distance[k], init.stderrs[k]});
  for (std::size_t k = 0; k < drift.magnitudes.size(); ++k)
    out.points.push_back({"drift", drift.magnitudes[k], drift.mean_distance[k], drift.stderrs[k]});
  set_fit(out.summary, init.fit);
  out.summary["drift_fit"] = fit_json(drift.fit);
  out.summary["budget"] = c.replicates;
  out.summary["headline"] = {{"initial_slope", init.fit.slope},
                             {"initial_r2", init.fit.r_squared},
                             {"drift_slope", drift.fit.slope},
                             {"drift_r2", drift.fit.r_squared},
                             {"regime", to_string(init.regime.classification)}};
  return out;
}

// 8. mollified-cauchy ----------------------------------------------------------------

ExperimentOutput run_mollified(const Config& cfg) {
  const P p{cfg};
  const double h = p.num("hurst");
  const TimeGrid grid(p.integer("n_steps"));
  const int reps = p.integer("replicates");
  std::vector<double> levels = p.nums("levels");
  std::sort(levels.begin(), levels.end(), std::greater<>());
  const Vec x0 = p.vec("x0");
  const DriftField b = declared(field_from(cfg, "field"), p.num("q"), p.num("alpha"));
  const std::uint64_t seed = seed_of(cfg);
  const std::size_t k_count = levels.size() - 1;
  std::vector<Vec> deltas(k_count, Vec(reps));
  int non_cauchy = 0;
  for (int r = 0; r < reps; ++r) {
    const DiscretePath noise = sample_fbm(h, grid, b.dim, derive_seed(seed, "mollified", r)).as_path();
    const MollifiedFamily fam = solve_distributional(b, levels, h, noise, x0);
    non_cauchy += fam.non_cauchy;
    for (std::size_t k = 0; k < k_count; ++k) deltas[k](r) = fam.cauchy_deltas[k];
  }
  ExperimentOutput out;
  std::vector<double> means, taus;
  bool monotone = true;
  for (std::size_t k = 0; k < k_count; ++k) {
    means.push_back(deltas[k].mean());
    taus.push_back(levels[k + 1]);
    out.points.push_back({"cauchy_delta", levels[k + 1], deltas[k].mean(), standard_error(deltas[k])});
    if (k > 0 && means[k] > 1.1 * means[k - 1]) monotone = false;
  }
  const ScalingFit fit = fit_loglog(taus, means);
  set_fit(out.summary, fit);
  out.summary["budget"] = reps;
  out.summary["headline"] = {{"mean_deltas", means},
                             {"monotone_with_slack", monotone},
                             {"non_cauchy_replicates", non_cauchy},
                             {"tau_slope", fit.slope}};
  return out;
}

// 9. flow-jacobian --------------------------------------------------------------------

ExperimentOutput run_flow(const Config& cfg) {
  const P p{cfg};
  const TimeGrid grid(p.integer("n_steps"));
  const DriftField b = field_from(cfg, "field");
  const int d = b.dim, m = p.integer("lattice_points");
  const double radius = p.num("lattice_radius"), h = p.num("fd_step");
  Mat lattice(m, d);
  for (int k = 0; k < m; ++k) {
    const double u = m > 1 ? radius * (2.0 * k / (m - 1) - 1.0) : 0.0;
    for (int j = 0; j < d; ++j) lattice(k, j) = 0.1 + u / (1.0 + j);
  }
  const DiscretePath noise = sample_fbm(p.num("hurst"), grid, d, derive_seed(seed_of(cfg), "flow-noise")).as_path();
  const FlowGrid flow = compute_flow(b, noise, p.ints("s_list"), p.ints("t_list"), lattice, true);
  double max_rel = 0.0;
  ExperimentOutput out;
  for (const FlowEntry& e : flow.entries) {
    if (e.t == e.s) continue;
    Mat fd(d, d);
    const Vec x = lattice.row(e.x_index).transpose();
    for (int j = 0; j < d; ++j) {
      Vec xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      fd.col(j) = ((euler_from(b, noise, e.s, xp).row(e.t - e.s) - euler_from(b, noise, e.s, xm).row(e.t - e.s)) /
                   (2.0 * h))
                      .transpose();
    }
    const double rel = (fd - e.J).norm() / e.J.norm();
    max_rel = std::max(max_rel, rel);
    out.points.push_back({"fd_relative_error", grid.node(e.t) - grid.node(e.s), rel, 0.0});
  }
  out.divergence = flow.diverged;
  out.summary["slope"] = 0.0;
  out.summary["stderr"] = 0.0;
  out.summary["r2"] = 0.0;
  out.summary["budget"] = flow.entries.size();
  out.summary["headline"] = {{"semiflow_residual", flow.semiflow_residual},
                             {"solver_tolerance", p.num("tolerance")},
                             {"identity_residual", flow.identity_residual},
                             {"max_fd_relative_error", max_rel},
                             {"min_det", flow.min_det}};
  return out;
}

// 10. malliavin -------------------------------------------------------------------------

ExperimentOutput run_malliavin(const Config& cfg) {
  const P p{cfg};
  const TimeGrid grid(p.integer("n_steps"));
  const DriftField b = field_from(cfg, "field");
  const Vec x0 = p.vec("x0");
  const auto eps = p.nums("eps");
  const DiscretePath noise = sample_fbm(p.num("hurst"), grid, b.dim, derive_seed(seed_of(cfg), "malliavin")).as_path();
  DiscretePath hdir = DiscretePath::zeros(grid, b.dim);
  for (int i = 0; i <= grid.n_steps; ++i) hdir.values.row(i).setConstant(grid.node(i));
  const SdeProblem base(b, noise, x0);
  const DiscretePath D = malliavin_directional(base, hdir);
  const Mat X = solve_euler(base).X.values;
  auto fd = [&](double e) {
    DiscretePath shifted = noise;
    shifted.values += e * hdir.values;
    return Mat((solve_euler(SdeProblem(b, shifted, x0)).X.values - X) / e);
  };
  const Mat d1 = fd(eps[0]), d2 = fd(eps[1]);
  const double r = eps[0] / eps[1];
  const Mat extrap = (r * d2 - d1) / (r - 1.0);
  const double sup = (extrap - D.values).cwiseAbs().maxCoeff();
  ExperimentOutput out;
  for (int i = 0; i <= grid.n_steps; i += std::max(1, grid.n_steps / 64)) {
    out.points.push_back({"variational", grid.node(i), D.values(i, 0), 0.0});
    out.points.push_back({"extrapolated_fd", grid.node(i), extrap(i, 0), 0.0});
  }
  out.summary["slope"] = 0.0;
  out.summary["stderr"] = 0.0;
  out.summary["r2"] = 0.0;
  out.summary["budget"] = 3;
  out.summary["headline"] = {{"sup_difference", sup},
                             {"raw_fd_sup_difference_eps1", (d1 - D.values).cwiseAbs().maxCoeff()},
                             {"raw_fd_sup_difference_eps2", (d2 - D.values).cwiseAbs().maxCoeff()}};
  return out;
}

// 11. rho-irregularity --------------------------------------------------------------------

ExperimentOutput run_rho(const Config& cfg) {
  const P p{cfg};
  const TimeGrid grid(p.integer("n_steps"));
  const int d = p.integer("dim"), paths = p.integer("paths");
  const std::uint64_t seed = seed_of(cfg);
  ExperimentOutput out;
  json per_h = json::array();
  double worst = 0.0;
  bool first = true;
  const auto hs = p.nums("hurst");
  for (std::size_t hi = 0; hi < hs.size(); ++hi) {
    const double h = hs[hi];
    RhoIrregularityConfig rc = resolution_band(h, grid.n_steps, p.integer("band_cap"));
    rc.directions = p.integer("directions");
    rc.mags_per_band = p.integer("mags_per_band");
    rc.gamma_levels = p.integer("gamma_levels");
    rc.seed = derive_seed(seed, "rho-directions", hi);
    std::vector<DiscretePath> sample;
    for (int k = 0; k < paths; ++k)
      sample.push_back(
          sample_fbm(h, grid, d, derive_seed(seed, "rho-path", hi * 1000003ULL + static_cast<std::uint64_t>(k)))
              .as_path());
    const RhoIrregularityReport rep = rho_irregularity(sample, rc);
    for (std::size_t k = 0; k < rep.band_centers.size(); ++k)
      out.points.push_back({hurst_label(h), rep.band_centers[k], rep.mean_band_rms[k], 0.0});
    const double target = 1.0 / (2.0 * h);
    worst = std::max(worst, std::abs(rep.median_rho - target));
    per_h.push_back({{"hurst", h},
                     {"median_rho", rep.median_rho},
                     {"target", target},
                     {"q25_rho", rep.q25_rho},
                     {"q75_rho", rep.q75_rho},
                     {"median_gamma", rep.median_gamma},
                     {"band_lo", rc.band_lo},
                     {"band_hi", rc.band_hi},
                     {"max_bound_ratio", rep.max_bound_ratio}});
    if (first) {
      out.summary["slope"] = -rep.median_rho;
      out.summary["stderr"] = (rep.q75_rho - rep.q25_rho) / 1.349 / std::sqrt(static_cast<double>(paths));
      out.summary["r2"] = rep.per_path.empty() ? 0.0 : rep.per_path.front().rho_r2;
    }
    first = false;
  }
  out.summary["per_hurst"] = per_h;
  out.summary["budget"] = paths;
  out.summary["headline"] = {{"max_abs_median_error", worst}};
  return out;
}

// 12. counterexample --------------------------------------------------------------------------

CounterexampleConfig counterexample_config(const Config& cfg, bool control) {
  const P p{cfg};
  CounterexampleConfig c;
  c.hurst = p.num(control ? "control_hurst" : "hurst");
  c.q_tilde = p.num(control ? "control_q_tilde" : "q_tilde");
  c.alpha = p.num(control ? "control_alpha" : "alpha");
  c.delta = p.num("delta");
  c.rho_scan = p.nums("rho_scan");
  for (int e : p.ints("x_exponents")) c.x_sequence.push_back(std::ldexp(1.0, -e));
  c.paths = p.integer("paths");
  c.grid = TimeGrid(p.integer("n_steps"));
  c.seed = derive_seed(seed_of(cfg), control ? "control" : "supercritical");
  return c;
}

ExperimentOutput run_counterexample(const Config& cfg) {
  const CounterexampleConfig main = counterexample_config(cfg, false), ctrl = counterexample_config(cfg, true);
  const CounterexampleReport rep = counterexample_branching(main);
  const GapReport gap_super = counterexample_gap(main), gap_ctrl = counterexample_gap(ctrl);
  ExperimentOutput out;
  for (std::size_t k = 0; k < gap_ctrl.gap.size(); ++k)
    out.points.push_back({"gap_subcritical", gap_ctrl.x_sequence[k], gap_ctrl.gap[k], gap_ctrl.gap_se[k]});
  for (std::size_t k = 0; k < gap_super.gap.size(); ++k)
    out.points.push_back({"gap_supercritical", gap_super.x_sequence[k], gap_super.gap[k], gap_super.gap_se[k]});
  for (std::size_t r = 0; r < rep.rho_scan.size(); ++r) {
    out.points.push_back({"min_upper_fraction", rep.rho_scan[r], rep.upper_fraction.col(r).minCoeff(), 0.0});
    out.points.push_back({"min_lower_fraction", rep.rho_scan[r], rep.lower_fraction.col(r).minCoeff(), 0.0});
  }
  const ScalingFit fit = fit_loglog(gap_ctrl.x_sequence, gap_ctrl.gap);
  set_fit(out.summary, fit);
  out.summary["gap_supercritical"] = gap_super.gap;
  out.summary["gap_subcritical"] = gap_ctrl.gap;
  out.summary["budget"] = main.paths;
  out.summary["headline"] = {{"gamma", rep.gamma},
                             {"best_rho", rep.best_rho},
                             {"best_upper", rep.best_upper},
                             {"best_lower", rep.best_lower},
                             {"mirror_residual", rep.mirror_residual},
                             {"control_gap_first", gap_ctrl.gap.front()},
                             {"control_gap_last", gap_ctrl.gap.back()},
                             {"control_gap_slope", fit.slope},
                             {"supercritical_gap_last", gap_super.gap.back()}};
  return out;
}

// 13. mckean-vlasov ------------------------------------------------------------------------------

ExperimentOutput run_mkv(const Config& cfg) {
  const P p{cfg};
  MkvProblem prob;
  prob.f = declared(field_from(cfg, "field"), p.num("q"), p.num("alpha"));
  prob.g = declared(field_from(cfg, "interaction"), p.num("q"), p.num("alpha"));
  prob.hurst = p.num("hurst");
  prob.grid = TimeGrid(p.integer("n_steps"));
  prob.x0_sampler = gaussian_start(p.vec("x0"), p.num("x0_sd"));
  const int n = p.integer("particles"), iters = p.integer("iterations"), stride = p.integer("stride");
  const std::uint64_t seed = seed_of(cfg);
  const PicardResult res = solve_mkv_picard(prob, iters, n, seed, 1e-12, stride);
  MkvProblem degenerate = prob;
  degenerate.g = zero_field(prob.f.dim);
  const PicardResult zero = solve_mkv_picard(degenerate, iters, n, seed, 1e-12, stride);
  const auto& dg = res.diagnostics;
  ExperimentOutput out;
  for (std::size_t k = 0; k < dg.distances.size(); ++k) {
    out.points.push_back({"weighted_distance", static_cast<double>(k + 1), dg.distances[k], 0.0});
    out.points.push_back({"raw_distance", static_cast<double>(k + 1), dg.raw_distances[k], 0.0});
  }
  out.divergence = dg.diverged;
  out.summary["slope"] = std::log(dg.fitted_ratio);
  out.summary["stderr"] = 0.0;
  out.summary["r2"] = dg.fit_r2;
  out.summary["distances"] = dg.distances;
  out.summary["budget"] = n;
  out.summary["headline"] = {{"fitted_ratio", dg.fitted_ratio},
                             {"fit_r2", dg.fit_r2},
                             {"max_ratio", dg.max_ratio},
                             {"lambda", dg.lambda},
                             {"iterations", dg.iterations},
                             {"diverged", dg.diverged},
                             {"degenerate_iterations", zero.diagnostics.iterations},
                             {"degenerate_converged", zero.diagnostics.converged},
                             {"degenerate_first_distance",
                              zero.diagnostics.distances.empty() ? -1.0 : zero.diagnostics.distances.front()}};
  return out;
}

// 14. transport -------------------------------------------------------------------------------------

DiscretePath subsample(const DiscretePath& fine, int n) {
  const int stride = fine.grid.n_steps / n;
  Mat v(n + 1, fine.dim());
  for (int i = 0; i <= n; ++i) v.row(i) = fine.values.row(i * stride);
  return DiscretePath(TimeGrid(n, fine.grid.horizon), v);
}

ExperimentOutput run_transport(const Config& cfg) {
  const P p{cfg};
  std::vector<int> levels = p.ints("levels");
  std::sort(levels.begin(), levels.end());
  const int n_max = levels.back();
  const DriftField b = field_from(cfg, "field");
  const Mat lattice = uniform_lattice(p.num("lattice_min"), p.num("lattice_max"), p.integer("lattice_points"));
  const DiscretePath fine =
      sample_fbm(p.num("hurst"), TimeGrid(n_max), 1, derive_seed(seed_of(cfg), "transport-noise")).as_path();
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  const ScalarFn u0 = [](const Vec& x) { return std::exp(-x(0) * x(0)); };
  const ScalarFn gauss = [inv_sqrt_2pi](const Vec& x) { return inv_sqrt_2pi * std::exp(-0.5 * x(0) * x(0)); };

  // b = 0: u_t(x) = u0(x - B_t) and mu_t(x) = mu0(x - B_t) exactly.
  const DriftField zero = zero_field(1);
  const std::vector<int> all_nodes = {0, n_max / 2, n_max};
  const ScalarFieldPath u_free = solve_transport(u0, zero, fine, lattice, all_nodes);
  const DensityPath mu_free = solve_continuity(gauss, zero, fine, lattice, all_nodes);
  double closed_err = 0.0;
  for (std::size_t k = 0; k < all_nodes.size(); ++k)
    for (Eigen::Index i = 0; i < lattice.rows(); ++i) {
      Vec y(1);
      y(0) = lattice(i, 0) - fine.values(all_nodes[k], 0);
      closed_err = std::max(closed_err, std::abs(u_free.values(static_cast<Eigen::Index>(k), i) - u0(y)));
      closed_err = std::max(closed_err, std::abs(mu_free.values(static_cast<Eigen::Index>(k), i) - gauss(y)));
    }

  ExperimentOutput out;
  std::vector<double> dts, duality, mass;
  for (int n : levels) {
    const DiscretePath noise = subsample(fine, n);
    const std::vector<int> ends = {0, n};
    const ScalarFieldPath u = solve_transport(u0, b, noise, lattice, ends);
    const DensityPath back = solve_backward_continuity(gauss, b, noise, lattice, ends);
    const DensityPath fwd = solve_continuity(gauss, b, noise, lattice, ends);
    const double res = duality_check(u, back);
    const double drift = mass_ledger(fwd).max_relative_drift;
    dts.push_back(noise.grid.dt());
    duality.push_back(res);
    mass.push_back(drift);
    out.points.push_back({"duality_residual", noise.grid.dt(), res, 0.0});
    out.points.push_back({"mass_drift", noise.grid.dt(), drift, 0.0});
  }
  bool mismatch_detected = false;
  {
    const DiscretePath noise = subsample(fine, levels.front());
    const ScalarFieldPath u = solve_transport(u0, b, noise, lattice, {0, levels.front()});
    const Mat shifted = uniform_lattice(p.num("lattice_min") + 0.5, p.num("lattice_max") + 0.5,
                                        p.integer("lattice_points"));
    const DensityPath rho = solve_backward_continuity(gauss, b, noise, shifted, {0, levels.front()});
    try {
      duality_check(u, rho);
    } catch (const DomainError&) {
      mismatch_detected = true;
    }
  }
  const ScalingFit dual_fit = fit_loglog(dts, duality), mass_fit = fit_loglog(dts, mass);
  set_fit(out.summary, dual_fit);
  out.summary["mass_fit"] = fit_json(mass_fit);
  out.summary["budget"] = lattice.rows();
  out.summary["headline"] = {{"closed_form_max_error", closed_err},
                             {"finest_mass_drift", mass.back()},
                             {"max_mass_drift", *std::max_element(mass.begin(), mass.end())},
                             {"mass_order", mass_fit.slope},
                             {"finest_duality_residual", duality.back()},
                             {"duality_order", dual_fit.slope},
                             {"duality_r2", dual_fit.r_squared},
                             {"mismatch_detected", mismatch_detected}};
  return out;
}

// Validation ------------------------------------------------------------------------------------------

void validate_params(const Config& cfg, const std::string& name) {
  const P p{cfg};
  if (name == "lnd-constant") {
    for (double h : p.nums("hurst")) hurst_in_unit(h, "hurst");
    positive_int(p, "n_steps", 2);
    positive_int(p, "s_stride");
    positive_int(p, "lag_levels");
    check(p.num("s_min") >= 0.0 && p.num("s_min") < 1.0, "params.s_min must lie in [0,1)");
  } else if (name == "fbm-law") {
    hurst_in_unit(p.num("hurst"), "hurst");
    positive_int(p, "n_steps");
    positive_int(p, "paths", 2);
  } else if (name == "sewing-convergence") {
    positive_int(p, "n_steps");
    positive_int(p, "max_level", 2);
    positive_int(p, "oracle_points");
  } else if (name == "pvar-oracle") {
    positive_int(p, "cases");
    check(p.integer("points") >= 2 && p.integer("points") <= 20, "params.points must lie in [2,20]");
    for (double pe : p.nums("p")) check(pe >= 1.0, "params.p must be >= 1");
  } else if (name == "affine-young-bound") {
    positive_int(p, "cases");
    positive_int(p, "n_steps");
    positive_int(p, "dim");
    hurst_in_unit(p.num("hurst_a"), "hurst_a");
    hurst_in_unit(p.num("hurst_z"), "hurst_z");
    check(p.num("p") >= 1.0 && p.num("p_tilde") >= 1.0, "params.p and params.p_tilde must be >= 1");
    check(1.0 / p.num("p") + 1.0 / p.num("p_tilde") > 1.0, "Young condition 1/p + 1/p_tilde > 1 violated");
    check(0.0 < p.num("scale_min") && p.num("scale_min") <= p.num("scale_max"),
          "need 0 < scale_min <= scale_max");
  } else if (name == "conditional-regularity") {
    hurst_in_unit(p.num("hurst"), "hurst");
    check(p.num("m") >= 1.0, "params.m must be >= 1");
    positive_int(p, "n_steps", 2);
    positive_int(p, "pasts");
    positive_int(p, "branches", 2);
    const int s = TimeGrid(p.integer("n_steps")).index_of(p.num("s_time"));
    for (int lag : p.ints("lags"))
      check(lag > 0 && s + lag <= p.integer("n_steps"), "params.lags must be positive and stay inside the grid");
    require_regime(p.num("hurst"), p.num("q"), p.num("alpha"), true, name);
  } else if (name == "stability-rate") {
    hurst_in_unit(p.num("hurst"), "hurst");
    positive_int(p, "n_steps");
    positive_int(p, "replicates", 2);
    for (double e : p.nums("perturbations")) check(e > 0.0, "params.perturbations must be positive");
    require_regime(p.num("hurst"), p.num("q"), p.num("alpha"), true, name);
  } else if (name == "mollified-cauchy") {
    hurst_in_unit(p.num("hurst"), "hurst");
    positive_int(p, "n_steps");
    positive_int(p, "replicates", 2);
    check(p.nums("levels").size() >= 2, "params.levels needs at least two mollification levels");
    for (double t : p.nums("levels")) check(t > 0.0, "params.levels must be positive");
    require_regime(p.num("hurst"), p.num("q"), p.num("alpha"), false, name);
  } else if (name == "flow-jacobian") {
    hurst_in_unit(p.num("hurst"), "hurst");
    positive_int(p, "n_steps");
    positive_int(p, "lattice_points");
    check(p.num("fd_step") > 0.0 && p.num("tolerance") > 0.0, "fd_step and tolerance must be positive");
    for (int s : p.ints("s_list")) check(s >= 0 && s <= p.integer("n_steps"), "s_list outside the grid");
    for (int t : p.ints("t_list")) check(t >= 0 && t <= p.integer("n_steps"), "t_list outside the grid");
  } else if (name == "malliavin") {
    hurst_in_unit(p.num("hurst"), "hurst");
    positive_int(p, "n_steps");
    const auto e = p.nums("eps");
    check(e.size() == 2 && e[0] > e[1] && e[1] > 0.0, "params.eps must hold two steps eps1 > eps2 > 0");
  } else if (name == "rho-irregularity") {
    for (double h : p.nums("hurst")) hurst_in_unit(h, "hurst");
    positive_int(p, "n_steps", 16);
    positive_int(p, "dim");
    positive_int(p, "paths");
    positive_int(p, "directions");
    positive_int(p, "mags_per_band");
    positive_int(p, "band_cap", 2);
    positive_int(p, "gamma_levels", 2);
  } else if (name == "counterexample") {
    positive_int(p, "n_steps");
    positive_int(p, "paths", 2);
    for (int e : p.ints("x_exponents")) check(e > 0, "params.x_exponents must be positive");
    for (double r : p.nums("rho_scan")) check(r > 0.0 && r <= 1.0, "params.rho_scan must lie in (0,1]");
    const double h = p.num("hurst"), qt = p.num("q_tilde"), a = p.num("alpha"), dl = p.num("delta");
    hurst_in_unit(h, "hurst");
    const RegimeReport r = classify_regime(h, qt, a);
    check(r.classification == Regime::supercritical,
          "counterexample: needs alpha < 1 - 1/(H q~') (supercritical), got " + to_string(r.classification));
    const double gamma = 1.0 / (conjugate_exponent(qt) * (1.0 - a));
    check(gamma < h, "counterexample: needs gamma = 1/(q~'(1-alpha)) < H");
    check(dl > 0.0 && std::pow(dl, a) / gamma > 2.0 * dl, "counterexample: needs delta^alpha / gamma > 2 delta");
    hurst_in_unit(p.num("control_hurst"), "control_hurst");
    const RegimeReport rc = classify_regime(p.num("control_hurst"), p.num("control_q_tilde"), p.num("control_alpha"));
    check(rc.classification == Regime::subcritical,
          "counterexample control: needs alpha > 1 - 1/(H q~') (subcritical), got " + to_string(rc.classification));
  } else if (name == "mckean-vlasov") {
    hurst_in_unit(p.num("hurst"), "hurst");
    positive_int(p, "n_steps");
    positive_int(p, "particles", 2);
    positive_int(p, "iterations", 2);
    positive_int(p, "stride");
    check(p.num("x0_sd") >= 0.0, "params.x0_sd must be >= 0");
    require_regime(p.num("hurst"), p.num("q"), p.num("alpha"), false, name);
  } else if (name == "transport") {
    hurst_in_unit(p.num("hurst"), "hurst");
    const auto lv = p.ints("levels");
    check(lv.size() >= 2, "params.levels needs at least two grid sizes");
    const int top = *std::max_element(lv.begin(), lv.end());
    for (int n : lv) check(n > 0 && top % n == 0, "params.levels must divide the finest level");
    check(p.num("lattice_max") > p.num("lattice_min"), "need lattice_max > lattice_min");
    positive_int(p, "lattice_points", 2);
  }
}

}  // namespace

const std::vector<ExperimentInfo>& list_experiments() {
  static const std::vector<ExperimentInfo> catalog = build_catalog();
  return catalog;
}

const ExperimentInfo& find_experiment(const std::string& name) {
  for (const auto& e : list_experiments())
    if (e.name == name) return e;
  throw ValidationError("unknown experiment '" + name + "'");
}

void validate_config(const Config& cfg) {
  cfg.require_exact_keys("experiment", {"name", "seed", "output"});
  seed_of(cfg);
  const ExperimentInfo& info = find_experiment(cfg.raw("experiment", "name"));
  std::vector<std::string> allowed = {"experiment", "params"};
  allowed.insert(allowed.end(), info.field_sections.begin(), info.field_sections.end());
  for (const auto& [sec, kv] : cfg.sections())
    if (std::find(allowed.begin(), allowed.end(), sec) == allowed.end())
      throw ValidationError("unexpected section [" + sec + "] for experiment " + info.name);
  cfg.require_exact_keys("params", info.params);
  for (const auto& sec : info.field_sections) {
    const std::string fname = cfg.raw(sec, "name");
    const auto names = field_names();
    if (std::find(names.begin(), names.end(), fname) == names.end())
      throw ValidationError("[" + sec + "]: unknown field '" + fname + "'");
    std::vector<std::string> keys = {"name"};
    for (const auto& k : field_parameters(fname)) keys.push_back(k);
    cfg.require_exact_keys(sec, keys);
    try {
      field_from(cfg, sec);
    } catch (const ValidationError&) {
      throw;
    } catch (const DomainError& e) {
      throw ValidationError("[" + sec + "]: " + e.what());
    }
  }
  validate_params(cfg, info.name);
}

ExperimentOutput execute_experiment(const Config& cfg) {
  validate_config(cfg);
  const std::string name = cfg.raw("experiment", "name");
  static const std::map<std::string, ExperimentOutput (*)(const Config&)> table = {
      {"lnd-constant", run_lnd},
      {"fbm-law", run_fbm_law},
      {"sewing-convergence", run_sewing},
      {"pvar-oracle", run_pvar},
      {"affine-young-bound", run_affine},
      {"conditional-regularity", run_conditional},
      {"stability-rate", run_stability},
      {"mollified-cauchy", run_mollified},
      {"flow-jacobian", run_flow},
      {"malliavin", run_malliavin},
      {"rho-irregularity", run_rho},
      {"counterexample", run_counterexample},
      {"mckean-vlasov", run_mkv},
      {"transport", run_transport},
  };
  ExperimentOutput out = table.at(name)(cfg);
  out.summary["experiment"] = name;
  out.summary["seed"] = seed_of(cfg);
  return out;
}

fs::path output_root(const Config& cfg) {
  if (const char* env = std::getenv("FBMLAB_OUTPUT_ROOT"); env && *env) return fs::path(env);
  return fs::path(cfg.raw("experiment", "output"));
}

RunSummary run_experiment(const Config& cfg) { return run_experiment(cfg, output_root(cfg)); }

RunSummary run_experiment(const Config& cfg, const fs::path& root) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentOutput out = execute_experiment(cfg);
  RunSummary s;
  s.experiment = cfg.raw("experiment", "name");
  s.config_digest = cfg.digest();
  s.config_echo = cfg.canonical();
  s.directory = root / (s.experiment + "-" + s.config_digest.substr(0, 12));
  s.headline = out.summary.at("headline");
  s.divergence = out.divergence;

  std::ostringstream points;
  points.precision(17);
  points << "series,x,y,y_err\n";
  for (const PlotPoint& pt : out.points) points << pt.series << "," << pt.x << "," << pt.y << "," << pt.y_err << "\n";
  const std::string summary = out.summary.dump(2) + "\n";

  std::error_code ec;
  fs::create_directories(s.directory, ec);
  if (ec) throw NumericalError("cannot create output directory '" + s.directory.string() + "': " + ec.message());
  auto write = [&](const std::string& name, const std::string& bytes) {
    std::ofstream f(s.directory / name, std::ios::binary | std::ios::trunc);
    if (!f) throw NumericalError("cannot write '" + (s.directory / name).string() + "'");
    f << bytes;
    if (!f) throw NumericalError("write failed for '" + (s.directory / name).string() + "'");
    s.files.push_back(name);
  };
  write("points.csv", points.str());
  write("summary.json", summary);
  Digest d;
  d.update(points.str());
  d.update(summary);
  s.digest = d.hex();
  s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json manifest = {{"experiment", s.experiment},
                   {"criterion", find_experiment(s.experiment).criterion},
                   {"config_digest", s.config_digest},
                   {"config", s.config_echo},
                   {"files", s.files},
                   {"digest", s.digest},
                   {"divergence", s.divergence},
                   {"headline", s.headline},
                   {"wall_seconds", s.wall_seconds}};
  write("manifest.json", manifest.dump(2) + "\n");
  return s;
}

namespace {

struct Row {
  std::string series;
  double x, y, y_err;
};

std::vector<Row> read_points(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw NumericalError("missing artifact '" + file.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != "series,x,y,y_err")
    throw NumericalError("'" + file.string() + "' lacks the series,x,y,y_err header");
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    Row r;
    std::string x, y, e;
    std::getline(ss, r.series, ',');
    std::getline(ss, x, ',');
    std::getline(ss, y, ',');
    std::getline(ss, e, ',');
    r.x = std::stod(x);
    r.y = std::stod(y);
    r.y_err = std::stod(e);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

fs::path emit_plot_data(const fs::path& run_dir, const std::string& kind) {
  if (kind != "series" && kind != "loglog") throw DomainError("plot kind must be 'series' or 'loglog'");
  const std::vector<Row> rows = read_points(run_dir / "points.csv");
  if (rows.empty()) throw NumericalError("run in '" + run_dir.string() + "' produced no data points");
  std::ostringstream os;
  os.precision(17);
  if (kind == "series") {
    os << "series,x,y,y_err\n";
    for (const Row& r : rows) os << r.series << "," << r.x << "," << r.y << "," << r.y_err << "\n";
  } else {
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<double, double>>> by_series;
    for (const Row& r : rows) {
      if (!(r.x > 0.0 && r.y > 0.0)) continue;
      if (!by_series.count(r.series)) order.push_back(r.series);
      by_series[r.series].push_back({std::log(r.x), std::log(r.y)});
    }
    if (order.empty()) throw NumericalError("run in '" + run_dir.string() + "' has no positive points for a log-log plot");
    os << "series,log_x,log_y,fit_y\n";
    for (const auto& name : order) {
      std::vector<double> lx, ly;
      for (const auto& [a, b] : by_series[name]) {
        lx.push_back(a);
        ly.push_back(b);
      }
      const ScalingFit f = fit_line(lx, ly);
      for (std::size_t k = 0; k < lx.size(); ++k)
        os << name << "," << lx[k] << "," << ly[k] << "," << (f.degenerate ? ly[k] : f.intercept + f.slope * lx[k])
           << "\n";
    }
  }
  const fs::path target = run_dir / ("plot_" + kind + ".csv");
  std::ofstream f(target, std::ios::binary | std::ios::trunc);
  if (!f) throw NumericalError("cannot write '" + target.string() + "'");
  f << os.str();
  return target;
}

}  // namespace fbmlab
