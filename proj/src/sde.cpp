#include "fbmlab/sde.hpp"

#include "fbmlab/fbm.hpp"
#include "fbmlab/stats.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace fbmlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_pointwise(const DriftField& b, const char* where) {
  if (!b.pointwise())
    throw DomainError(std::string(where) + ": drift '" + b.name +
                      "' is not evaluable pointwise; solve a mollified level instead");
}

void require_gradient(const DriftField& b, const char* where) {
  if (!b.has_gradient())
    throw DomainError(std::string(where) + ": drift '" + b.name +
                      "' has no gradient; use a smooth or mollified field");
}

Vec noise_increment(const DiscretePath& noise, int i) {
  return (noise.values.row(i + 1) - noise.values.row(i)).transpose();
}

}  // namespace

SdeProblem::SdeProblem(DriftField b, DiscretePath B, Vec x)
    : drift(std::move(b)), noise(std::move(B)), x0(std::move(x)) {
  if (noise.dim() != drift.dim) throw DomainError("SdeProblem: noise and drift dimensions differ");
  if (x0.size() != drift.dim) throw DomainError("SdeProblem: x0 dimension differs from the drift");
}

Mat euler_from(const DriftField& b, const DiscretePath& noise, int s_index, const Vec& x, bool* diverged,
               Mat* phi_out) {
  require_pointwise(b, "euler_from");
  const int n = noise.grid.n_steps;
  if (s_index < 0 || s_index > n) throw DomainError("euler_from: start index outside the grid");
  const int d = b.dim;
  Mat out(n - s_index + 1, d);
  out.row(0) = x.transpose();
  // Track phi = X - B so that a vanishing drift reproduces x + B exactly.
  const Vec base = noise.values.row(s_index).transpose();
  Vec cur = x, phi = x - base, inc(d);
  if (phi_out) {
    phi_out->resize(n - s_index + 1, d);
    phi_out->row(0) = phi.transpose();
  }
  if (diverged) *diverged = false;
  for (int i = s_index; i < n; ++i) {
    b.cell_increment(noise.grid.node(i), noise.grid.node(i + 1), cur, inc);
    phi += inc;
    cur = phi + noise.values.row(i + 1).transpose();
    if (!cur.allFinite() || cur.norm() > kOverflowBound) {
      if (diverged) *diverged = true;
      out.bottomRows(n - i).setConstant(kNaN);
      if (phi_out) phi_out->bottomRows(n - i).setConstant(kNaN);
      return out;
    }
    out.row(i - s_index + 1) = cur.transpose();
    if (phi_out) phi_out->row(i - s_index + 1) = phi.transpose();
  }
  return out;
}

SolutionPath solve_euler(const SdeProblem& problem) {
  SolutionPath sol;
  bool diverged = false;
  Mat phi;
  Mat x = euler_from(problem.drift, problem.noise, 0, problem.x0, &diverged, &phi);
  sol.diverged = diverged;
  if (diverged)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (std::isnan(x(i, 0))) {
        sol.diverged_index = static_cast<int>(i);
        break;
      }
  sol.X = DiscretePath(problem.grid(), std::move(x));
  sol.phi = DiscretePath(problem.grid(), std::move(phi));
  return sol;
}

MollifiedFamily solve_distributional(const DriftField& b, const std::vector<double>& levels, double hurst,
                                     const DiscretePath& noise, const Vec& x0, double tol) {
  if (levels.empty()) throw DomainError("solve_distributional: need at least one level");
  for (std::size_t k = 1; k < levels.size(); ++k)
    if (!(levels[k] < levels[k - 1])) throw DomainError("solve_distributional: levels must decrease");
  MollifiedFamily fam;
  fam.regime = classify_regime(hurst, b.q, b.alpha);
  if (!fam.regime.condition_a) {
    std::ostringstream os;
    os << "solve_distributional: condition A fails:";
    for (const auto& v : fam.regime.violations_a) os << " " << v << ";";
    throw DomainError(os.str());
  }
  fam.levels = levels;
  for (double tau : levels) {
    const DriftField smooth = heat_smooth(b, tau);
    fam.solutions.push_back(solve_euler(SdeProblem(smooth, noise, x0)));
    if (fam.solutions.back().diverged)
      throw DivergenceError("solve_distributional: level " + std::to_string(tau) + " overflowed");
  }
  for (std::size_t k = 1; k < fam.solutions.size(); ++k) {
    const double delta =
        (fam.solutions[k].X.values - fam.solutions[k - 1].X.values).rowwise().norm().maxCoeff();
    fam.cauchy_deltas.push_back(delta);
    if (fam.cauchy_deltas.size() >= 2 && delta > 1.1 * fam.cauchy_deltas[fam.cauchy_deltas.size() - 2])
      fam.non_cauchy = true;
  }
  fam.converged = !fam.cauchy_deltas.empty() && fam.cauchy_deltas.back() < tol && !fam.non_cauchy;
  return fam;
}

// Averaged field ---------------------------------------------------------------

Mat AveragedField::stacked() const {
  if (values.empty()) return Mat();
  const Eigen::Index rows = values.front().rows(), d = values.front().cols();
  Mat out(rows, d * static_cast<Eigen::Index>(values.size()));
  for (std::size_t k = 0; k < values.size(); ++k) out.middleCols(d * k, d) = values[k];
  return out;
}

AveragedField averaged_field(const DriftField& b, const DiscretePath& noise, const Mat& lattice) {
  require_pointwise(b, "averaged_field");
  if (lattice.cols() != b.dim) throw DomainError("averaged_field: lattice dimension differs from drift");
  AveragedField T;
  T.grid = noise.grid;
  T.lattice = lattice;
  const int n = noise.grid.n_steps, d = b.dim;
  Vec y(d), inc(d);
  for (Eigen::Index k = 0; k < lattice.rows(); ++k) {
    Mat v = Mat::Zero(n + 1, d);
    for (int i = 0; i < n; ++i) {
      y = lattice.row(k).transpose() + noise.values.row(i).transpose();
      b.cell_increment(noise.grid.node(i), noise.grid.node(i + 1), y, inc);
      if (!inc.allFinite()) throw NumericalError("averaged_field: drift is unbounded along the path");
      v.row(i + 1) = v.row(i) + inc.transpose();
    }
    T.values.push_back(std::move(v));
  }
  return T;
}

TwoParamField averaged_two_param(const DriftField& b, const DiscretePath& noise) {
  require_pointwise(b, "averaged_two_param");
  TwoParamField A;
  A.dim = b.dim;
  A.A = [b, noise](double s, double t, const Vec& x) {
    const int si = noise.grid.index_of(s), ti = noise.grid.index_of(t);
    Vec acc = Vec::Zero(b.dim), y(b.dim), inc(b.dim);
    for (int i = si; i < ti; ++i) {
      y = x + noise.values.row(i).transpose();
      b.cell_increment(noise.grid.node(i), noise.grid.node(i + 1), y, inc);
      acc += inc;
    }
    return acc;
  };
  return A;
}

double averaged_pvar_exponent(double alpha, double hurst) {
  const double denom = 1.0 + (alpha - 1.0) * hurst;
  if (!(denom > 0.0)) throw DomainError("averaged_pvar_exponent: need 1 + (alpha - 1) H > 0");
  return (1.0 / denom + 2.0) / 2.0;
}

// Flows --------------------------------------------------------------------------

const FlowEntry& FlowGrid::at(int s, int t, int x_index) const {
  for (const auto& e : entries)
    if (e.s == s && e.t == t && e.x_index == x_index) return e;
  throw DomainError("FlowGrid::at: no entry for the requested (s, t, x)");
}

JacobianPath jacobian_flow(const DriftField& b, const DiscretePath& noise, int s_index, const Vec& x) {
  require_gradient(b, "jacobian_flow");
  bool diverged = false;
  JacobianPath jp;
  jp.trajectory = euler_from(b, noise, s_index, x, &diverged);
  if (diverged) throw DivergenceError("jacobian_flow: trajectory overflowed");
  const int d = b.dim, steps = static_cast<int>(jp.trajectory.rows()) - 1;
  const Mat I = Mat::Identity(d, d);
  jp.J.assign(1, I);
  jp.K.assign(1, I);
  Mat grad(d, d);
  for (int j = 0; j < steps; ++j) {
    const int i = s_index + j;
    const double t0 = noise.grid.node(i), t1 = noise.grid.node(i + 1);
    b.spatial_jacobian(t0, jp.trajectory.row(j).transpose(), grad);
    const Mat step = I + b.time.integral(t0, t1) * grad;
    jp.J.push_back(step * jp.J.back());
    jp.K.push_back(jp.K.back() * step.inverse());
  }
  return jp;
}

FlowGrid compute_flow(const DriftField& b, const DiscretePath& noise, const std::vector<int>& s_list,
                      const std::vector<int>& t_list, const Mat& lattice, bool with_jacobian) {
  require_pointwise(b, "compute_flow");
  if (lattice.cols() != b.dim) throw DomainError("compute_flow: lattice dimension differs from drift");
  FlowGrid flow;
  flow.s_list = s_list;
  flow.t_list = t_list;
  flow.lattice = lattice;
  flow.min_det = std::numeric_limits<double>::infinity();
  const int d = b.dim;
  for (int s : s_list) {
    for (Eigen::Index k = 0; k < lattice.rows(); ++k) {
      const Vec x = lattice.row(k).transpose();
      Mat traj;
      JacobianPath jp;
      bool diverged = false;
      if (with_jacobian) {
        jp = jacobian_flow(b, noise, s, x);
        traj = jp.trajectory;
      } else {
        traj = euler_from(b, noise, s, x, &diverged);
      }
      flow.diverged = flow.diverged || diverged;
      for (int t : t_list) {
        if (t < s) continue;
        FlowEntry e;
        e.s = s;
        e.t = t;
        e.x_index = static_cast<int>(k);
        e.phi = traj.row(t - s).transpose();
        if (with_jacobian) {
          e.J = jp.J[t - s];
          e.K = jp.K[t - s];
          flow.identity_residual =
              std::max(flow.identity_residual, (e.J * e.K - Mat::Identity(d, d)).cwiseAbs().maxCoeff());
          flow.min_det = std::min(flow.min_det, e.J.determinant());
        }
        flow.entries.push_back(std::move(e));
      }
      // Composition through every intermediate t in the list.
      for (int r : t_list) {
        if (r <= s) continue;
        const Mat from_r = euler_from(b, noise, r, traj.row(r - s).transpose());
        for (int t : t_list) {
          if (t < r) continue;
          flow.semiflow_residual =
              std::max(flow.semiflow_residual, (from_r.row(t - r) - traj.row(t - s)).norm());
        }
      }
    }
  }
  if (!with_jacobian) flow.min_det = 0.0;
  return flow;
}

DiscretePath malliavin_directional(const SdeProblem& problem, const DiscretePath& h) {
  const DriftField& b = problem.drift;
  require_gradient(b, "malliavin_directional");
  if (!(h.grid == problem.grid()) || h.dim() != b.dim)
    throw DomainError("malliavin_directional: h must share the grid and dimension of the noise");
  const SolutionPath sol = solve_euler(problem);
  if (sol.diverged) throw DivergenceError("malliavin_directional: base solution overflowed");
  const int n = problem.grid().n_steps, d = b.dim;
  Mat D = Mat::Zero(n + 1, d);
  D.row(0) = h.values.row(0);
  Mat grad(d, d);
  for (int i = 0; i < n; ++i) {
    const double t0 = problem.grid().node(i), t1 = problem.grid().node(i + 1);
    b.spatial_jacobian(t0, sol.X.values.row(i).transpose(), grad);
    const Vec di = D.row(i).transpose();
    D.row(i + 1) = (di + b.time.integral(t0, t1) * grad * di).transpose() + h.values.row(i + 1) -
                   h.values.row(i);
  }
  return DiscretePath(problem.grid(), std::move(D));
}

InverseMomentReport two_point_inverse_moment(const DriftField& b, double hurst, const TimeGrid& grid,
                                             const Vec& x, const Vec& y, int samples, std::uint64_t seed) {
  if (samples < 2) throw DomainError("two_point_inverse_moment: need at least two samples");
  const double gap = (x - y).norm();
  if (!(gap > 0.0)) throw DomainError("two_point_inverse_moment: points must differ");
  Vec vals(samples);
  for (int k = 0; k < samples; ++k) {
    const FbmPath B = sample_fbm(hurst, grid, b.dim, derive_seed(seed, "two-point", k));
    const DiscretePath noise = B.as_path();
    const Mat px = euler_from(b, noise, 0, x), py = euler_from(b, noise, 0, y);
    const double closest = (px - py).rowwise().norm().minCoeff();
    vals(k) = closest > 0.0 ? gap / closest : std::numeric_limits<double>::infinity();
  }
  InverseMomentReport rep;
  rep.samples = samples;
  rep.mean = sample_mean(vals);
  rep.stderr_mean = standard_error(vals);
  return rep;
}

// Characteristics ---------------------------------------------------------------

Characteristic backward_characteristic(const DriftField& b, const DiscretePath& noise, int t_index,
                                       const Vec& y, int s_index, bool with_divergence) {
  require_pointwise(b, "backward_characteristic");
  if (with_divergence) require_gradient(b, "backward_characteristic");
  if (s_index < 0 || t_index > noise.grid.n_steps || s_index > t_index)
    throw DomainError("backward_characteristic: need 0 <= s_index <= t_index <= n");
  const int d = b.dim;
  Characteristic c;
  c.x = y;
  Vec inc(d);
  Mat grad(d, d);
  for (int i = t_index - 1; i >= s_index; --i) {
    const double t0 = noise.grid.node(i), t1 = noise.grid.node(i + 1);
    b.cell_increment(t0, t1, c.x, inc);
    if (with_divergence) {
      b.spatial_jacobian(t0, c.x, grad);
      c.div_integral += b.time.integral(t0, t1) * grad.trace();
    }
    c.x -= inc + noise_increment(noise, i);
    if (!c.x.allFinite() || c.x.norm() > kOverflowBound) {
      c.diverged = true;
      return c;
    }
  }
  return c;
}

Characteristic forward_characteristic(const DriftField& b, const DiscretePath& noise, int s_index,
                                      const Vec& x, int t_index, bool with_divergence) {
  require_pointwise(b, "forward_characteristic");
  if (with_divergence) require_gradient(b, "forward_characteristic");
  if (s_index < 0 || t_index > noise.grid.n_steps || s_index > t_index)
    throw DomainError("forward_characteristic: need 0 <= s_index <= t_index <= n");
  const int d = b.dim;
  Characteristic c;
  c.x = x;
  Vec inc(d);
  Mat grad(d, d);
  for (int i = s_index; i < t_index; ++i) {
    const double t0 = noise.grid.node(i), t1 = noise.grid.node(i + 1);
    b.cell_increment(t0, t1, c.x, inc);
    if (with_divergence) {
      b.spatial_jacobian(t0, c.x, grad);
      c.div_integral += b.time.integral(t0, t1) * grad.trace();
    }
    c.x += inc + noise_increment(noise, i);
    if (!c.x.allFinite() || c.x.norm() > kOverflowBound) {
      c.diverged = true;
      return c;
    }
  }
  return c;
}

// Export ------------------------------------------------------------------------

void write_solution_csv(std::ostream& os, const SolutionPath& sol) {
  const int d = sol.X.dim();
  os << "t";
  for (int k = 1; k <= d; ++k) os << ",X_" << k;
  for (int k = 1; k <= d; ++k) os << ",phi_" << k;
  os << "\n";
  os.precision(17);
  for (int i = 0; i < sol.X.grid.size(); ++i) {
    os << sol.X.grid.node(i);
    for (int k = 0; k < d; ++k) os << "," << sol.X.values(i, k);
    for (int k = 0; k < d; ++k) os << "," << sol.phi.values(i, k);
    os << "\n";
  }
}

void write_flow_csv(std::ostream& os, const FlowGrid& flow, const TimeGrid& grid) {
  const int d = static_cast<int>(flow.lattice.cols());
  os << "s,t,x_index";
  for (int k = 1; k <= d; ++k) os << ",Phi_" << k;
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j) os << ",J_" << i << j;
  os << ",detJ\n";
  os.precision(17);
  for (const auto& e : flow.entries) {
    os << grid.node(e.s) << "," << grid.node(e.t) << "," << e.x_index;
    for (int k = 0; k < d; ++k) os << "," << e.phi(k);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) os << "," << (e.J.size() ? e.J(i, j) : kNaN);
    os << "," << (e.J.size() ? e.J.determinant() : kNaN) << "\n";
  }
}

}  // namespace fbmlab
