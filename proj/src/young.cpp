#include "fbmlab/young.hpp"

#include "fbmlab/stats.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <list>
#include <ostream>

namespace fbmlab {

namespace {

double step_cost(const Mat& v, int i, int j, double p) {
  return std::pow((v.row(j) - v.row(i)).norm(), p);
}

PVarResult pvar_exact(const Mat& v, double p, int first, int last) {
  const int m = last - first + 1;
  std::vector<double> best(m, 0.0);
  std::vector<int> prev(m, -1);
  for (int j = 1; j < m; ++j) {
    double bj = -1.0;
    for (int i = 0; i < j; ++i) {
      const double cand = best[i] + step_cost(v, first + i, first + j, p);
      if (cand > bj) {
        bj = cand;
        prev[j] = i;
      }
    }
    best[j] = bj;
  }
  PVarResult r;
  r.method = PVarMethod::exact_dp;
  r.sum = best[m - 1];
  r.value = std::pow(r.sum, 1.0 / p);
  for (int j = m - 1; j >= 0; j = prev[j]) {
    r.optimal_partition.push_back(first + j);
    if (j == 0) break;
  }
  std::reverse(r.optimal_partition.begin(), r.optimal_partition.end());
  return r;
}

// Drop interior points whenever merging the two adjacent pieces does not
// lower the sum. The result is the sum of an actual partition, so a lower bound.
PVarResult pvar_greedy(const Mat& v, double p, int first, int last) {
  std::list<int> pts;
  for (int i = first; i <= last; ++i) pts.push_back(i);
  bool changed = true;
  while (changed) {
    changed = false;
    if (pts.size() < 3) break;
    auto a = pts.begin();
    auto b = std::next(a);
    auto c = std::next(b);
    while (c != pts.end()) {
      if (step_cost(v, *a, *c, p) >= step_cost(v, *a, *b, p) + step_cost(v, *b, *c, p)) {
        pts.erase(b);
        changed = true;
        b = c;
        ++c;
      } else {
        a = b;
        b = c;
        ++c;
      }
    }
  }
  PVarResult r;
  r.method = PVarMethod::greedy;
  r.optimal_partition.assign(pts.begin(), pts.end());
  for (std::size_t k = 1; k < r.optimal_partition.size(); ++k)
    r.sum += step_cost(v, r.optimal_partition[k - 1], r.optimal_partition[k], p);
  r.value = std::pow(r.sum, 1.0 / p);
  return r;
}

}  // namespace

PVarResult p_variation(const Mat& values, double p, PVarMethod method, int first, int last) {
  if (!(p >= 1.0)) throw DomainError("p_variation: p must be >= 1");
  if (last < 0) last = static_cast<int>(values.rows()) - 1;
  if (first < 0 || last >= values.rows() || first > last)
    throw DomainError("p_variation: bad index range");
  if (first == last) {
    PVarResult r;
    r.method = method;
    r.optimal_partition = {first};
    return r;
  }
  if (method == PVarMethod::exact_dp && last - first + 1 <= kExactPVarLimit)
    return pvar_exact(values, p, first, last);
  return pvar_greedy(values, p, first, last);
}

// Sewing ----------------------------------------------------------------------

SewResult sew(const Germ& germ, const TimeGrid& grid, int s_index, int t_index, int max_level,
              double tol) {
  if (!germ.A) throw DomainError("sew: empty germ");
  if (s_index < 0 || t_index > grid.n_steps || s_index > t_index)
    throw DomainError("sew: need 0 <= s_index <= t_index <= n_steps");
  if (max_level < 1) throw DomainError("sew: max_level must be at least 1");
  const int cells = t_index - s_index;
  SewResult out;
  out.increment = Vec::Zero(germ.dim);
  if (cells == 0) {
    out.diagnostics.converged = true;
    return out;
  }

  auto level_sums = [&](int k) {
    Mat sums = Mat::Zero(germ.dim, cells);
    const long pieces = 1L << k;
    for (int c = 0; c < cells; ++c) {
      const double a = grid.node(s_index + c);
      const double h = grid.dt() / static_cast<double>(pieces);
      for (long j = 0; j < pieces; ++j) {
        const double u = a + h * static_cast<double>(j);
        const double v = j + 1 == pieces ? grid.node(s_index + c + 1) : u + h;
        sums.col(c) += germ.A(u, v);
      }
    }
    return sums;
  };

  Mat prev = level_sums(0);
  auto& diag = out.diagnostics;
  for (int k = 1; k <= max_level; ++k) {
    Mat cur = level_sums(k);
    diag.level_deltas.push_back((cur - prev).colwise().norm().maxCoeff());
    diag.total_deltas.push_back((cur.rowwise().sum() - prev.rowwise().sum()).norm());
    prev = std::move(cur);
    diag.levels_used = k;
    if (diag.total_deltas.back() < tol) {
      diag.converged = true;
      break;
    }
  }
  out.increment = prev.rowwise().sum();

  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < diag.total_deltas.size(); ++k)
    if (diag.total_deltas[k] > 0.0) {
      xs.push_back(static_cast<double>(k));
      ys.push_back(std::log2(diag.total_deltas[k]));
    }
  if (xs.size() >= 2) {
    const ScalingFit fit = fit_line(xs, ys);
    diag.decay_rate = -fit.slope;
    diag.decay_r2 = fit.r_squared;
  }
  return out;
}

void write_sewing_csv(std::ostream& os, const SewingDiagnostics& diag) {
  os << "level,delta,total_delta\n";
  os.precision(17);
  for (std::size_t k = 0; k < diag.level_deltas.size(); ++k)
    os << k << "," << diag.level_deltas[k] << "," << diag.total_deltas[k] << "\n";
}

Germ riemann_germ(std::function<double(double)> f, std::function<double(double)> g) {
  Germ germ;
  germ.dim = 1;
  germ.eps1 = 1.0;
  germ.description = "f_s g_{s,t}";
  germ.A = [f = std::move(f), g = std::move(g)](double s, double t) {
    Vec v(1);
    v(0) = f(s) * (g(t) - g(s));
    return v;
  };
  return germ;
}

DiscretePath young_integral(const DiscretePath& f, const DiscretePath& g) {
  if (!(f.grid == g.grid) || f.dim() != g.dim())
    throw DomainError("young_integral: f and g must share grid and dimension");
  const int n = f.grid.n_steps;
  Mat out = Mat::Zero(n + 1, f.dim());
  for (int i = 0; i < n; ++i)
    out.row(i + 1) = out.row(i) + (0.5 * (f.values.row(i) + f.values.row(i + 1)))
                                      .cwiseProduct(g.values.row(i + 1) - g.values.row(i));
  return DiscretePath(f.grid, std::move(out));
}

// Affine Young ----------------------------------------------------------------

namespace {

// exp([[dA, dz], [0, 0]]) = [[e^{dA}, phi_1(dA) dz], [0, 1]]
void affine_step(const Mat& dA, const Vec& dz, Mat& aug, Mat& expo) {
  const int d = static_cast<int>(dA.rows());
  aug.setZero(d + 1, d + 1);
  aug.topLeftCorner(d, d) = dA;
  aug.topRightCorner(d, 1) = dz;
  expo = aug.exp();
}

Mat flatten(const MatrixPath& A) {
  const int d = A.dim();
  Mat flat(A.values.size(), d * d);
  for (std::size_t i = 0; i < A.values.size(); ++i)
    flat.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(A.values[i].data(), d * d);
  return flat;
}

void check_affine(const MatrixPath& A, const DiscretePath& z, const Vec& x0) {
  const int d = A.dim();
  if (static_cast<int>(A.values.size()) != A.grid.size())
    throw DomainError("affine Young: A must have one matrix per node");
  if (!(A.grid == z.grid)) throw DomainError("affine Young: A and z must share the grid");
  if (z.dim() != d || x0.size() != d) throw DomainError("affine Young: dimension mismatch");
  for (const Mat& m : A.values)
    if (m.rows() != d || m.cols() != d) throw DomainError("affine Young: A must be square d x d");
}

}  // namespace

MatrixPath reverse_path(const MatrixPath& A) {
  MatrixPath r;
  r.grid = A.grid;
  r.values.assign(A.values.rbegin(), A.values.rend());
  return r;
}

DiscretePath reverse_path(const DiscretePath& z) {
  return DiscretePath(z.grid, z.values.colwise().reverse());
}

double measure_exponential_constant(double lhs, double v, double rhs) {
  if (rhs <= 0.0) return lhs <= 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  auto ok = [&](double c) { return c * std::exp(c * v) * rhs >= lhs; };
  double lo = 0.0, hi = 1.0;
  while (!ok(hi)) {
    hi *= 2.0;
    if (hi > 1e12) return std::numeric_limits<double>::infinity();
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

AffineYoungResult solve_affine_young(const MatrixPath& A, const DiscretePath& z, const Vec& x0,
                                     double p, double p_tilde, bool measure) {
  check_affine(A, z, x0);
  const int n = A.grid.n_steps, d = A.dim();
  AffineYoungResult r;
  Mat x(n + 1, d);
  x.row(0) = x0.transpose();
  Mat aug, expo;
  for (int i = 0; i < n; ++i) {
    affine_step(A.values[i + 1] - A.values[i], (z.values.row(i + 1) - z.values.row(i)).transpose(), aug,
                expo);
    const Vec next = expo.topLeftCorner(d, d) * x.row(i).transpose() + expo.topRightCorner(d, 1);
    x.row(i + 1) = next.transpose();
    if (!next.allFinite() || next.norm() > 1e12) {
      r.blow_up = true;
      x.bottomRows(n - i).setConstant(std::numeric_limits<double>::quiet_NaN());
      break;
    }
  }
  r.x = DiscretePath(A.grid, std::move(x));
  if (r.blow_up || !measure) return r;
  r.sup_norm = r.x.values.rowwise().norm().maxCoeff();
  r.x_pvar = p_variation(r.x.values, p_tilde).value;
  r.a_pvar_p = p_variation(flatten(A), p).sum;
  r.z_pvar = p_variation(z.values, p_tilde).value;
  r.measured_c = measure_exponential_constant(r.sup_norm + r.x_pvar, r.a_pvar_p, x0.norm() + r.z_pvar);
  return r;
}

Mat affine_propagator(const MatrixPath& A, int s_index, int t_index) {
  if (s_index < 0 || t_index >= static_cast<int>(A.values.size()) || s_index > t_index)
    throw DomainError("affine_propagator: bad index range");
  const int d = A.dim();
  Mat prop = Mat::Identity(d, d);
  for (int i = s_index; i < t_index; ++i) prop = (A.values[i + 1] - A.values[i]).exp() * prop;
  return prop;
}

DiscretePath reverse_linear_flow(const MatrixPath& A, const DiscretePath& z, const Vec& terminal) {
  check_affine(A, z, terminal);
  // The reversed cell map is the exact inverse of the forward one.
  const AffineYoungResult back = solve_affine_young(reverse_path(A), reverse_path(z), terminal, 1.0,
                                                    1.0, false);
  if (back.blow_up) throw DivergenceError("reverse_linear_flow: reversed solve blew up");
  return reverse_path(back.x);
}

// Nonlinear Young -------------------------------------------------------------

NonlinearYoungResult solve_nonlinear_yde(const TwoParamField& A, const Vec& y0, const TimeGrid& grid,
                                         int max_level, double tol) {
  if (!A.A) throw DomainError("solve_nonlinear_yde: empty field");
  if (y0.size() != A.dim) throw DomainError("solve_nonlinear_yde: dimension mismatch");
  if (max_level < 0) throw DomainError("solve_nonlinear_yde: max_level must be nonnegative");
  const int n = grid.n_steps;

  auto solve_level = [&](int k) {
    Mat y(n + 1, A.dim);
    y.row(0) = y0.transpose();
    const long pieces = 1L << k;
    Vec cur = y0;
    for (int i = 0; i < n; ++i) {
      const double a = grid.node(i), h = grid.dt() / static_cast<double>(pieces);
      for (long j = 0; j < pieces; ++j) {
        const double u = a + h * static_cast<double>(j);
        const double v = j + 1 == pieces ? grid.node(i + 1) : u + h;
        const Vec half = cur + 0.5 * A.A(u, v, cur);
        cur += A.A(u, v, half);
      }
      if (!cur.allFinite()) throw DivergenceError("solve_nonlinear_yde: iterate is not finite");
      y.row(i + 1) = cur.transpose();
    }
    return y;
  };

  NonlinearYoungResult r;
  Mat prev = solve_level(0);
  for (int k = 1; k <= max_level; ++k) {
    Mat cur = solve_level(k);
    const double delta = (cur - prev).rowwise().norm().maxCoeff();
    r.diagnostics.level_deltas.push_back(delta);
    r.diagnostics.total_deltas.push_back((cur.row(n) - prev.row(n)).norm());
    r.diagnostics.levels_used = k;
    prev = std::move(cur);
    if (delta < tol) {
      r.diagnostics.converged = true;
      break;
    }
  }
  if (max_level == 0) r.diagnostics.converged = true;
  r.y = DiscretePath(grid, prev);

  auto control = A.control ? A.control : [](double s, double t) { return t - s; };
  const double exponent = (1.0 + A.eta) / A.p;
  std::vector<double> ws, rs;
  for (int width = 1; width <= n; width *= 2) {
    double wmax = 0.0, rmax = 0.0;
    for (int s = 0; s + width <= n; s += width) {
      const double ts = grid.node(s), tt = grid.node(s + width);
      const Vec ys = prev.row(s).transpose();
      const double rem = ((prev.row(s + width).transpose() - ys) - A.A(ts, tt, ys)).norm();
      const double w = control(ts, tt);
      wmax = std::max(wmax, w);
      rmax = std::max(rmax, rem);
      if (w > 0.0) r.measured_constant = std::max(r.measured_constant, rem / std::pow(w, exponent));
    }
    r.window_control.push_back(wmax);
    r.window_remainder.push_back(rmax);
    if (wmax > 0.0 && rmax > 0.0) {
      ws.push_back(wmax);
      rs.push_back(rmax);
    }
  }
  if (ws.size() >= 2) r.remainder_slope = fit_loglog(ws, rs).slope;
  return r;
}

}  // namespace fbmlab
