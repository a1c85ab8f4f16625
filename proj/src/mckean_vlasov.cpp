#include "fbmlab/mckean_vlasov.hpp"

#include "fbmlab/fbm.hpp"
#include "fbmlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace fbmlab {

double wasserstein1_1d(const Vec& a, const Vec& b) {
  if (a.size() == 0 || b.size() == 0) throw DomainError("wasserstein1_1d: empty sample");
  std::vector<double> x(a.data(), a.data() + a.size()), y(b.data(), b.data() + b.size());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  if (x.size() == y.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += std::abs(x[i] - y[i]);
    return acc / static_cast<double>(x.size());
  }
  // int |F_a - F_b| over the merged support
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, prev = std::min(x.front(), y.front()), acc = 0.0;
  while (i < x.size() || j < y.size()) {
    const double next = (j >= y.size() || (i < x.size() && x[i] <= y[j])) ? x[i] : y[j];
    acc += std::abs(fa - fb) * (next - prev);
    prev = next;
    while (i < x.size() && x[i] == next) fa = static_cast<double>(++i) / na;
    while (j < y.size() && y[j] == next) fb = static_cast<double>(++j) / nb;
  }
  return acc;
}

double sliced_wasserstein1(const Mat& a, const Mat& b, int projections, std::uint64_t seed) {
  if (a.cols() != b.cols()) throw DomainError("sliced_wasserstein1: dimension mismatch");
  if (projections < 1) throw DomainError("sliced_wasserstein1: need at least one projection");
  Rng rng(seed, "sliced-w1");
  double acc = 0.0;
  for (int k = 0; k < projections; ++k) {
    const Vec dir = rng.gaussian_vector(a.cols()).normalized();
    acc += wasserstein1_1d(a * dir, b * dir);
  }
  return acc / projections;
}

double empirical_w1(const Mat& a, const Mat& b, std::uint64_t seed) {
  if (a.cols() == 1 && b.cols() == 1) return wasserstein1_1d(a.col(0), b.col(0));
  return sliced_wasserstein1(a, b, 64, seed);
}

std::function<Mat(int, std::uint64_t)> deterministic_start(const Vec& x0) {
  return [x0](int n, std::uint64_t) {
    Mat m(n, x0.size());
    m.rowwise() = x0.transpose();
    return m;
  };
}

std::function<Mat(int, std::uint64_t)> gaussian_start(const Vec& mean, double sd) {
  return [mean, sd](int n, std::uint64_t seed) {
    Rng rng(seed, "mkv-start");
    Mat m = sd * rng.gaussian_matrix(n, mean.size());
    m.rowwise() += mean.transpose();
    return m;
  };
}

namespace {

void check_problem(const MkvProblem& pr) {
  if (pr.f.dim != pr.g.dim) throw DomainError("McKean-Vlasov: f and g dimensions differ");
  if (!pr.f.pointwise() || !pr.g.pointwise())
    throw DomainError("McKean-Vlasov: f and g must be evaluable (mollify distributional parts)");
  if (!pr.x0_sampler) throw DomainError("McKean-Vlasov: missing initial sampler");
}

std::vector<DiscretePath> particle_noises(const MkvProblem& pr, int n, std::uint64_t seed) {
  std::vector<DiscretePath> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i)
    out.push_back(sample_fbm(pr.hurst, pr.grid, pr.f.dim, derive_seed(seed, "mkv-noise", i)).as_path());
  return out;
}

Mat starting_points(const MkvProblem& pr, int n, std::uint64_t seed) {
  Mat x0 = pr.x0_sampler(n, derive_seed(seed, "mkv-start"));
  if (x0.rows() != n || x0.cols() != pr.f.dim) throw DomainError("McKean-Vlasov: sampler returned wrong shape");
  return x0;
}

// (g * mu)(x) cell increment against the frozen particles at node i.
void convolution_increment(const DriftField& g, double t0, double t1, const Vec& x,
                           const std::vector<Mat>& frozen, int i, Vec& acc, Vec& tmp) {
  acc.setZero();
  if (frozen.empty()) return;
  Vec diff(x.size());
  for (const Mat& y : frozen) {
    diff = x - y.row(i).transpose();
    g.cell_increment(t0, t1, diff, tmp);
    acc += tmp;
  }
  acc /= static_cast<double>(frozen.size());
}

// One Picard map: solve every particle against the frozen ensemble.
std::vector<Mat> picard_map(const MkvProblem& pr, const std::vector<DiscretePath>& noises, const Mat& x0,
                            const std::vector<Mat>& frozen) {
  const int n = pr.grid.n_steps, d = pr.f.dim;
  std::vector<Mat> out;
  out.reserve(noises.size());
  Vec inc(d), conv(d), tmp(d);
  for (std::size_t p = 0; p < noises.size(); ++p) {
    Mat path(n + 1, d);
    Vec cur = x0.row(static_cast<Eigen::Index>(p)).transpose();
    path.row(0) = cur.transpose();
    for (int i = 0; i < n; ++i) {
      const double t0 = pr.grid.node(i), t1 = pr.grid.node(i + 1);
      pr.f.cell_increment(t0, t1, cur, inc);
      convolution_increment(pr.g, t0, t1, cur, frozen, i, conv, tmp);
      cur += inc + conv + (noises[p].values.row(i + 1) - noises[p].values.row(i)).transpose();
      if (!cur.allFinite() || cur.norm() > kOverflowBound)
        throw DivergenceError("McKean-Vlasov: particle overflowed");
      path.row(i + 1) = cur.transpose();
    }
    out.push_back(std::move(path));
  }
  return out;
}

Mat snapshot(const std::vector<Mat>& paths, int i) {
  Mat m(paths.size(), paths.front().cols());
  for (std::size_t p = 0; p < paths.size(); ++p) m.row(static_cast<Eigen::Index>(p)) = paths[p].row(i);
  return m;
}

}  // namespace

double weighted_w1_distance(const std::vector<Mat>& a, const std::vector<Mat>& b, const TimeGrid& grid,
                            const std::function<double(double)>& log_weight, int stride) {
  if (a.empty() || b.empty()) throw DomainError("weighted_w1_distance: empty ensemble");
  double best = 0.0;
  for (int i = 0; i <= grid.n_steps; i += std::max(1, stride))
    best = std::max(best, std::exp(log_weight(grid.node(i))) * empirical_w1(snapshot(a, i), snapshot(b, i)));
  return best;
}

PicardResult solve_mkv_picard(const MkvProblem& problem, int iterations, int particles, std::uint64_t seed,
                              double tol, int stride) {
  check_problem(problem);
  if (iterations < 1 || particles < 1) throw DomainError("solve_mkv_picard: need iterations, particles >= 1");
  const auto noises = particle_noises(problem, particles, seed);
  const Mat x0 = starting_points(problem, particles, seed);
  const TimeGrid& grid = problem.grid;

  PicardResult res;
  auto& diag = res.diagnostics;
  std::vector<Mat> current = picard_map(problem, noises, x0, {});
  // W1 per strided node for each iteration, kept for the lambda search.
  std::vector<std::vector<double>> profiles;
  std::vector<int> nodes;
  for (int i = 0; i <= grid.n_steps; i += std::max(1, stride)) nodes.push_back(i);
  int increases = 0;
  for (int k = 1; k <= iterations; ++k) {
    std::vector<Mat> next = picard_map(problem, noises, x0, current);
    std::vector<double> prof;
    for (int i : nodes) prof.push_back(empirical_w1(snapshot(next, i), snapshot(current, i), seed));
    const double raw = *std::max_element(prof.begin(), prof.end());
    if (!diag.raw_distances.empty() && raw > diag.raw_distances.back()) {
      if (++increases >= 3) diag.diverged = true;
    } else {
      increases = 0;
    }
    diag.raw_distances.push_back(raw);
    profiles.push_back(std::move(prof));
    current = std::move(next);
    diag.iterations = k;
    if (raw <= tol) {
      diag.converged = true;
      break;
    }
    if (diag.diverged) break;
  }
  res.paths = std::move(current);

  // h_t = ||g_t|| profile; the weight is exp(-lambda int_0^t h^q).
  const double q = std::isinf(problem.g.q) ? 1.0 : problem.g.q;
  const ControlFn h = control_from_profile([&](double t) { return problem.g.norm_profile(t); }, q, "h");
  std::vector<double> H;
  for (int i : nodes) H.push_back(h(0.0, grid.node(i)));
  auto distances_for = [&](double lambda) {
    std::vector<double> out;
    for (const auto& prof : profiles) {
      double best = 0.0;
      for (std::size_t j = 0; j < prof.size(); ++j) best = std::max(best, std::exp(-lambda * H[j]) * prof[j]);
      out.push_back(best);
    }
    return out;
  };
  auto max_ratio = [](const std::vector<double>& d) {
    double r = 0.0;
    for (std::size_t k = 1; k < d.size(); ++k)
      if (d[k - 1] > 0.0) r = std::max(r, d[k] / d[k - 1]);
    return r;
  };
  double lambda = 0.0;
  std::vector<double> dist = distances_for(0.0);
  while (max_ratio(dist) > 0.5 && lambda < 4096.0) {
    lambda = lambda == 0.0 ? 0.25 : 2.0 * lambda;
    dist = distances_for(lambda);
  }
  diag.lambda = lambda;
  diag.distances = dist;
  diag.max_ratio = max_ratio(dist);
  std::vector<double> ks, ds;
  for (std::size_t k = 0; k < dist.size(); ++k)
    if (dist[k] > 0.0) {
      ks.push_back(static_cast<double>(k + 1));
      ds.push_back(std::log(dist[k]));
    }
  if (ks.size() >= 2) {
    const ScalingFit fit = fit_line(ks, ds);
    diag.fitted_ratio = std::exp(fit.slope);
    diag.fit_r2 = fit.r_squared;
  }
  return res;
}

std::vector<EmpiricalMeasure> solve_mkv_particles(const MkvProblem& problem, int particles,
                                                  std::uint64_t seed) {
  check_problem(problem);
  if (particles < 1) throw DomainError("solve_mkv_particles: need at least one particle");
  const auto noises = particle_noises(problem, particles, seed);
  const TimeGrid& grid = problem.grid;
  const int d = problem.f.dim;
  std::vector<EmpiricalMeasure> path;
  path.push_back({starting_points(problem, particles, seed)});
  Vec inc(d), tmp(d), conv(d), diff(d);
  for (int i = 0; i < grid.n_steps; ++i) {
    const double t0 = grid.node(i), t1 = grid.node(i + 1);
    const Mat& cur = path.back().particles;
    Mat next(particles, d);
    for (int p = 0; p < particles; ++p) {
      const Vec x = cur.row(p).transpose();
      problem.f.cell_increment(t0, t1, x, inc);
      conv.setZero();
      for (int j = 0; j < particles; ++j) {
        diff = x - cur.row(j).transpose();
        problem.g.cell_increment(t0, t1, diff, tmp);
        conv += tmp;
      }
      const Vec y = x + inc + conv / particles + (noises[p].values.row(i + 1) - noises[p].values.row(i)).transpose();
      if (!y.allFinite() || y.norm() > kOverflowBound) throw DivergenceError("solve_mkv_particles: overflow");
      next.row(p) = y.transpose();
    }
    path.push_back({std::move(next)});
  }
  return path;
}

void write_measure_csv(std::ostream& os, const std::vector<EmpiricalMeasure>& path, const TimeGrid& grid) {
  if (path.empty()) return;
  const auto d = path.front().particles.cols();
  os << "t,particle";
  for (Eigen::Index k = 1; k <= d; ++k) os << ",x_" << k;
  os << "\n";
  os.precision(17);
  for (std::size_t i = 0; i < path.size(); ++i)
    for (int p = 0; p < path[i].size(); ++p) {
      os << grid.node(static_cast<int>(i)) << "," << p;
      for (Eigen::Index k = 0; k < d; ++k) os << "," << path[i].particles(p, k);
      os << "\n";
    }
}

}  // namespace fbmlab
