#pragma once

#include "fbmlab/drift.hpp"
#include "fbmlab/sde.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

namespace fbmlab {

/// W1 between two 1-d empirical measures. Equal sizes use the sorted-sample
/// coupling; unequal sizes integrate |F_a - F_b| exactly.
double wasserstein1_1d(const Vec& a, const Vec& b);

/// Mean of 1-d W1 over random unit projections (rows are points).
double sliced_wasserstein1(const Mat& a, const Mat& b, int projections = 64, std::uint64_t seed = 0);

/// W1 for d = 1, sliced W1 otherwise.
double empirical_w1(const Mat& a, const Mat& b, std::uint64_t seed = 0);

/// Equal-weight particles, one per row.
struct EmpiricalMeasure {
  Mat particles;

  int size() const { return static_cast<int>(particles.rows()); }
  double total_mass() const { return particles.rows() > 0 ? 1.0 : 0.0; }
};

/// F_t(x, mu) = f_t(x) + (g_t * mu)(x). x0_sampler(N, seed) returns N x d.
struct MkvProblem {
  DriftField f;
  DriftField g;
  double hurst = 0.5;
  TimeGrid grid{128};
  std::function<Mat(int, std::uint64_t)> x0_sampler;
};

/// All particles at x0.
std::function<Mat(int, std::uint64_t)> deterministic_start(const Vec& x0);
/// i.i.d. N(mean, sd^2 I).
std::function<Mat(int, std::uint64_t)> gaussian_start(const Vec& mean, double sd);

struct PicardDiagnostics {
  std::vector<double> distances;   // sup_t e^{-lambda int_0^t h^q} W1(Y^k_t, Y^{k-1}_t)
  std::vector<double> raw_distances;  // same with lambda = 0
  double lambda = 0.0;
  double max_ratio = 0.0;          // max d_{k+1} / d_k at the chosen lambda
  double fitted_ratio = 0.0;       // exp(slope) of log d_k against k
  double fit_r2 = 0.0;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
};

struct PicardResult {
  std::vector<Mat> paths;  // per particle: (n+1) x d
  PicardDiagnostics diagnostics;
};

/// Weighted metric between two ensembles, evaluated at every `stride`-th node.
double weighted_w1_distance(const std::vector<Mat>& a, const std::vector<Mat>& b, const TimeGrid& grid,
                            const std::function<double(double)>& log_weight, int stride = 1);

/// Picard iteration on laws with N particles and shared noises. Y^0 solves
/// with drift f alone. Stops when the distance falls below tol.
PicardResult solve_mkv_picard(const MkvProblem& problem, int iterations, int particles,
                              std::uint64_t seed, double tol = 1e-12, int stride = 1);

/// N live-coupled particles: the drift uses the current empirical measure.
std::vector<EmpiricalMeasure> solve_mkv_particles(const MkvProblem& problem, int particles,
                                                  std::uint64_t seed);

/// CSV: t, particle, x_1..x_d.
void write_measure_csv(std::ostream& os, const std::vector<EmpiricalMeasure>& path, const TimeGrid& grid);

}  // namespace fbmlab
