#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fbmlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Thrown when an argument lies outside the documented domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical procedure cannot produce a trustworthy result
/// (failed factorization, non-convergent quadrature, lattice mismatch).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by solvers whose iterates blow up or stop contracting.
class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Uniform grid t_i = i * horizon / n_steps, i = 0..n_steps.
struct TimeGrid {
  int n_steps = 1;
  double horizon = 1.0;

  TimeGrid() = default;
  TimeGrid(int n, double T = 1.0);

  double dt() const { return horizon / n_steps; }
  double node(int i) const { return horizon * static_cast<double>(i) / n_steps; }
  int size() const { return n_steps + 1; }
  Vec nodes() const;
  /// Index of the node nearest to t (clamped to the grid).
  int index_of(double t) const;

  bool operator==(const TimeGrid& other) const = default;
};

/// Path sampled on a TimeGrid: one row per node, one column per component.
struct DiscretePath {
  TimeGrid grid;
  Mat values;

  DiscretePath() = default;
  DiscretePath(TimeGrid g, Mat v);
  static DiscretePath zeros(const TimeGrid& g, int dim);

  int dim() const { return static_cast<int>(values.cols()); }
  Eigen::RowVectorXd at(int i) const { return values.row(i); }
  /// Increment f_t - f_s between node indices.
  Eigen::RowVectorXd increment(int s, int t) const { return values.row(t) - values.row(s); }
};

// Seeds are derived as a counter-based stream: (master, purpose label,
// replicate index) is hashed with splitmix64, so replicates never share state.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_label(std::string_view label);
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index = 0);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t master, std::string_view label, std::uint64_t index = 0)
      : engine_(derive_seed(master, label, index)) {}

  double gaussian() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  Vec gaussian_vector(Eigen::Index n);
  Mat gaussian_matrix(Eigen::Index rows, Eigen::Index cols);
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// 64-bit FNV-1a, used for stable output digests.
class Digest {
 public:
  void update(std::string_view bytes);
  void update(double value);
  std::uint64_t value() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 1469598103934665603ULL;
};

/// Conjugate exponent q' = q / (q - 1); q = inf maps to 1.
double conjugate_exponent(double q);

}  // namespace fbmlab
