#include "fbmlab/core.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

namespace fbmlab {

TimeGrid::TimeGrid(int n, double T) : n_steps(n), horizon(T) {
  if (n < 1) throw DomainError("TimeGrid: n_steps must be positive");
  if (!(T > 0.0)) throw DomainError("TimeGrid: horizon must be positive");
}

Vec TimeGrid::nodes() const {
  Vec t(size());
  for (int i = 0; i < size(); ++i) t(i) = node(i);
  return t;
}

int TimeGrid::index_of(double t) const {
  const long i = std::lround(t / dt());
  if (i < 0) return 0;
  if (i > n_steps) return n_steps;
  return static_cast<int>(i);
}

DiscretePath::DiscretePath(TimeGrid g, Mat v) : grid(g), values(std::move(v)) {
  if (values.rows() != grid.size())
    throw DomainError("DiscretePath: row count must equal the number of grid nodes");
}

DiscretePath DiscretePath::zeros(const TimeGrid& g, int dim) {
  return DiscretePath(g, Mat::Zero(g.size(), dim));
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index) {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ hash_label(label));
  return splitmix64(s ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

Vec Rng::gaussian_vector(Eigen::Index n) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = gaussian();
  return v;
}

Mat Rng::gaussian_matrix(Eigen::Index rows, Eigen::Index cols) {
  Mat m(rows, cols);
  // column-major fill keeps the stream order stable for Vec <-> Mat reuse
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = gaussian();
  return m;
}

void Digest::update(std::string_view bytes) {
  for (unsigned char c : bytes) {
    state_ ^= c;
    state_ *= 1099511628211ULL;
  }
}

void Digest::update(double value) {
  char buf[sizeof(double)];
  std::memcpy(buf, &value, sizeof(double));
  update(std::string_view(buf, sizeof(double)));
}

std::string Digest::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
  return buf;
}

double conjugate_exponent(double q) {
  if (std::isinf(q)) return 1.0;
  if (!(q > 1.0)) throw DomainError("conjugate_exponent: q must exceed 1");
  return q / (q - 1.0);
}

}  // namespace fbmlab
