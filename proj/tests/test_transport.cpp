#include "fbmlab/fbm.hpp"
#include "fbmlab/transport.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace fbmlab;

namespace {

double gauss(const Vec& x) { return std::exp(-0.5 * x(0) * x(0)) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

TEST_CASE("uniform lattice endpoints") {
  const Mat l = uniform_lattice(-2.0, 2.0, 5);
  CHECK(l(0, 0) == -2.0);
  CHECK(l(4, 0) == 2.0);
  CHECK(l(2, 0) == 0.0);
  CHECK_THROWS_AS(uniform_lattice(1.0, 0.0, 5), DomainError);
}

TEST_CASE("free transport and continuity are shifts") {
  const TimeGrid g(64);
  const DiscretePath B = sample_fbm(0.5, g, 1, 1).as_path();
  const Mat l = uniform_lattice(-6.0, 6.0, 241);
  const ScalarFieldPath u = solve_transport(gauss, zero_field(1), B, l, {0, 32, 64});
  const DensityPath mu = solve_continuity(gauss, zero_field(1), B, l, {0, 64});
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    const Vec y = Vec::Constant(1, l(i, 0) - B.values(64, 0));
    CHECK(u.values(2, i) == doctest::Approx(gauss(y)).epsilon(1e-14));
    CHECK(mu.values(1, i) == doctest::Approx(gauss(y)).epsilon(1e-14));
  }
  CHECK(mass_ledger(mu).max_relative_drift < 1e-6);
}

TEST_CASE("mass drift and duality residual shrink under refinement") {
  const DiscretePath fine = sample_fbm(0.5, TimeGrid(256), 1, 2).as_path();
  const Mat l = uniform_lattice(-8.0, 8.0, 321);
  const DriftField b = sine_field(0.5);
  double prev_mass = 0.0, prev_dual = 0.0;
  for (int n : {64, 256}) {
    Mat v(n + 1, 1);
    for (int i = 0; i <= n; ++i) v(i, 0) = fine.values(i * (256 / n), 0);
    const DiscretePath B(TimeGrid(n), v);
    const double mass = mass_ledger(solve_continuity(gauss, b, B, l, {0, n})).max_relative_drift;
    const double dual = duality_check(solve_transport(gauss, b, B, l, {0, n}),
                                      solve_backward_continuity(gauss, b, B, l, {0, n}));
    if (prev_mass > 0.0) {
      CHECK(mass < 0.5 * prev_mass);
      CHECK(dual < 0.5 * prev_dual);
    }
    prev_mass = mass;
    prev_dual = dual;
  }
}

TEST_CASE("duality check rejects mismatched pairs") {
  const TimeGrid g(16);
  const DiscretePath B = DiscretePath::zeros(g, 1);
  const ScalarFieldPath u = solve_transport(gauss, zero_field(1), B, uniform_lattice(-4, 4, 81), {0, 16});
  const DensityPath shifted = solve_backward_continuity(gauss, zero_field(1), B, uniform_lattice(-3, 5, 81), {0, 16});
  CHECK_THROWS_AS(duality_check(u, shifted), DomainError);
  const DensityPath early = solve_backward_continuity(gauss, zero_field(1), B, uniform_lattice(-4, 4, 81), {0, 8});
  CHECK_THROWS_AS(duality_check(u, early), DomainError);
}

TEST_CASE("continuity needs a uniform one-dimensional lattice") {
  const TimeGrid g(4);
  Mat l(3, 1);
  l << 0.0, 0.1, 0.5;
  CHECK_THROWS_AS(solve_continuity(gauss, zero_field(1), DiscretePath::zeros(g, 1), l, {0, 4}), DomainError);
}
