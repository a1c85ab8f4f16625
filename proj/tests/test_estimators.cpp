#include "fbmlab/estimators.hpp"
#include "fbmlab/fbm.hpp"

#include <doctest.h>

#include <cmath>

using namespace fbmlab;

TEST_CASE("moment estimator of a constant sample") {
  const MomentEstimate e = moment_estimator(Vec::Constant(50, -3.0), 2.0, 200, 1);
  CHECK(e.value == doctest::Approx(3.0));
  CHECK(e.ci_low == doctest::Approx(3.0));
  CHECK(e.ci_high == doctest::Approx(3.0));
}

TEST_CASE("moment estimator interval covers the gaussian second moment") {
  Rng rng(5);
  const MomentEstimate e = moment_estimator(rng.gaussian_vector(4000), 2.0, 500, 2);
  CHECK(e.ci_low < 1.0 + 0.05);
  CHECK(e.ci_high > 1.0 - 0.05);
  CHECK(e.ci_low <= e.value);
  CHECK(e.value <= e.ci_high);
}

TEST_CASE("oscillatory integral of simple paths") {
  const TimeGrid g(2000);
  const Vec xi = Vec::Constant(1, 3.0);
  const std::complex<double> c = oscillatory_integral(DiscretePath(g, Mat::Constant(g.size(), 1, 0.4)), 100, 900, xi);
  CHECK(std::abs(c - 0.4 * std::exp(std::complex<double>(0.0, 1.2))) < 1e-12);
  Mat lin(g.size(), 1);
  for (int i = 0; i < g.size(); ++i) lin(i, 0) = g.node(i);
  const std::complex<double> I(0.0, 1.0);
  const std::complex<double> exact = (std::exp(3.0 * I * 0.45) - std::exp(3.0 * I * 0.05)) / (3.0 * I);
  CHECK(std::abs(oscillatory_integral(DiscretePath(g, lin), 100, 900, xi) - exact) < 1e-6);
}

TEST_CASE("resolution band follows the grid") {
  CHECK(resolution_band(0.35, 4096).band_lo == 1);
  CHECK(resolution_band(0.35, 4096).band_hi == 4);
  CHECK(resolution_band(0.5, 4096).band_lo == 2);
  CHECK(resolution_band(0.5, 4096).band_hi == 6);
  CHECK(resolution_band(0.75, 4096).band_hi == 6);
}

TEST_CASE("rho estimate of brownian paths") {
  const TimeGrid g(1024);
  std::vector<DiscretePath> paths;
  for (int k = 0; k < 20; ++k) paths.push_back(sample_fbm(0.5, g, 2, 100 + k).as_path());
  const RhoIrregularityReport r = rho_irregularity(paths, resolution_band(0.5, 1024));
  CHECK(r.max_bound_ratio <= 1.0 + 1e-12);
  CHECK(r.median_rho == doctest::Approx(1.0).epsilon(0.3));
}

TEST_CASE("conditional increments vanish without drift") {
  ConditionalRegularityConfig c;
  c.grid = TimeGrid(64);
  c.s_index = 32;
  c.lags = {2, 4, 8};
  c.pasts = 2;
  c.branches = 8;
  c.x0 = Vec::Zero(1);
  DriftField b = zero_field(1);
  b.alpha = 0.5;
  b.q = 2.0;
  const ConditionalIncrementStats st = conditional_regularity_exponent(b, c);
  CHECK(st.exact_zero);
  CHECK(st.predicted_slope == doctest::Approx(0.5 + 0.5 / 3.0));
}

TEST_CASE("conditional regularity refuses the supercritical regime") {
  ConditionalRegularityConfig c;
  c.hurst = 0.8;
  c.q = 4.0;
  c.alpha = 0.05;
  c.lags = {2};
  DriftField b = sign_power_field(0.05);
  CHECK_THROWS_AS(conditional_regularity_exponent(b, c), DomainError);
}

TEST_CASE("initial-condition stability without drift is exact") {
  StabilityConfig c;
  c.grid = TimeGrid(32);
  c.replicates = 4;
  c.x0 = Vec::Zero(1);
  c.perturbations = {0.5, 0.25, 0.125};
  DriftField b = zero_field(1);
  b.alpha = 0.5;
  b.q = 2.0;
  const StabilityReport r = stability_initial(b, c);
  for (std::size_t k = 0; k < 3; ++k) CHECK(r.mean_distance[k] == doctest::Approx(c.perturbations[k]).epsilon(1e-14));
  CHECK(r.fit.slope == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("counterexample preconditions") {
  CounterexampleConfig c;
  c.rho_scan = {0.5};
  c.x_sequence = {0.5};
  c.paths = 2;
  c.grid = TimeGrid(16);
  c.hurst = 0.5;
  c.alpha = 0.5;
  CHECK_THROWS_AS(counterexample_branching(c), DomainError);
  c.hurst = 0.8;
  c.alpha = 0.05;
  c.delta = 0.1;
  const CounterexampleReport r = counterexample_branching(c);
  CHECK(r.gamma == doctest::Approx(1.0 / (4.0 / 3.0 * 0.95)));
  CHECK(r.mirror_residual == 0.0);
}

TEST_CASE("subcritical gap closes as the start points merge") {
  CounterexampleConfig c;
  c.hurst = 0.5;
  c.q_tilde = 4.0;
  c.alpha = 0.5;
  c.x_sequence = {0.5, 0.0625, 0.0078125};
  c.paths = 40;
  c.grid = TimeGrid(128);
  const GapReport g = counterexample_gap(c);
  CHECK(g.gap[2] < g.gap[1]);
  CHECK(g.gap[1] < g.gap[0]);
}
