#include "fbmlab/fbm.hpp"
#include "fbmlab/sde.hpp"

#include <doctest.h>

#include <cmath>

using namespace fbmlab;

TEST_CASE("zero drift returns the shifted noise") {
  const TimeGrid g(64);
  const DiscretePath B = sample_fbm(0.4, g, 2, 1).as_path();
  const Vec x0 = (Vec(2) << 1.0, -1.0).finished();
  const SolutionPath sol = solve_euler(SdeProblem(zero_field(2), B, x0));
  CHECK((sol.X.values - (B.values.rowwise() + x0.transpose())).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((sol.phi.values.rowwise() - x0.transpose()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("linear drift follows the explicit recursion") {
  const TimeGrid g(100);
  const DiscretePath B = sample_fbm(0.6, g, 1, 2).as_path();
  const double lam = -0.8;
  const SolutionPath sol = solve_euler(SdeProblem(linear_field(lam), B, Vec::Constant(1, 0.5)));
  double x = 0.5;
  for (int i = 0; i < 100; ++i) {
    x = x + lam * x * g.dt() + (B.values(i + 1, 0) - B.values(i, 0));
    CHECK(sol.X.values(i + 1, 0) == doctest::Approx(x).epsilon(1e-13));
  }
}

TEST_CASE("dimension mismatches are rejected") {
  const TimeGrid g(8);
  CHECK_THROWS_AS(SdeProblem(zero_field(2), DiscretePath::zeros(g, 1), Vec::Zero(2)), DomainError);
  CHECK_THROWS_AS(SdeProblem(zero_field(1), DiscretePath::zeros(g, 1), Vec::Zero(2)), DomainError);
}

TEST_CASE("overflow is flagged") {
  const TimeGrid g(64);
  const SolutionPath sol = solve_euler(SdeProblem(linear_field(2000.0), DiscretePath::zeros(g, 1), Vec::Ones(1)));
  CHECK(sol.diverged);
  CHECK(sol.diverged_index > 0);
}

TEST_CASE("jacobian of a linear drift is a product of scalars") {
  const TimeGrid g(50);
  const DiscretePath B = sample_fbm(0.5, g, 1, 3).as_path();
  const JacobianPath jp = jacobian_flow(linear_field(0.4), B, 10, Vec::Constant(1, 0.2));
  for (std::size_t k = 0; k < jp.J.size(); ++k) {
    CHECK(jp.J[k](0, 0) == doctest::Approx(std::pow(1.0 + 0.4 * g.dt(), static_cast<double>(k))).epsilon(1e-12));
    CHECK(std::abs(jp.J[k](0, 0) * jp.K[k](0, 0) - 1.0) < 1e-12);
  }
}

TEST_CASE("flow grid has a consistent semiflow and invertible Jacobians") {
  const TimeGrid g(256);
  const DiscretePath B = sample_fbm(0.5, g, 2, 4).as_path();
  Mat lattice(3, 2);
  lattice << 0.0, 0.0, 0.5, -0.3, -1.0, 1.0;
  const FlowGrid fg = compute_flow(cross_sine_field(1.0), B, {0, 64, 128}, {64, 128, 256}, lattice, true);
  CHECK(fg.semiflow_residual < 1e-12);
  CHECK(fg.identity_residual < 1e-10);
  CHECK(fg.min_det > 0.0);
  const FlowEntry& e = fg.at(0, 256, 1);
  const Mat traj = euler_from(cross_sine_field(1.0), B, 0, lattice.row(1).transpose());
  CHECK((e.phi - traj.row(256).transpose()).norm() < 1e-12);
}

TEST_CASE("malliavin derivative of a linear drift") {
  const TimeGrid g(64);
  const DiscretePath B = sample_fbm(0.5, g, 1, 5).as_path();
  DiscretePath h = DiscretePath::zeros(g, 1);
  for (int i = 0; i <= 64; ++i) h.values(i, 0) = std::sin(g.node(i));
  const DiscretePath D = malliavin_directional(SdeProblem(linear_field(-1.2), B, Vec::Zero(1)), h);
  double d = 0.0;
  for (int i = 0; i < 64; ++i) {
    d = d - 1.2 * d * g.dt() + h.values(i + 1, 0) - h.values(i, 0);
    CHECK(D.values(i + 1, 0) == doctest::Approx(d).epsilon(1e-12));
  }
}

TEST_CASE("characteristics without drift are exact shifts") {
  const TimeGrid g(32);
  const DiscretePath B = sample_fbm(0.3, g, 1, 6).as_path();
  const Characteristic c = backward_characteristic(zero_field(1), B, 32, Vec::Constant(1, 0.7));
  CHECK(c.x(0) == doctest::Approx(0.7 - B.values(32, 0)).epsilon(1e-14));
  const Characteristic f = forward_characteristic(zero_field(1), B, 0, c.x, 32);
  CHECK(f.x(0) == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("backward characteristic inverts the forward map to first order") {
  const DriftField b = sine_field(1.0);
  double prev = 0.0;
  for (int n : {128, 256, 512}) {
    const TimeGrid g(n);
    const DiscretePath B = DiscretePath::zeros(g, 1);
    const Characteristic f = forward_characteristic(b, B, 0, Vec::Constant(1, 0.3), n);
    const Characteristic r = backward_characteristic(b, B, n, f.x);
    const double err = std::abs(r.x(0) - 0.3);
    if (prev > 0.0) CHECK(err < 0.6 * prev);
    prev = err;
  }
}

TEST_CASE("distributional drift needs condition A") {
  const TimeGrid g(64);
  const DiscretePath B = sample_fbm(0.5, g, 1, 7).as_path();
  DriftField b = weierstrass_field(-0.9, 10);
  b.q = 2.0;
  CHECK_THROWS_AS(solve_distributional(b, {1e-2, 1e-3}, 0.5, B, Vec::Zero(1)), DomainError);
}

TEST_CASE("mollified solutions approach each other") {
  const TimeGrid g(256);
  const DiscretePath B = sample_fbm(0.3, g, 1, 8).as_path();
  DriftField b = weierstrass_field(-0.1, 12);
  b.q = 2.0;
  const MollifiedFamily fam = solve_distributional(b, {1e-1, 1e-2, 1e-3}, 0.3, B, Vec::Zero(1));
  REQUIRE(fam.cauchy_deltas.size() == 2);
  CHECK(fam.regime.condition_a);
  CHECK(fam.cauchy_deltas[1] < fam.cauchy_deltas[0]);
}

TEST_CASE("averaged field of a constant drift is linear in time") {
  const TimeGrid g(16);
  const DiscretePath B = sample_fbm(0.5, g, 1, 9).as_path();
  Mat lattice(2, 1);
  lattice << 0.0, 1.0;
  const AveragedField T = averaged_field(constant_field(Vec::Constant(1, 2.0)), B, lattice);
  CHECK(T.increment(1, 4, 12)(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(averaged_pvar_exponent(0.0, 0.5) == doctest::Approx(2.0));
}

TEST_CASE("two-point inverse moment is finite for a smooth drift") {
  const InverseMomentReport r =
      two_point_inverse_moment(sine_field(1.0), 0.5, TimeGrid(64), Vec::Constant(1, 0.0), Vec::Constant(1, 0.1), 50, 3);
  CHECK(std::isfinite(r.mean));
  CHECK(r.mean >= 1.0 - 1e-12);
}
