#include "fbmlab/drift.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace fbmlab;

namespace {

// Trapezoid convolution with the N(0, tau) density on a wide uniform grid.
double brute_heat(const std::function<double(double)>& f, double x, double tau) {
  const int n = 20000;
  const double half = 12.0 * std::sqrt(tau), h = 2.0 * half / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double y = -half + i * h;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    s += w * f(x - y) * std::exp(-y * y / (2.0 * tau));
  }
  return s * h / std::sqrt(2.0 * std::numbers::pi * tau);
}

double midpoint(const std::function<double(double)>& f, double a, double b, int n = 200000) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += f(a + (i + 0.5) * (b - a) / n);
  return s * (b - a) / n;
}

}  // namespace

TEST_CASE("regime classification") {
  SUBCASE("distributional drift under rough noise satisfies condition A") {
    const RegimeReport r = classify_regime(0.3, 2.0, -0.1);
    CHECK(r.threshold == doctest::Approx(1.0 - 1.0 / 0.6));
    CHECK(r.classification == Regime::subcritical);
    CHECK(r.condition_a);
  }
  SUBCASE("counterexample parameters are supercritical") {
    const RegimeReport r = classify_regime(0.8, 4.0, 0.05);
    CHECK(r.threshold == doctest::Approx(0.0625));
    CHECK(r.classification == Regime::supercritical);
    CHECK_FALSE(r.condition_a);
    REQUIRE_FALSE(r.violations_a.empty());
    CHECK(std::any_of(r.violations_a.begin(), r.violations_a.end(),
                      [](const std::string& v) { return v.find("alpha") != std::string::npos; }));
  }
  SUBCASE("critical line") {
    CHECK(classify_regime(0.5, 2.0, 0.0).classification == Regime::critical);
  }
  SUBCASE("q above two breaks condition A but not B") {
    const RegimeReport r = classify_regime(0.5, 4.0, 0.5);
    CHECK_FALSE(r.condition_a);
    CHECK(r.condition_b);
  }
  CHECK_THROWS_AS(classify_regime(1.0, 2.0, 0.0), DomainError);
  CHECK_THROWS_AS(classify_regime(0.5, 1.0, 0.0), DomainError);
}

TEST_CASE("power singularity integral and moment") {
  const TimeProfile p = TimeProfile::power_singularity(0.3, 0.2);
  auto g = [](double t) { return std::pow(std::abs(t - 0.2), -0.3); };
  CHECK(p.integral(0.5, 0.9) == doctest::Approx(midpoint(g, 0.5, 0.9)).epsilon(1e-8));
  CHECK(p.moment(2.0, 0.5, 0.9) ==
        doctest::Approx(midpoint([&](double t) { return g(t) * g(t); }, 0.5, 0.9)).epsilon(1e-8));
  // Across the singularity: closed form of int |t - o|^{-e} = 2 * 0.1^{0.7} / 0.7 on [0.1, 0.3].
  CHECK(p.integral(0.1, 0.3) == doctest::Approx(2.0 * std::pow(0.1, 0.7) / 0.7).epsilon(1e-12));
  CHECK(std::isinf(p.moment(4.0, 0.1, 0.3)));
  CHECK(TimeProfile::power_singularity(0.0, 0.5).value(0.5) == 1.0);
}

TEST_CASE("control of a separable drift") {
  const DriftField b = weierstrass_field(0.5, 6, 1, TimeProfile::power_singularity(0.25, 0.0));
  DriftField bq = b;
  bq.q = 2.0;
  const ControlFn w = drift_control(bq, true);
  const double expected = b.spatial_sup_norm * b.spatial_sup_norm * 2.0 * (std::sqrt(0.8) - std::sqrt(0.2));
  CHECK(w(0.2, 0.8) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(w(0.3, 0.3) == 0.0);
  CHECK(w(0.1, 0.5) + w(0.5, 0.9) == doctest::Approx(w(0.1, 0.9)).epsilon(1e-12));
}

TEST_CASE("control from a profile via quadrature") {
  const ControlFn w = control_from_profile([](double t) { return 1.0 + t; }, 2.0);
  CHECK(w(0.0, 1.0) == doctest::Approx(7.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("heat smoothing of a sine matches brute-force convolution") {
  const DriftField b = sine_field(1.0, 2.0);
  const DriftField s = heat_smooth(b, 0.1);
  for (double x : {-1.0, 0.3, 2.0})
    CHECK(s.value(0.0, Vec::Constant(1, x))(0) ==
          doctest::Approx(brute_heat([](double y) { return std::sin(2.0 * y); }, x, 0.1)).epsilon(1e-9));
}

TEST_CASE("quadrature smoothing of a kink matches brute-force convolution") {
  const DriftField b = sign_power_field(0.5);
  const DriftField s = heat_smooth(b, 0.05);
  auto f = [](double y) { return (y > 0 ? 1.0 : (y < 0 ? -1.0 : 0.0)) * std::sqrt(std::abs(y)); };
  for (double x : {-0.4, 0.1, 0.7}) CHECK(s.value(0.0, Vec::Constant(1, x))(0) == doctest::Approx(brute_heat(f, x, 0.05)).epsilon(1e-3));
}

TEST_CASE("weierstrass smoothing is exact and composes") {
  const DriftField b = weierstrass_field(0.4, 8);
  auto raw = [](double y) {
    double s = 0.0;
    for (int k = 0; k < 8; ++k) s += std::pow(2.0, -0.4 * k) * std::cos(std::ldexp(1.0, k) * y + k);
    return s;
  };
  const DriftField s = heat_smooth(b, 0.01);
  CHECK(s.value(0.0, Vec::Constant(1, 0.4))(0) == doctest::Approx(brute_heat(raw, 0.4, 0.01)).epsilon(1e-8));
  const DriftField twice = heat_smooth(heat_smooth(b, 0.004), 0.006);
  CHECK(twice.value(0.0, Vec::Constant(1, 1.1))(0) == doctest::Approx(s.value(0.0, Vec::Constant(1, 1.1))(0)).epsilon(1e-12));
}

TEST_CASE("distributional fields need smoothing") {
  const DriftField b = weierstrass_field(-0.2, 10);
  CHECK_FALSE(b.pointwise());
  CHECK(heat_smooth(b, 1e-3).pointwise());
}

TEST_CASE("weierstrass base level and amplitude") {
  const DriftField b = weierstrass_field(0.5, 3, 1, TimeProfile::constant(), -2, 0.1);
  double expected = 0.0;
  for (int k = -2; k < 1; ++k) expected += 0.1 * std::pow(2.0, -0.5 * k) * std::cos(std::ldexp(1.0, k) * 0.7 + k);
  CHECK(b.value(0.0, Vec::Constant(1, 0.7))(0) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("negative holder distance shrinks with the perturbation") {
  const DriftField b = weierstrass_field(-0.1, 12);
  const DriftField c1 = heat_smooth(b, 1e-2), c2 = heat_smooth(b, 1e-3), c3 = heat_smooth(b, 1e-4);
  Mat lattice(33, 1);
  for (int i = 0; i < 33; ++i) lattice(i, 0) = -3.0 + 6.0 * i / 32;
  const double d12 = negative_holder_distance(c1, c2, -0.5, lattice);
  const double d23 = negative_holder_distance(c2, c3, -0.5, lattice);
  CHECK(d12 > 0.0);
  CHECK(d23 < d12);
}

TEST_CASE("cell increment integrates the time weight exactly") {
  const DriftField b = sine_field(2.0, 1.0);
  Vec out(1);
  b.cell_increment(0.1, 0.3, Vec::Constant(1, 0.5), out);
  CHECK(out(0) == doctest::Approx(0.2 * 2.0 * std::sin(0.5)).epsilon(1e-14));
  const DriftField c = counterexample_field(0.5, 4.0);
  c.cell_increment(0.0, 0.01, Vec::Constant(1, 0.25), out);
  CHECK(out(0) == doctest::Approx(std::pow(0.01, 0.75) / 0.75 * 0.5).epsilon(1e-12));
}

TEST_CASE("gradients agree with finite differences") {
  for (const DriftField& b : {sine_field(1.5, 2.0, 2), tanh_field(-1.0, 2), cross_sine_field(0.7)}) {
    const Vec x = (Vec(2) << 0.3, -0.8).finished();
    const Mat g = b.gradient(0.0, x);
    for (int j = 0; j < 2; ++j) {
      Vec xp = x, xm = x;
      xp(j) += 1e-6;
      xm(j) -= 1e-6;
      const Vec fd = (b.value(0.0, xp) - b.value(0.0, xm)) / 2e-6;
      CHECK((fd - g.col(j)).norm() < 1e-8);
    }
  }
}

TEST_CASE("every registered field builds from its declared parameters") {
  for (const auto& name : field_names()) {
    FieldParams p;
    for (const auto& k : field_parameters(name)) p[k] = 1.0;
    if (p.count("alpha")) p["alpha"] = 0.5;
    if (p.count("levels")) p["levels"] = 4;
    if (p.count("base_level")) p["base_level"] = 0;
    if (p.count("time_exponent")) p["time_exponent"] = 0.0;
    if (p.count("q_tilde")) p["q_tilde"] = 4.0;
    if (p.count("dim")) p["dim"] = 2;
    CHECK_NOTHROW(make_field(name, p));
  }
  CHECK_THROWS_AS(make_field("nope", {}), DomainError);
}

TEST_CASE("holder seminorm estimate on a lattice") {
  Vec x(101), f(101);
  for (int i = 0; i <= 100; ++i) {
    x(i) = -1.0 + 0.02 * i;
    f(i) = std::sqrt(std::abs(x(i)));
  }
  const double est = holder_seminorm_estimate(x, f, 0.5);
  CHECK(est <= 1.0 + 1e-12);
  CHECK(est > 0.99);
}

TEST_CASE("sum of fields") {
  const DriftField s = sum_field(sine_field(1.0), constant_field(Vec::Constant(1, 0.5)));
  CHECK(s.value(0.2, Vec::Constant(1, 1.0))(0) == doctest::Approx(std::sin(1.0) + 0.5));
}
