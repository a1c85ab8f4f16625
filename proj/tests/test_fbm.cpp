#include "fbmlab/fbm.hpp"
#include "fbmlab/stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace fbmlab;

namespace {

// Schur complement of the closed-form covariance: Var(B_t | B_{t_1..t_s}).
double schur_conditional_variance(double h, const TimeGrid& g, int s, int t) {
  Mat past(s, s);
  Vec cross(s);
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) past(i, j) = fbm_covariance(h, g.node(i + 1), g.node(j + 1));
    cross(i) = fbm_covariance(h, g.node(i + 1), g.node(t));
  }
  return fbm_covariance(h, g.node(t), g.node(t)) - cross.dot(past.ldlt().solve(cross));
}

}  // namespace

TEST_CASE("brownian covariance is min(s,t)") {
  CHECK(fbm_covariance(0.5, 0.3, 0.7) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(fbm_covariance(0.5, 0.9, 0.2) == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("hurst validation") {
  CHECK_THROWS_AS(validate_hurst(0.0), DomainError);
  CHECK_THROWS_AS(validate_hurst(1.0), DomainError);
  CHECK_THROWS_AS(validate_hurst(2.0), DomainError);
  CHECK_NOTHROW(validate_hurst(0.3));
  CHECK_NOTHROW(validate_hurst(1.4));
}

TEST_CASE("cholesky factor reproduces the grid covariance") {
  for (double h : {0.2, 0.5, 0.8}) {
    const TimeGrid g(48);
    const auto f = fbm_factor(h, g);
    const Mat cov = fbm_grid_covariance(h, g);
    CHECK((f->lower * f->lower.transpose() - cov).cwiseAbs().maxCoeff() < 1e-12);
    for (int i = 0; i < 48; ++i)
      for (int j = 0; j < 48; ++j)
        CHECK(cov(i, j) == doctest::Approx(fbm_covariance(h, g.node(i + 1), g.node(j + 1))).epsilon(1e-13));
  }
}

TEST_CASE("conditional variance agrees with a Schur complement") {
  const TimeGrid g(40);
  for (double h : {0.3, 0.7}) {
    const auto f = fbm_factor(h, g);
    for (auto [s, t] : {std::pair{5, 6}, std::pair{10, 17}, std::pair{20, 40}})
      CHECK(conditional_variance(*f, s, t) == doctest::Approx(schur_conditional_variance(h, g, s, t)).epsilon(1e-9));
  }
}

TEST_CASE("brownian conditional variance equals the elapsed time") {
  const TimeGrid g(128);
  const auto f = fbm_factor(0.5, g);
  for (int s : {1, 30, 100})
    for (int lag : {1, 7, 20}) CHECK(conditional_variance(*f, s, s + lag) == doctest::Approx(lag * g.dt()).epsilon(1e-12));
}

TEST_CASE("sampling is deterministic in the seed and starts at zero") {
  const TimeGrid g(64);
  const FbmPath a = sample_fbm(0.3, g, 2, 11), b = sample_fbm(0.3, g, 2, 11), c = sample_fbm(0.3, g, 2, 12);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  CHECK(a.values.row(0).norm() == 0.0);
  CHECK((a.values.bottomRows(64) - a.factor->lower * a.driver).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("branches agree with the parent up to the branch time") {
  const TimeGrid g(64);
  const FbmPath p = sample_fbm(0.4, g, 1, 3);
  const auto futures = branch_futures(p, 20, 5, 9);
  REQUIRE(futures.size() == 5);
  for (const auto& f : futures) {
    CHECK((f.values.topRows(21) - p.values.topRows(21)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((f.values.bottomRows(10) - p.values.bottomRows(10)).norm() > 0.0);
  }
}

TEST_CASE("branch futures follow the conditional law") {
  const TimeGrid g(32);
  const FbmPath p = sample_fbm(0.7, g, 1, 5);
  const ConditionalLaw law = conditional_law(p, 10, 20);
  const auto futures = branch_futures(p, 10, 4000, 17);
  Vec x(4000);
  for (int k = 0; k < 4000; ++k) x(k) = futures[k].values(20, 0);
  CHECK(std::abs(x.mean() - law.mean(0)) < 4.0 * std::sqrt(law.variance / 4000.0));
  CHECK(sample_variance(x) == doctest::Approx(law.variance).epsilon(0.08));
}

TEST_CASE("scaling closed form is self-similar") {
  const ScalingMomentReport r = scaling_moment_check(0.3, 0.5, 2000, TimeGrid(64), 4);
  CHECK(r.closed_form_deviation < 1e-12);
  CHECK(r.max_z_score < 5.0);
}

TEST_CASE("integrated paths for H above one") {
  const TimeGrid g(32);
  const FbmPath p = sample_fbm(1.5, g, 1, 8);
  CHECK(p.values.allFinite());
  const Mat cov = fbm_grid_covariance(1.5, g);
  CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  // Smoother than Brownian: increments shrink faster than sqrt(dt).
  CHECK(cov(0, 0) < g.dt());
}
