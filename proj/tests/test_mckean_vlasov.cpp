#include "fbmlab/mckean_vlasov.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace fbmlab;

namespace {

// int |F_a - F_b| over the merged support.
double cdf_w1(std::vector<double> a, std::vector<double> b) {
  std::vector<double> pts(a);
  pts.insert(pts.end(), b.begin(), b.end());
  std::sort(pts.begin(), pts.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  auto cdf = [](const std::vector<double>& v, double x) {
    return static_cast<double>(std::upper_bound(v.begin(), v.end(), x) - v.begin()) / v.size();
  };
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) s += std::abs(cdf(a, pts[i]) - cdf(b, pts[i])) * (pts[i + 1] - pts[i]);
  return s;
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

}  // namespace

TEST_CASE("one-dimensional W1 agrees with the CDF integral") {
  Rng rng(3);
  for (auto [na, nb] : {std::pair{20, 20}, std::pair{13, 29}, std::pair{1, 7}}) {
    std::vector<double> a(na), b(nb);
    for (double& x : a) x = rng.gaussian();
    for (double& x : b) x = 0.5 + 2.0 * rng.gaussian();
    CHECK(wasserstein1_1d(to_vec(a), to_vec(b)) == doctest::Approx(cdf_w1(a, b)).epsilon(1e-12));
  }
  CHECK(wasserstein1_1d((Vec(1) << 0.0).finished(), (Vec(2) << 0.0, 1.0).finished()) == doctest::Approx(0.5));
}

TEST_CASE("W1 of a translate is the shift") {
  Rng rng(4);
  const Mat a = rng.gaussian_matrix(100, 1);
  CHECK(empirical_w1(a, a.array() + 0.7) == doctest::Approx(0.7).epsilon(1e-12));
  const Mat p = rng.gaussian_matrix(50, 3);
  CHECK(sliced_wasserstein1(p, p, 16, 1) == 0.0);
  CHECK(sliced_wasserstein1(p, p.array() + 1.0, 16, 1) > 0.0);
}

TEST_CASE("without interaction Picard stops after one iteration") {
  MkvProblem prob;
  prob.f = sine_field(0.5);
  prob.g = zero_field(1);
  prob.grid = TimeGrid(32);
  prob.x0_sampler = gaussian_start(Vec::Zero(1), 1.0);
  const PicardResult r = solve_mkv_picard(prob, 5, 64, 2);
  CHECK(r.diagnostics.iterations == 1);
  CHECK(r.diagnostics.converged);
  REQUIRE_FALSE(r.diagnostics.distances.empty());
  CHECK(r.diagnostics.distances.front() == 0.0);
}

TEST_CASE("lipschitz interaction contracts") {
  MkvProblem prob;
  prob.f = sine_field(0.5);
  prob.g = tanh_field(-1.0);
  prob.grid = TimeGrid(32);
  prob.x0_sampler = gaussian_start(Vec::Zero(1), 1.0);
  const PicardResult r = solve_mkv_picard(prob, 6, 64, 3);
  CHECK_FALSE(r.diagnostics.diverged);
  CHECK(r.diagnostics.fitted_ratio < 1.0);
  for (std::size_t k = 1; k < r.diagnostics.distances.size(); ++k)
    CHECK(r.diagnostics.distances[k] <= r.diagnostics.distances[k - 1]);
}

TEST_CASE("particle system and deterministic start") {
  MkvProblem prob;
  prob.f = zero_field(1);
  prob.g = zero_field(1);
  prob.grid = TimeGrid(8);
  prob.x0_sampler = deterministic_start(Vec::Constant(1, 2.0));
  const auto path = solve_mkv_particles(prob, 10, 1);
  REQUIRE(path.size() == 9);
  CHECK(path.front().particles.isConstant(2.0));
  CHECK(path.back().total_mass() == 1.0);
}
