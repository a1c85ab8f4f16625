#include "fbmlab/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace fbmlab {
namespace {

constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights on the odd Kronrod nodes (indices 1, 3, 5, 7).
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double kronrod;
  double gauss;
};

Panel gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double k = kKronrodWeights[7] * fc;
  double g = kGaussWeights[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = h * kKronrodNodes[i];
    const double s = f(c - dx) + f(c + dx);
    k += kKronrodWeights[i] * s;
    if (i % 2 == 1) g += kGaussWeights[i / 2] * s;
  }
  return {k * h, g * h};
}

void adapt(const std::function<double(double)>& f, double a, double b, double tol, int depth,
           QuadratureResult& out) {
  const Panel p = gk15(f, a, b);
  out.evaluations += 15;
  const double err = std::abs(p.kronrod - p.gauss);
  if (err <= tol || depth <= 0) {
    out.value += p.kronrod;
    out.error_estimate += err;
    if (depth <= 0 && err > tol) out.converged = false;
    return;
  }
  const double m = 0.5 * (a + b);
  adapt(f, a, m, 0.5 * tol, depth - 1, out);
  adapt(f, m, b, 0.5 * tol, depth - 1, out);
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol, double rel_tol, int max_depth) {
  QuadratureResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  const Panel coarse = gk15(f, a, b);
  const double tol = std::max(abs_tol, rel_tol * std::abs(coarse.kronrod));
  out.converged = true;
  adapt(f, a, b, tol, max_depth, out);
  if (!std::isfinite(out.value)) out.converged = false;
  return out;
}

const GaussHermiteRule& gauss_hermite(int order) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[order];
  if (!slot) {
    if (order < 1) throw DomainError("gauss_hermite: order must be positive");
    // Jacobi matrix of the probabilists' Hermite recurrence: off-diagonal sqrt(k).
    Mat jacobi = Mat::Zero(order, order);
    for (int k = 1; k < order; ++k) {
      jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
      jacobi(k - 1, k) = jacobi(k, k - 1);
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(jacobi);
    auto rule = std::make_unique<GaussHermiteRule>();
    rule->nodes = eig.eigenvalues();
    rule->weights = eig.eigenvectors().row(0).array().square().transpose();
    rule->weights /= rule->weights.sum();
    slot = std::move(rule);
  }
  return *slot;
}

}  // namespace fbmlab
