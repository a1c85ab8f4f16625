#pragma once

#include "fbmlab/core.hpp"

#include <functional>

namespace fbmlab {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Adaptive Gauss-Kronrod (7/15) quadrature on [a, b]. Interior nodes only,
/// so integrable endpoint singularities are handled by bisection.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol = 1e-10, double rel_tol = 1e-10,
                                    int max_depth = 60);

/// Gauss-Hermite rule for the standard normal weight: sum w_i f(z_i) ~ E f(Z).
struct GaussHermiteRule {
  Vec nodes;
  Vec weights;
};

/// Golub-Welsch construction; cached per order.
const GaussHermiteRule& gauss_hermite(int order);

}  // namespace fbmlab
