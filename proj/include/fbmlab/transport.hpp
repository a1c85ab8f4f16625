#pragma once

#include "fbmlab/drift.hpp"
#include "fbmlab/sde.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace fbmlab {

using ScalarFn = std::function<double(const Vec&)>;

/// u_t on a fixed lattice at selected grid nodes (rows of `values` follow `indices`).
struct ScalarFieldPath {
  TimeGrid grid;
  std::vector<int> indices;
  Mat lattice;  // one point per row
  Mat values;   // snapshots x lattice points
};

/// Densities on a uniform 1-d lattice; mass by the rectangle rule.
struct DensityPath {
  TimeGrid grid;
  std::vector<int> indices;
  Mat lattice;  // n_points x 1
  double spacing = 0.0;
  Mat values;
  std::vector<double> mass;
};

/// u_t(x) = u0(Psi_{0<-t}(x)) with Psi the reverse-time Euler characteristic.
ScalarFieldPath solve_transport(const ScalarFn& u0, const DriftField& b, const DiscretePath& noise,
                                const Mat& lattice, const std::vector<int>& snapshots);

/// mu_t(x) = mu0(Psi_{0<-t}(x)) exp(-int_0^t div b) along the backward characteristic.
DensityPath solve_continuity(const ScalarFn& mu0, const DriftField& b, const DiscretePath& noise,
                             const Mat& lattice, const std::vector<int>& snapshots);

/// Backward continuity from terminal data: rho_s(y) = rho_T(Phi_{s->T}(y)) exp(int_s^T div b)
/// along forward characteristics. Snapshots are returned in increasing time.
DensityPath solve_backward_continuity(const ScalarFn& rho_T, const DriftField& b, const DiscretePath& noise,
                                      const Mat& lattice, const std::vector<int>& snapshots);

/// |<u_T, rho_T> - <u_0, rho_0>| with T the last snapshot and 0 the first.
/// Throws DomainError on mismatched lattices or snapshot times.
double duality_check(const ScalarFieldPath& u, const DensityPath& rho);

struct MassLedger {
  std::vector<double> times;
  std::vector<double> mass;
  double max_relative_drift = 0.0;  // max |m_t - m_0| / m_0
};

MassLedger mass_ledger(const DensityPath& rho);

/// Uniform lattice on [lo, hi] with `points` nodes, one per row.
Mat uniform_lattice(double lo, double hi, int points);

void write_field_csv(std::ostream& os, const ScalarFieldPath& u);
void write_density_csv(std::ostream& os, const DensityPath& rho);
void write_mass_ledger_json(std::ostream& os, const MassLedger& ledger);

}  // namespace fbmlab
