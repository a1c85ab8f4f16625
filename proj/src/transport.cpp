#include "fbmlab/transport.hpp"

#include <json.hpp>

#include <cmath>
#include <ostream>

namespace fbmlab {

namespace {

void check_snapshots(const std::vector<int>& snapshots, const TimeGrid& grid, const char* where) {
  if (snapshots.empty()) throw DomainError(std::string(where) + ": no snapshots requested");
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    if (snapshots[k] < 0 || snapshots[k] > grid.n_steps)
      throw DomainError(std::string(where) + ": snapshot outside the grid");
    if (k > 0 && snapshots[k] <= snapshots[k - 1])
      throw DomainError(std::string(where) + ": snapshots must increase");
  }
}

double lattice_spacing(const Mat& lattice, const char* where) {
  if (lattice.cols() != 1 || lattice.rows() < 2)
    throw DomainError(std::string(where) + ": needs a 1-d lattice with at least two points");
  const double h = lattice(1, 0) - lattice(0, 0);
  for (Eigen::Index i = 1; i < lattice.rows(); ++i)
    if (std::abs(lattice(i, 0) - lattice(i - 1, 0) - h) > 1e-9 * std::abs(h))
      throw DomainError(std::string(where) + ": lattice must be uniform");
  return h;
}

void guard_density(double v, const char* where) {
  if (!std::isfinite(v) || v < 0.0)
    throw NumericalError(std::string(where) + ": density became negative or non-finite");
}

void fill_mass(DensityPath& rho) {
  rho.mass.clear();
  for (Eigen::Index k = 0; k < rho.values.rows(); ++k) rho.mass.push_back(rho.values.row(k).sum() * rho.spacing);
}

}  // namespace

Mat uniform_lattice(double lo, double hi, int points) {
  if (points < 2 || !(hi > lo)) throw DomainError("uniform_lattice: need hi > lo and >= 2 points");
  Mat m(points, 1);
  for (int i = 0; i < points; ++i) m(i, 0) = lo + (hi - lo) * i / (points - 1);
  return m;
}

ScalarFieldPath solve_transport(const ScalarFn& u0, const DriftField& b, const DiscretePath& noise,
                                const Mat& lattice, const std::vector<int>& snapshots) {
  check_snapshots(snapshots, noise.grid, "solve_transport");
  if (lattice.cols() != b.dim) throw DomainError("solve_transport: lattice dimension differs from drift");
  ScalarFieldPath u;
  u.grid = noise.grid;
  u.indices = snapshots;
  u.lattice = lattice;
  u.values.resize(static_cast<Eigen::Index>(snapshots.size()), lattice.rows());
  for (std::size_t k = 0; k < snapshots.size(); ++k)
    for (Eigen::Index i = 0; i < lattice.rows(); ++i) {
      const Characteristic c = backward_characteristic(b, noise, snapshots[k], lattice.row(i).transpose());
      if (c.diverged) throw DivergenceError("solve_transport: characteristic overflowed");
      u.values(static_cast<Eigen::Index>(k), i) = u0(c.x);
    }
  return u;
}

DensityPath solve_continuity(const ScalarFn& mu0, const DriftField& b, const DiscretePath& noise,
                             const Mat& lattice, const std::vector<int>& snapshots) {
  check_snapshots(snapshots, noise.grid, "solve_continuity");
  DensityPath rho;
  rho.spacing = lattice_spacing(lattice, "solve_continuity");
  if (b.dim != 1) throw DomainError("solve_continuity: one-dimensional drifts only");
  rho.grid = noise.grid;
  rho.indices = snapshots;
  rho.lattice = lattice;
  rho.values.resize(static_cast<Eigen::Index>(snapshots.size()), lattice.rows());
  for (std::size_t k = 0; k < snapshots.size(); ++k)
    for (Eigen::Index i = 0; i < lattice.rows(); ++i) {
      const Characteristic c =
          backward_characteristic(b, noise, snapshots[k], lattice.row(i).transpose(), 0, true);
      if (c.diverged) throw DivergenceError("solve_continuity: characteristic overflowed");
      const double v = mu0(c.x) * std::exp(-c.div_integral);
      guard_density(v, "solve_continuity");
      rho.values(static_cast<Eigen::Index>(k), i) = v;
    }
  fill_mass(rho);
  return rho;
}

DensityPath solve_backward_continuity(const ScalarFn& rho_T, const DriftField& b, const DiscretePath& noise,
                                      const Mat& lattice, const std::vector<int>& snapshots) {
  check_snapshots(snapshots, noise.grid, "solve_backward_continuity");
  DensityPath rho;
  rho.spacing = lattice_spacing(lattice, "solve_backward_continuity");
  if (b.dim != 1) throw DomainError("solve_backward_continuity: one-dimensional drifts only");
  rho.grid = noise.grid;
  rho.indices = snapshots;
  rho.lattice = lattice;
  rho.values.resize(static_cast<Eigen::Index>(snapshots.size()), lattice.rows());
  const int T = noise.grid.n_steps;
  for (std::size_t k = 0; k < snapshots.size(); ++k)
    for (Eigen::Index i = 0; i < lattice.rows(); ++i) {
      const Characteristic c =
          forward_characteristic(b, noise, snapshots[k], lattice.row(i).transpose(), T, true);
      if (c.diverged) throw DivergenceError("solve_backward_continuity: characteristic overflowed");
      const double v = rho_T(c.x) * std::exp(c.div_integral);
      guard_density(v, "solve_backward_continuity");
      rho.values(static_cast<Eigen::Index>(k), i) = v;
    }
  fill_mass(rho);
  return rho;
}

double duality_check(const ScalarFieldPath& u, const DensityPath& rho) {
  if (u.lattice.rows() != rho.lattice.rows() || u.lattice.cols() != rho.lattice.cols() ||
      (u.lattice - rho.lattice).cwiseAbs().maxCoeff() > 1e-12)
    throw DomainError("duality_check: lattices differ");
  if (u.indices.size() < 2 || u.indices.front() != rho.indices.front() || u.indices.back() != rho.indices.back())
    throw DomainError("duality_check: first and last snapshot times must match");
  const Eigen::Index last_u = u.values.rows() - 1, last_r = rho.values.rows() - 1;
  const double end = u.values.row(last_u).dot(rho.values.row(last_r)) * rho.spacing;
  const double start = u.values.row(0).dot(rho.values.row(0)) * rho.spacing;
  return std::abs(end - start);
}

MassLedger mass_ledger(const DensityPath& rho) {
  MassLedger led;
  for (std::size_t k = 0; k < rho.indices.size(); ++k) led.times.push_back(rho.grid.node(rho.indices[k]));
  led.mass = rho.mass;
  if (!led.mass.empty() && led.mass.front() > 0.0)
    for (double m : led.mass)
      led.max_relative_drift = std::max(led.max_relative_drift, std::abs(m - led.mass.front()) / led.mass.front());
  return led;
}

void write_field_csv(std::ostream& os, const ScalarFieldPath& u) {
  os << "t,x_index,value\n";
  os.precision(17);
  for (std::size_t k = 0; k < u.indices.size(); ++k)
    for (Eigen::Index i = 0; i < u.values.cols(); ++i)
      os << u.grid.node(u.indices[k]) << "," << i << "," << u.values(static_cast<Eigen::Index>(k), i) << "\n";
}

void write_density_csv(std::ostream& os, const DensityPath& rho) {
  os << "t,x_index,value\n";
  os.precision(17);
  for (std::size_t k = 0; k < rho.indices.size(); ++k)
    for (Eigen::Index i = 0; i < rho.values.cols(); ++i)
      os << rho.grid.node(rho.indices[k]) << "," << i << "," << rho.values(static_cast<Eigen::Index>(k), i)
         << "\n";
}

void write_mass_ledger_json(std::ostream& os, const MassLedger& ledger) {
  nlohmann::json j;
  j["times"] = ledger.times;
  j["mass"] = ledger.mass;
  j["max_relative_drift"] = ledger.max_relative_drift;
  os << j.dump(2) << "\n";
}

}  // namespace fbmlab
