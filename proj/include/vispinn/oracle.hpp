// SPDX-License-Identifier: MIT
/**
 * @file oracle.hpp
 * @brief Reference solutions: monotone finite-difference solvers, exact
 *        manufactured solutions and a discrete comparison test.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vispinn/operators.hpp"

namespace vispinn {

/// Nodal values on the uniform grid over [0,1]^d (d = 1 or 2) with N cells
/// per axis; node (i, j) is stored at i + (N + 1) j.
struct OracleGrid {
  int dim = 1;
  int N = 0;
  Eigen::VectorXd values;

  double spacing() const noexcept { return 1.0 / N; }
  int nodes_per_axis() const noexcept { return N + 1; }
  double& at(int i, int j = 0) { return values[i + (N + 1) * j]; }
  double at(int i, int j = 0) const { return values[i + (N + 1) * j]; }
  bool is_boundary(int i, int j = 0) const noexcept;
  /// Piecewise-linear (1D) or bilinear (2D) interpolation.
  double interpolate(std::span<const double> x) const;
};

/// Jacobi-form update of the 3-point scheme at one node.
double poisson_update_1d(double left, double right, double f, double h);
/// Jacobi-form update of the 5-point scheme at one node.
double poisson_update_2d(double west, double east, double south, double north, double f, double h);
/// Godunov upwind update for |u'| = 1: min(left, right) + h.
double eikonal_update(double left, double right, double h);

/// -Laplace(u) = f with u = g on the boundary; 3-point (1D) or 5-point (2D)
/// scheme solved directly. Throws `solver_failure` if the relative residual
/// exceeds 1e-10.
OracleGrid solve_poisson_fd(const Domain& domain, const PointFn& f, const PointFn& g, int N);

/// |u'| = 1 on (0,1), u(0) = g0, u(1) = g1 by Godunov fast sweeping.
OracleGrid solve_eikonal_1d(double g0, double g1, int N);
/// Closed form min(g0 + x, g1 + 1 - x) at the nodes.
OracleGrid eikonal_exact_1d(double g0, double g1, int N);
/// max over interior nodes of |(u_i - min(u_{i-1}, u_{i+1})) / h - 1|.
double eikonal_scheme_residual(const OracleGrid& grid);

/// Exact function or oracle grid, evaluable anywhere in the closed domain.
class Reference {
 public:
  static Reference exact(JetFn f);
  static Reference grid(OracleGrid g);

  double operator()(std::span<const double> x) const;
  bool is_exact() const noexcept { return !grid_.has_value(); }
  const OracleGrid* oracle_grid() const noexcept { return grid_ ? &*grid_ : nullptr; }
  PointFn as_function() const;

 private:
  JetFn exact_;
  std::optional<OracleGrid> grid_;
};

/// Exact manufactured solution for poisson2d, poisson1d, monge_ampere2d and
/// pucci1d; the eikonal oracle grid with N cells for eikonal1d.
Reference reference_for(const OperatorSpec& spec, int N);

/// Solves a Dirichlet problem for boundary data g on N cells per axis.
using BoundarySolver = std::function<OracleGrid(const PointFn& g, int N)>;

struct NamedSolver {
  std::string name;
  int dim = 1;
  BoundarySolver solve;
};

/// poisson1d (f of the 1D benchmark), poisson2d (f of the 2D benchmark), eikonal1d.
std::vector<NamedSolver> bundled_solvers();

/// True iff u_low <= u_high + 1e-10 at every node. Throws `invalid_argument`
/// if g_low > g_high at a boundary node.
bool discrete_comparison_test(const BoundarySolver& solver, int dim, const PointFn& g_low, const PointFn& g_high,
                              int N);

/// CSV `x0[,x1],value` with the metadata comment line.
void write_grid_csv(std::ostream& out, const OracleGrid& grid, std::uint64_t seed);

}  // namespace vispinn
