// SPDX-License-Identifier: MIT
#include "vispinn/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "vispinn/csv.hpp"

namespace vispinn {

bool OracleGrid::is_boundary(int i, int j) const noexcept {
  if (i == 0 || i == N) return true;
  return dim == 2 && (j == 0 || j == N);
}

double OracleGrid::interpolate(std::span<const double> x) const {
  auto locate = [&](double t, int& i, double& w) {
    const double s = std::clamp(t, 0.0, 1.0) * N;
    i = std::min(static_cast<int>(s), N - 1);
    w = s - i;
  };
  int i = 0, j = 0;
  double wx = 0, wy = 0;
  locate(x[0], i, wx);
  if (dim == 1) return (1.0 - wx) * at(i) + wx * at(i + 1);
  locate(x[1], j, wy);
  return (1.0 - wx) * (1.0 - wy) * at(i, j) + wx * (1.0 - wy) * at(i + 1, j) + (1.0 - wx) * wy * at(i, j + 1) +
         wx * wy * at(i + 1, j + 1);
}

double poisson_update_1d(double left, double right, double f, double h) { return 0.5 * (left + right + h * h * f); }

double poisson_update_2d(double west, double east, double south, double north, double f, double h) {
  return 0.25 * (west + east + south + north + h * h * f);
}

double eikonal_update(double left, double right, double h) { return std::min(left, right) + h; }

namespace {

OracleGrid make_grid(int dim, int N) {
  OracleGrid g;
  g.dim = dim;
  g.N = N;
  const int n = dim == 1 ? N + 1 : (N + 1) * (N + 1);
  g.values = Eigen::VectorXd::Zero(n);
  return g;
}

OracleGrid solve_poisson_1d(const PointFn& f, const PointFn& g, int N) {
  OracleGrid u = make_grid(1, N);
  const double h = u.spacing();
  u.at(0) = g(std::vector<double>{0.0});
  u.at(N) = g(std::vector<double>{1.0});
  // Thomas algorithm on the tridiagonal system (-1, 2, -1) u = h^2 f.
  const int n = N - 1;
  std::vector<double> c(n), d(n);
  for (int k = 0; k < n; ++k) {
    const double x = (k + 1) * h;
    d[k] = h * h * f(std::vector<double>{x});
  }
  d[0] += u.at(0);
  d[n - 1] += u.at(N);
  double beta = 2.0;
  c[0] = -1.0 / beta;
  d[0] /= beta;
  for (int k = 1; k < n; ++k) {
    beta = 2.0 + c[k - 1];
    c[k] = -1.0 / beta;
    d[k] = (d[k] + d[k - 1]) / beta;
  }
  for (int k = n - 2; k >= 0; --k) d[k] -= c[k] * d[k + 1];
  for (int k = 0; k < n; ++k) u.at(k + 1) = d[k];

  double res = 0.0, scale = 1.0;
  for (int i = 1; i < N; ++i) {
    const double rhs = h * h * f(std::vector<double>{i * h});
    res = std::max(res, std::abs(2.0 * u.at(i) - u.at(i - 1) - u.at(i + 1) - rhs));
    scale = std::max(scale, std::abs(rhs));
  }
  if (!(res <= 1e-10 * scale)) fail(ErrorKind::solver_failure, "poisson 1D: residual above tolerance");
  return u;
}

OracleGrid solve_poisson_2d(const PointFn& f, const PointFn& g, int N) {
  OracleGrid u = make_grid(2, N);
  const double h = u.spacing();
  for (int j = 0; j <= N; ++j) {
    for (int i = 0; i <= N; ++i) {
      if (u.is_boundary(i, j)) u.at(i, j) = g(std::vector<double>{i * h, j * h});
    }
  }
  const int n = N - 1;
  auto idx = [n](int i, int j) { return (i - 1) + n * (j - 1); };
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * static_cast<std::size_t>(n) * n);
  Eigen::VectorXd rhs(n * n);
  for (int j = 1; j < N; ++j) {
    for (int i = 1; i < N; ++i) {
      const int r = idx(i, j);
      trip.emplace_back(r, r, 4.0);
      double b = h * h * f(std::vector<double>{i * h, j * h});
      const int ni[4] = {i - 1, i + 1, i, i};
      const int nj[4] = {j, j, j - 1, j + 1};
      for (int k = 0; k < 4; ++k) {
        if (u.is_boundary(ni[k], nj[k])) {
          b += u.at(ni[k], nj[k]);
        } else {
          trip.emplace_back(r, idx(ni[k], nj[k]), -1.0);
        }
      }
      rhs[r] = b;
    }
  }
  Eigen::SparseMatrix<double> A(n * n, n * n);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
  if (solver.info() != Eigen::Success) fail(ErrorKind::solver_failure, "poisson 2D: factorization failed");
  const Eigen::VectorXd sol = solver.solve(rhs);
  const double res = (A * sol - rhs).lpNorm<Eigen::Infinity>();
  if (!(res <= 1e-10 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>()))) {
    fail(ErrorKind::solver_failure, "poisson 2D: residual above tolerance");
  }
  for (int j = 1; j < N; ++j) {
    for (int i = 1; i < N; ++i) u.at(i, j) = sol[idx(i, j)];
  }
  return u;
}

}  // namespace

OracleGrid solve_poisson_fd(const Domain& domain, const PointFn& f, const PointFn& g, int N) {
  require(N >= 4, ErrorKind::invalid_argument, "solve_poisson_fd: N must be >= 4");
  require(domain.kind == DomainKind::hypercube && (domain.dim == 1 || domain.dim == 2), ErrorKind::invalid_argument,
          "solve_poisson_fd: only [0,1] and [0,1]^2 are supported");
  return domain.dim == 1 ? solve_poisson_1d(f, g, N) : solve_poisson_2d(f, g, N);
}

OracleGrid solve_eikonal_1d(double g0, double g1, int N) {
  require(N >= 4, ErrorKind::invalid_argument, "solve_eikonal_1d: N must be >= 4");
  OracleGrid u = make_grid(1, N);
  const double h = u.spacing();
  for (int i = 1; i < N; ++i) u.at(i) = std::numeric_limits<double>::infinity();
  u.at(0) = g0;
  u.at(N) = g1;
  // Alternating sweeps converge in two passes for 1D; a few extra are cheap.
  for (int sweep = 0; sweep < 2 * N + 4; ++sweep) {
    double change = 0.0;
    for (int i = 1; i < N; ++i) {
      const double v = std::min(u.at(i), eikonal_update(u.at(i - 1), u.at(i + 1), h));
      change = std::max(change, std::isfinite(u.at(i)) ? std::abs(v - u.at(i)) : 1.0);
      u.at(i) = v;
    }
    for (int i = N - 1; i >= 1; --i) {
      const double v = std::min(u.at(i), eikonal_update(u.at(i - 1), u.at(i + 1), h));
      change = std::max(change, std::abs(v - u.at(i)));
      u.at(i) = v;
    }
    if (change == 0.0) return u;
  }
  fail(ErrorKind::solver_failure, "eikonal sweeping did not converge");
}

OracleGrid eikonal_exact_1d(double g0, double g1, int N) {
  OracleGrid u = make_grid(1, N);
  const double h = u.spacing();
  for (int i = 0; i <= N; ++i) u.at(i) = std::min(g0 + i * h, g1 + (N - i) * h);
  return u;
}

double eikonal_scheme_residual(const OracleGrid& grid) {
  const double h = grid.spacing();
  double worst = 0.0;
  for (int i = 1; i < grid.N; ++i) {
    worst = std::max(worst, std::abs((grid.at(i) - std::min(grid.at(i - 1), grid.at(i + 1))) / h - 1.0));
  }
  return worst;
}

Reference Reference::exact(JetFn f) {
  Reference r;
  r.exact_ = std::move(f);
  return r;
}

Reference Reference::grid(OracleGrid g) {
  Reference r;
  r.grid_ = std::move(g);
  return r;
}

double Reference::operator()(std::span<const double> x) const {
  if (grid_) return grid_->interpolate(x);
  return exact_(x).value;
}

PointFn Reference::as_function() const {
  return [self = *this](std::span<const double> x) { return self(x); };
}

Reference reference_for(const OperatorSpec& spec, int N) {
  if (spec.name == "eikonal1d") return Reference::grid(solve_eikonal_1d(0.0, 0.0, N));
  if ((spec.name == "poisson2d" || spec.name == "poisson1d" || spec.name == "monge_ampere2d" ||
       spec.name == "pucci1d") &&
      spec.exact) {
    return Reference::exact(*spec.exact);
  }
  fail(ErrorKind::invalid_argument, "no reference solution for operator '" + spec.name + "'");
}

std::vector<NamedSolver> bundled_solvers() {
  constexpr double pi = std::numbers::pi;
  std::vector<NamedSolver> out;
  out.push_back({"poisson1d", 1, [](const PointFn& g, int N) {
                   PointFn f = [](std::span<const double> x) { return pi * pi * std::sin(pi * x[0]); };
                   return solve_poisson_fd(Domain::hypercube(1), f, g, N);
                 }});
  out.push_back({"poisson2d", 2, [](const PointFn& g, int N) {
                   PointFn f = [](std::span<const double> x) {
                     return 2.0 * pi * pi * std::sin(pi * x[0]) * std::sin(pi * x[1]);
                   };
                   return solve_poisson_fd(Domain::hypercube(2), f, g, N);
                 }});
  out.push_back({"eikonal1d", 1, [](const PointFn& g, int N) {
                   return solve_eikonal_1d(g(std::vector<double>{0.0}), g(std::vector<double>{1.0}), N);
                 }});
  return out;
}

bool discrete_comparison_test(const BoundarySolver& solver, int dim, const PointFn& g_low, const PointFn& g_high,
                              int N) {
  const double h = 1.0 / N;
  const int nj = dim == 1 ? 1 : N + 1;
  for (int j = 0; j < nj; ++j) {
    for (int i = 0; i <= N; ++i) {
      const bool bnd = i == 0 || i == N || (dim == 2 && (j == 0 || j == N));
      if (!bnd) continue;
      std::vector<double> x{i * h};
      if (dim == 2) x.push_back(j * h);
      if (g_low(x) > g_high(x)) fail(ErrorKind::invalid_argument, "comparison test: boundary data not ordered");
    }
  }
  const OracleGrid lo = solver(g_low, N);
  const OracleGrid hi = solver(g_high, N);
  for (Eigen::Index k = 0; k < lo.values.size(); ++k) {
    if (lo.values[k] > hi.values[k] + 1e-10) return false;
  }
  return true;
}

void write_grid_csv(std::ostream& out, const OracleGrid& grid, std::uint64_t seed) {
  write_csv_metadata(out, "oracle-grid", seed);
  out << (grid.dim == 1 ? "x0,value\n" : "x0,x1,value\n");
  const double h = grid.spacing();
  const int nj = grid.dim == 1 ? 1 : grid.N + 1;
  for (int j = 0; j < nj; ++j) {
    for (int i = 0; i <= grid.N; ++i) {
      out << format_double(i * h);
      if (grid.dim == 2) out << ',' << format_double(j * h);
      out << ',' << format_double(grid.at(i, j)) << '\n';
    }
  }
}

}  // namespace vispinn
