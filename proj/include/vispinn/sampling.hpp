// SPDX-License-Identifier: MIT
/**
 * @file sampling.hpp
 * @brief Domains, iid training sets, density constants, fill distances and
 *        the closest-point projection onto a training set.
 */
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vispinn/rng.hpp"

namespace vispinn {

/// Points are stored one per row.
using PointSet = Eigen::MatrixXd;

enum class DomainKind { hypercube, ball };

/// The unit hypercube [0,1]^d or the unit ball B(0,1) in R^d.
struct Domain {
  DomainKind kind = DomainKind::hypercube;
  int dim = 1;

  static Domain hypercube(int d);
  static Domain ball(int d);

  std::string name() const;
  /// Strictly inside U.
  bool contains(std::span<const double> x) const;
  /// On the boundary within `tol`.
  bool on_boundary(std::span<const double> x, double tol = 1e-12) const;
  bool operator==(const Domain&) const = default;
};

/// Constants of the two-sided density conditions on mu_r and mu_b:
/// c eps^s <= mu(cell) and mu(B_eps(x)) <= C eps^s.
struct DensityConstants {
  double c_r = 1.0, C_r = 1.0, c_b = 1.0, C_b = 1.0;

  double kappa_r() const noexcept { return C_r / c_r; }
  double kappa_b() const noexcept { return C_b / c_b; }
};

/// Volume of the unit ball in R^k (omega_0 = 1).
double unit_ball_volume(int k);

/// Uniform-measure constants for the bundled domains.
///
/// Hypercube: c_r = 1, C_r = omega_d, c_b = 1, C_b = omega_(d-1).
/// Ball: C_r = 1, c_r = 1 / (2^d omega_d), c_b = 1 / (2^(d-1) d omega_d),
/// C_b = (pi/2)^(d-1) omega_(d-1) / (d omega_d). For d = 1 the boundary
/// constants are 1 (the boundary is not sampled).
DensityConstants density_constants(const Domain& domain);

struct TrainingSet {
  Domain domain;
  PointSet interior;  // m_r x d
  PointSet boundary;  // m_b x d
  std::uint64_t seed = 0;

  int m_r() const noexcept { return static_cast<int>(interior.rows()); }
  int m_b() const noexcept { return static_cast<int>(boundary.rows()); }
};

/// m_b = ceil(m_r^((d-1)/d)) for d >= 2 and 2 for d = 1.
int boundary_count(int d, int m_r);

PointSet sample_interior(const Domain& domain, int n, Rng& rng);
PointSet sample_boundary(const Domain& domain, int n, Rng& rng);
/// The two boundary points of a 1D domain.
PointSet boundary_endpoints(const Domain& domain);

/// iid uniform interior points and coupled iid uniform boundary points; for
/// d = 1 the boundary set is both endpoints. Deterministic in `seed`.
TrainingSet sample_training_set(const Domain& domain, int m_r, std::uint64_t seed);

int default_probe_resolution(int d);

/// Uniform probe grid over the closure of the domain.
PointSet probe_grid(const Domain& domain, int resolution);

/// Max over the probe grid of the distance to the nearest point in `points`.
/// A lower bound on the true fill distance.
double fill_distance(const PointSet& points, const Domain& domain, int probe_resolution);

/// sqrt(d) c^(-1/s) n^(-1/(2s)).
double fill_bound(int n, int d, int s, double c);

/// 1 - sqrt(n) (1 - 1/sqrt(n))^n.
double fill_probability_bound(int n);

struct FillLemmaReport {
  int n = 0;
  int dim = 0;
  int trials = 0;
  int successes = 0;
  double bound = 0.0;                    // fill_bound(n, d, d, c_r)
  double theoretical_probability = 0.0;  // fill_probability_bound(n)
  double standard_error = 0.0;           // binomial, at the theoretical probability
  std::vector<double> fill_distances;

  double success_fraction() const noexcept { return trials ? static_cast<double>(successes) / trials : 0.0; }
  double median_fill_distance() const;
  /// success fraction >= theoretical probability - 2 standard errors.
  bool passes() const noexcept { return success_fraction() >= theoretical_probability - 2.0 * standard_error; }
};

FillLemmaReport verify_fill_lemma(const Domain& domain, int n, int trials, std::uint64_t seed,
                                  int probe_resolution = 0);

struct Projection {
  int index = -1;
  bool boundary = false;
  Eigen::VectorXd point;
  double distance = 0.0;
};

/// Nearest training point: boundary x projects onto T_b, other x onto T_r.
/// Ties go to the lowest index.
Projection closest_point_projection(std::span<const double> x, const TrainingSet& set);

/// CSV with a metadata line, header `kind,x0,...,x{d-1}` and 17 significant digits.
void write_training_set_csv(std::ostream& out, const TrainingSet& set);
TrainingSet read_training_set_csv(std::istream& in, const Domain& domain);

}  // namespace vispinn
