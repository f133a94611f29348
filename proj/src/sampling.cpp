// SPDX-License-Identifier: MIT
#include "vispinn/sampling.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include "vispinn/csv.hpp"
#include "vispinn/error.hpp"
#include "vispinn/stats.hpp"

namespace vispinn {

Domain Domain::hypercube(int d) {
  require(d >= 1, ErrorKind::invalid_argument, "domain dimension must be >= 1");
  return {DomainKind::hypercube, d};
}

Domain Domain::ball(int d) {
  require(d >= 1, ErrorKind::invalid_argument, "domain dimension must be >= 1");
  return {DomainKind::ball, d};
}

std::string Domain::name() const {
  return (kind == DomainKind::hypercube ? "hypercube" : "ball") + std::to_string(dim);
}

bool Domain::contains(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim) return false;
  if (kind == DomainKind::hypercube) {
    for (double v : x) {
      if (!(v > 0.0 && v < 1.0)) return false;
    }
    return true;
  }
  double r2 = 0;
  for (double v : x) r2 += v * v;
  return r2 < 1.0;
}

bool Domain::on_boundary(std::span<const double> x, double tol) const {
  if (static_cast<int>(x.size()) != dim) return false;
  if (kind == DomainKind::hypercube) {
    bool touches = false;
    for (double v : x) {
      if (v < -tol || v > 1.0 + tol) return false;
      if (std::abs(v) <= tol || std::abs(v - 1.0) <= tol) touches = true;
    }
    return touches;
  }
  double r2 = 0;
  for (double v : x) r2 += v * v;
  return std::abs(std::sqrt(r2) - 1.0) <= tol;
}

double unit_ball_volume(int k) {
  return std::pow(std::numbers::pi, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

DensityConstants density_constants(const Domain& domain) {
  const int d = domain.dim;
  DensityConstants k;
  if (domain.kind == DomainKind::hypercube) {
    k.c_r = 1.0;
    k.C_r = unit_ball_volume(d);
    k.c_b = 1.0;
    k.C_b = d >= 2 ? unit_ball_volume(d - 1) : 1.0;
    return k;
  }
  if (domain.kind == DomainKind::ball) {
    const double wd = unit_ball_volume(d);
    k.C_r = 1.0;
    k.c_r = 1.0 / (std::pow(2.0, d) * wd);
    if (d >= 2) {
      k.c_b = 1.0 / (std::pow(2.0, d - 1) * d * wd);
      k.C_b = std::pow(0.5 * std::numbers::pi, d - 1) * unit_ball_volume(d - 1) / (d * wd);
    }
    return k;
  }
  fail(ErrorKind::invalid_argument, "density_constants: unsupported domain kind");
}

int boundary_count(int d, int m_r) {
  require(m_r >= 1, ErrorKind::invalid_argument, "m_r must be >= 1");
  if (d == 1) return 2;
  using i128 = __int128;
  auto ipow = [](i128 b, int e) {
    i128 r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
  };
  const i128 target = ipow(m_r, d - 1);
  i128 k = static_cast<i128>(std::ceil(std::pow(static_cast<double>(m_r), static_cast<double>(d - 1) / d)));
  while (k > 1 && ipow(k - 1, d) >= target) --k;
  while (ipow(k, d) < target) ++k;
  return static_cast<int>(k);
}

PointSet sample_interior(const Domain& domain, int n, Rng& rng) {
  const int d = domain.dim;
  PointSet pts(n, d);
  for (int i = 0; i < n; ++i) {
    if (domain.kind == DomainKind::hypercube) {
      for (int k = 0; k < d; ++k) pts(i, k) = rng.uniform();
    } else {
      double r2 = 0;
      for (int k = 0; k < d; ++k) {
        pts(i, k) = rng.normal();
        r2 += pts(i, k) * pts(i, k);
      }
      const double radius = std::pow(rng.uniform(), 1.0 / d);
      pts.row(i) *= radius / std::sqrt(r2);
    }
  }
  return pts;
}

PointSet boundary_endpoints(const Domain& domain) {
  require(domain.dim == 1, ErrorKind::invalid_argument, "boundary_endpoints: 1D only");
  PointSet pts(2, 1);
  if (domain.kind == DomainKind::hypercube) {
    pts << 0.0, 1.0;
  } else {
    pts << -1.0, 1.0;
  }
  return pts;
}

PointSet sample_boundary(const Domain& domain, int n, Rng& rng) {
  const int d = domain.dim;
  if (d == 1) {
    PointSet pts(n, 1);
    const PointSet ends = boundary_endpoints(domain);
    for (int i = 0; i < n; ++i) pts(i, 0) = ends(static_cast<int>(rng.index(2)), 0);
    return pts;
  }
  PointSet pts(n, d);
  for (int i = 0; i < n; ++i) {
    if (domain.kind == DomainKind::hypercube) {
      const auto face = static_cast<int>(rng.index(2 * static_cast<std::uint64_t>(d)));
      for (int k = 0; k < d; ++k) pts(i, k) = rng.uniform();
      pts(i, face / 2) = static_cast<double>(face % 2);
    } else {
      double r2 = 0;
      for (int k = 0; k < d; ++k) {
        pts(i, k) = rng.normal();
        r2 += pts(i, k) * pts(i, k);
      }
      pts.row(i) /= std::sqrt(r2);
    }
  }
  return pts;
}

TrainingSet sample_training_set(const Domain& domain, int m_r, std::uint64_t seed) {
  require(m_r >= 1, ErrorKind::invalid_argument, "sample_training_set: m_r must be >= 1");
  TrainingSet set;
  set.domain = domain;
  set.seed = seed;
  Rng interior_rng(mix_seed(seed, 0));
  set.interior = sample_interior(domain, m_r, interior_rng);
  if (domain.dim == 1) {
    set.boundary = boundary_endpoints(domain);
  } else {
    Rng boundary_rng(mix_seed(seed, 1));
    set.boundary = sample_boundary(domain, boundary_count(domain.dim, m_r), boundary_rng);
  }
  return set;
}

int default_probe_resolution(int d) {
  switch (d) {
    case 1:
      return 256;
    case 2:
      return 128;
    case 3:
      return 32;
    default:
      return 12;
  }
}

PointSet probe_grid(const Domain& domain, int resolution) {
  require(resolution >= 2, ErrorKind::invalid_argument, "probe resolution must be >= 2");
  const int d = domain.dim;
  const double lo = domain.kind == DomainKind::hypercube ? 0.0 : -1.0;
  const double span = domain.kind == DomainKind::hypercube ? 1.0 : 2.0;
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(resolution);

  std::vector<double> buf;
  buf.reserve(total * d);
  std::vector<double> x(d);
  std::size_t kept = 0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double r2 = 0;
    for (int k = 0; k < d; ++k) {
      x[k] = lo + span * static_cast<double>(rem % resolution) / (resolution - 1);
      rem /= resolution;
      r2 += x[k] * x[k];
    }
    if (domain.kind == DomainKind::ball && r2 > 1.0) continue;
    buf.insert(buf.end(), x.begin(), x.end());
    ++kept;
  }
  PointSet pts(static_cast<Eigen::Index>(kept), d);
  for (std::size_t i = 0; i < kept; ++i) {
    for (int k = 0; k < d; ++k) pts(static_cast<Eigen::Index>(i), k) = buf[i * d + k];
  }
  return pts;
}

double fill_distance(const PointSet& points, const Domain& domain, int probe_resolution) {
  if (points.rows() == 0) fail(ErrorKind::invalid_argument, "fill_distance: empty point set");
  require(points.cols() == domain.dim, ErrorKind::dimension_mismatch, "fill_distance: dimension mismatch");
  const PointSet probes = probe_grid(domain, probe_resolution);
  const int d = domain.dim;
  // Column-major copy with one point per column keeps the inner loop contiguous.
  const Eigen::MatrixXd pts = points.transpose();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < probes.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      double s = 0;
      for (int k = 0; k < d; ++k) {
        const double diff = probes(i, k) - pts(k, j);
        s += diff * diff;
      }
      best = std::min(best, s);
    }
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

double fill_bound(int n, int d, int s, double c) {
  require(n >= 1 && c > 0 && s >= 1, ErrorKind::invalid_argument, "fill_bound: bad arguments");
  return std::sqrt(static_cast<double>(d)) * std::pow(c, -1.0 / s) * std::pow(static_cast<double>(n), -1.0 / (2.0 * s));
}

double fill_probability_bound(int n) {
  const double r = std::sqrt(static_cast<double>(n));
  return 1.0 - r * std::pow(1.0 - 1.0 / r, n);
}

double FillLemmaReport::median_fill_distance() const { return median(fill_distances); }

FillLemmaReport verify_fill_lemma(const Domain& domain, int n, int trials, std::uint64_t seed, int probe_resolution) {
  require(n >= 4 && trials >= 1, ErrorKind::invalid_argument, "verify_fill_lemma: need n >= 4 and trials >= 1");
  if (probe_resolution <= 0) probe_resolution = default_probe_resolution(domain.dim);
  FillLemmaReport rep;
  rep.n = n;
  rep.dim = domain.dim;
  rep.trials = trials;
  rep.bound = fill_bound(n, domain.dim, domain.dim, density_constants(domain).c_r);
  rep.theoretical_probability = fill_probability_bound(n);
  const double p = rep.theoretical_probability;
  rep.standard_error = std::sqrt(std::max(p * (1.0 - p), 0.0) / trials);
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    const PointSet pts = sample_interior(domain, n, rng);
    const double fd = fill_distance(pts, domain, probe_resolution);
    rep.fill_distances.push_back(fd);
    if (fd <= rep.bound) ++rep.successes;
  }
  return rep;
}

Projection closest_point_projection(std::span<const double> x, const TrainingSet& set) {
  require(static_cast<int>(x.size()) == set.domain.dim, ErrorKind::dimension_mismatch, "projection: dimension mismatch");
  const bool boundary = set.domain.on_boundary(x) && set.m_b() > 0;
  const PointSet& pts = boundary ? set.boundary : set.interior;
  require(pts.rows() > 0, ErrorKind::invalid_argument, "projection: empty training set");
  Projection best;
  best.boundary = boundary;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    double s = 0;
    for (Eigen::Index k = 0; k < pts.cols(); ++k) {
      const double diff = x[k] - pts(i, k);
      s += diff * diff;
    }
    if (s < best_d2) {
      best_d2 = s;
      best.index = static_cast<int>(i);
    }
  }
  best.point = pts.row(best.index).transpose();
  best.distance = std::sqrt(best_d2);
  return best;
}

void write_training_set_csv(std::ostream& out, const TrainingSet& set) {
  write_csv_metadata(out, "training-set", set.seed);
  out << "kind";
  for (int k = 0; k < set.domain.dim; ++k) out << ",x" << k;
  out << '\n';
  auto rows = [&](const PointSet& pts, char kind) {
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      out << kind;
      for (Eigen::Index k = 0; k < pts.cols(); ++k) out << ',' << format_double(pts(i, k));
      out << '\n';
    }
  };
  rows(set.interior, 'r');
  rows(set.boundary, 'b');
}

TrainingSet read_training_set_csv(std::istream& in, const Domain& domain) {
  TrainingSet set;
  set.domain = domain;
  std::string line;
  bool header = false;
  std::vector<std::vector<double>> r, b;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("seed=");
      if (pos != std::string::npos) set.seed = std::stoull(line.substr(pos + 5));
      continue;
    }
    const auto cols = split_csv_line(line);
    if (!header) {
      if (cols.empty() || cols[0] != "kind" || static_cast<int>(cols.size()) != domain.dim + 1) {
        fail(ErrorKind::io, "training set CSV: bad header");
      }
      header = true;
      continue;
    }
    if (static_cast<int>(cols.size()) != domain.dim + 1) fail(ErrorKind::io, "training set CSV: bad row");
    std::vector<double> x;
    for (std::size_t k = 1; k < cols.size(); ++k) x.push_back(std::stod(cols[k]));
    if (cols[0] == "r") {
      r.push_back(std::move(x));
    } else if (cols[0] == "b") {
      b.push_back(std::move(x));
    } else {
      fail(ErrorKind::io, "training set CSV: unknown kind " + cols[0]);
    }
  }
  auto fill = [&](const std::vector<std::vector<double>>& rows) {
    PointSet pts(static_cast<Eigen::Index>(rows.size()), domain.dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (int k = 0; k < domain.dim; ++k) pts(static_cast<Eigen::Index>(i), k) = rows[i][k];
    }
    return pts;
  };
  set.interior = fill(r);
  set.boundary = fill(b);
  return set;
}

}  // namespace vispinn
