// SPDX-License-Identifier: MIT
#include "vispinn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "vispinn/rng.hpp"
#include "vispinn/stats.hpp"

namespace vispinn {

RegSchedule lambda_hat(const LossWeights& w, int m_r, int m_b, int d, double alpha, const DensityConstants& k,
                       double kappa) {
  require(m_r >= 1 && m_b >= 1, ErrorKind::invalid_argument, "lambda_hat: sample counts must be >= 1");
  require(alpha > 0.0 && alpha <= 1.0, ErrorKind::invalid_argument, "lambda_hat: alpha must be in (0, 1]");
  require(kappa >= 1.0, ErrorKind::invalid_argument, "lambda_hat: kappa must be >= 1");
  RegSchedule s;
  s.alpha = alpha;
  s.kappa = kappa;
  const double mr = m_r;
  const double mb = m_b;
  if (d == 1) {
    s.C_m = 3.0 * k.kappa_r() * std::sqrt(mr);
    s.hat_r = w.r * std::pow(k.c_r, -2.0 * alpha) / k.kappa_r() * std::pow(mr, -alpha - 0.5);
    s.hat_b = 0.0;
    return s;
  }
  const double sd = std::sqrt(static_cast<double>(d));
  s.C_m = 3.0 * std::max(k.kappa_r() * std::pow(sd, d) * std::sqrt(mr), k.kappa_b() * std::pow(sd, d - 1) * std::sqrt(mb));
  s.hat_r = 3.0 * w.r * std::pow(sd, 2.0 * alpha) * std::pow(k.c_r, -2.0 * alpha / d) / s.C_m * std::pow(mr, -alpha / d);
  s.hat_b = 3.0 * w.b * std::pow(sd, 2.0 * alpha) * std::pow(k.c_b, -2.0 * alpha / (d - 1)) / s.C_m *
            std::pow(mb, -alpha / (d - 1));
  return s;
}

RegSchedule no_regularization(double alpha) {
  RegSchedule s;
  s.alpha = alpha;
  return s;
}

// ---------------------------------------------------------------------------
// Pair sets and seminorms

PairSet build_pair_set(const PointSet& points, double alpha, std::size_t budget, std::uint64_t seed) {
  require(alpha > 0.0 && alpha <= 1.0, ErrorKind::invalid_argument, "Hoelder exponent must be in (0, 1]");
  const int n = static_cast<int>(points.rows());
  require(n >= 2, ErrorKind::invalid_argument, "Hoelder estimate needs at least two points");
  auto dist = [&](int i, int j) { return (points.row(i) - points.row(j)).norm(); };

  std::vector<std::pair<int, int>> candidates;
  const std::size_t all = static_cast<std::size_t>(n) * (n - 1) / 2;
  if (budget == 0 || all <= budget) {
    candidates.reserve(all);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) candidates.emplace_back(i, j);
    }
  } else {
    Rng rng(seed);
    candidates.reserve(budget + 2 * static_cast<std::size_t>(n));
    while (candidates.size() < budget) {
      const int i = static_cast<int>(rng.index(n));
      const int j = static_cast<int>(rng.index(n));
      if (i != j) candidates.emplace_back(std::min(i, j), std::max(i, j));
    }
    // Difference quotients peak at small separations, so keep each point's
    // two nearest neighbours.
    for (int i = 0; i < n; ++i) {
      int best[2] = {-1, -1};
      double bd[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double dij = dist(i, j);
        if (dij < 1e-14) continue;
        if (dij < bd[0]) {
          bd[1] = bd[0];
          best[1] = best[0];
          bd[0] = dij;
          best[0] = j;
        } else if (dij < bd[1]) {
          bd[1] = dij;
          best[1] = j;
        }
      }
      for (int b : best) {
        if (b >= 0) candidates.emplace_back(std::min(i, b), std::max(i, b));
      }
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  }

  PairSet ps;
  ps.pairs.reserve(candidates.size());
  ps.denom.reserve(candidates.size());
  for (auto [i, j] : candidates) {
    const double dij = dist(i, j);
    if (dij < 1e-14) continue;
    ps.pairs.emplace_back(i, j);
    ps.denom.push_back(std::pow(dij, 2.0 * alpha));
  }
  if (ps.pairs.empty()) fail(ErrorKind::invalid_argument, "Hoelder estimate: all point pairs coincide");
  return ps;
}

HolderEstimate holder_on_pairs(std::span<const double> values, const PairSet& ps, HolderMode mode, double tau,
                               std::span<double> dvalues, double scale) {
  require(!ps.pairs.empty(), ErrorKind::invalid_argument, "Hoelder estimate: empty pair set");
  const std::size_t np = ps.size();
  HolderEstimate est;
  est.pairs = np;

  double qmax = -1.0;
  std::size_t arg = 0;
  for (std::size_t k = 0; k < np; ++k) {
    const auto [i, j] = ps.pairs[k];
    const double diff = values[i] - values[j];
    const double q = diff * diff / ps.denom[k];
    if (q > qmax) {
      qmax = q;
      arg = k;
    }
  }
  est.arg_i = ps.pairs[arg].first;
  est.arg_j = ps.pairs[arg].second;

  const bool want_grad = !dvalues.empty() && scale != 0.0;
  if (mode == HolderMode::hard) {
    est.value = qmax;
    if (want_grad) {
      const auto [i, j] = ps.pairs[arg];
      const double g = scale * 2.0 * (values[i] - values[j]) / ps.denom[arg];
      dvalues[i] += g;
      dvalues[j] -= g;
    }
    return est;
  }

  require(tau > 0.0, ErrorKind::invalid_argument, "smooth Hoelder estimate needs tau > 0");
  double z = 0.0;
  for (std::size_t k = 0; k < np; ++k) {
    const auto [i, j] = ps.pairs[k];
    const double diff = values[i] - values[j];
    z += std::exp((diff * diff / ps.denom[k] - qmax) / tau);
  }
  est.value = qmax + tau * std::log(z);
  if (want_grad) {
    for (std::size_t k = 0; k < np; ++k) {
      const auto [i, j] = ps.pairs[k];
      const double diff = values[i] - values[j];
      const double weight = std::exp((diff * diff / ps.denom[k] - qmax) / tau) / z;
      if (weight == 0.0) continue;
      const double g = scale * weight * 2.0 * diff / ps.denom[k];
      dvalues[i] += g;
      dvalues[j] -= g;
    }
  }
  return est;
}

HolderEstimate holder_seminorm_sq(std::span<const double> values, const PointSet& points, double alpha,
                                  HolderMode mode, std::size_t pair_budget, std::uint64_t seed, double tau) {
  require(static_cast<Eigen::Index>(values.size()) == points.rows(), ErrorKind::dimension_mismatch,
          "holder_seminorm_sq: values/points size mismatch");
  return holder_on_pairs(values, build_pair_set(points, alpha, pair_budget, seed), mode, tau);
}

// ---------------------------------------------------------------------------
// Trial

Trial Trial::network(MlpParams params) {
  Trial t;
  t.dim_ = params.arch.input_dim();
  t.params_ = std::move(params);
  return t;
}

Trial Trial::field(JetFn f, int dim) {
  Trial t;
  t.dim_ = dim;
  t.field_ = std::move(f);
  return t;
}

JetBatch Trial::jets(const PointSet& points, int order) const {
  require(points.cols() == dim_, ErrorKind::dimension_mismatch, "Trial::jets: point dimension mismatch");
  if (params_) {
    BatchEvaluator ev(params_->arch, order);
    return ev.forward(*params_, points);
  }
  const int n = static_cast<int>(points.rows());
  JetBatch out(dim_, order, n);
  std::vector<double> x(dim_);
  for (int p = 0; p < n; ++p) {
    for (int k = 0; k < dim_; ++k) x[k] = points(p, k);
    out.set_jet(p, field_(x));
  }
  return out;
}

namespace {

std::vector<double> row(const PointSet& pts, int i) {
  std::vector<double> x(pts.cols());
  for (Eigen::Index k = 0; k < pts.cols(); ++k) x[k] = pts(i, k);
  return x;
}

[[noreturn]] void non_finite_at(const OperatorSpec& spec, const std::vector<double>& x) {
  std::string where;
  for (double v : x) where += (where.empty() ? "" : ", ") + fmt::format("{:.6g}", v);
  fail(ErrorKind::degenerate_evaluation, "non-finite residual of " + spec.name + " at (" + where + ")");
}

std::vector<double> residuals(const OperatorSpec& spec, const PointSet& pts, const JetBatch& jets) {
  std::vector<double> r(pts.rows());
  for (int p = 0; p < static_cast<int>(pts.rows()); ++p) {
    const auto x = row(pts, p);
    const double v = spec.residual(x, jets.jet(p));
    if (!std::isfinite(v)) non_finite_at(spec, x);
    r[p] = v;
  }
  return r;
}

std::vector<double> boundary_values(const OperatorSpec& spec, const PointSet& pts) {
  std::vector<double> g(pts.rows());
  for (int p = 0; p < static_cast<int>(pts.rows()); ++p) g[p] = spec.boundary(row(pts, p));
  return g;
}

void check_set(const OperatorSpec& spec, const TrainingSet& set) {
  require(set.domain.dim == spec.domain.dim, ErrorKind::dimension_mismatch, "training set / operator dimension mismatch");
  require(set.m_r() >= 1 && set.m_b() >= 1, ErrorKind::invalid_argument, "training set must be nonempty");
}

}  // namespace

double empirical_pinn_loss(const Trial& h, const OperatorSpec& spec, const TrainingSet& set, const LossWeights& w) {
  check_set(spec, set);
  const auto r = residuals(spec, set.interior, h.jets(set.interior, 2));
  const JetBatch hb = h.jets(set.boundary, 0);
  const auto g = boundary_values(spec, set.boundary);
  double sr = 0.0;
  for (double v : r) sr += v * v;
  double sb = 0.0;
  for (int p = 0; p < set.m_b(); ++p) sb += (hb.value(p) - g[p]) * (hb.value(p) - g[p]);
  return w.r / set.m_r() * sr + w.b / set.m_b() * sb;
}

LossBreakdown loss_breakdown(const Trial& h, const OperatorSpec& spec, const TrainingSet& set, const LossWeights& w,
                             const RegSchedule& sched, const LossOptions& opt) {
  check_set(spec, set);
  LossBreakdown out;
  out.lambda_r = sched.lambda_r();
  out.lambda_b = sched.lambda_b();
  const auto r = residuals(spec, set.interior, h.jets(set.interior, 2));
  const JetBatch hb = h.jets(set.boundary, 0);
  const auto g = boundary_values(spec, set.boundary);
  double sr = 0.0;
  for (double v : r) sr += v * v;
  double sb = 0.0;
  for (int p = 0; p < set.m_b(); ++p) sb += (hb.value(p) - g[p]) * (hb.value(p) - g[p]);
  out.pinn_r = w.r / set.m_r() * sr;
  out.pinn_b = w.b / set.m_b() * sb;

  if (set.m_r() >= 2) {
    const PairSet ps = build_pair_set(set.interior, sched.alpha, opt.pair_budget, opt.pair_seed);
    out.holder_r = holder_on_pairs(r, ps, opt.mode, opt.tau).value;
    out.reg_r = out.lambda_r * out.holder_r;
  }
  if (set.domain.dim >= 2 && set.m_b() >= 2) {
    std::vector<double> hv(set.m_b());
    for (int p = 0; p < set.m_b(); ++p) hv[p] = hb.value(p);
    const PairSet ps = build_pair_set(set.boundary, sched.alpha, opt.pair_budget, mix_seed(opt.pair_seed, 1));
    out.holder_b = holder_on_pairs(hv, ps, opt.mode, opt.tau).value;
    out.reg_b = out.lambda_b * out.holder_b;
  }
  return out;
}

double regularized_loss(const Trial& h, const OperatorSpec& spec, const TrainingSet& set, const LossWeights& w,
                        const RegSchedule& sched, const LossOptions& opt) {
  return loss_breakdown(h, spec, set, w, sched, opt).total();
}

// ---------------------------------------------------------------------------
// LossEvaluator

LossEvaluator::LossEvaluator(const OperatorSpec& spec, const TrainingSet& set, const LossWeights& w,
                             const RegSchedule& sched, const LossOptions& opt, const Architecture& arch)
    : spec_(spec),
      set_(set),
      w_(w),
      sched_(sched),
      opt_(opt),
      interior_eval_(arch, 2),
      boundary_eval_(arch, 0) {
  check_set(spec, set);
  require(arch.input_dim() == set.domain.dim, ErrorKind::dimension_mismatch, "LossEvaluator: architecture dimension");
  if (set.m_r() >= 2) interior_pairs_ = build_pair_set(set.interior, sched.alpha, opt.pair_budget, opt.pair_seed);
  if (set.domain.dim >= 2 && set.m_b() >= 2) {
    boundary_pairs_ = build_pair_set(set.boundary, sched.alpha, opt.pair_budget, mix_seed(opt.pair_seed, 1));
  }
  g_ = boundary_values(spec, set.boundary);
}

LossBreakdown LossEvaluator::evaluate(const MlpParams& p, std::span<double> grad) {
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  LossBreakdown out;
  out.lambda_r = sched_.lambda_r();
  out.lambda_b = sched_.lambda_b();

  const int m_r = set_.m_r();
  const int m_b = set_.m_b();
  const int d = set_.domain.dim;

  // Interior: residuals, PINN term and Hoelder term of F[h].
  const JetBatch& jets = interior_eval_.forward(p, set_.interior);
  std::vector<double> r(m_r);
  std::vector<Jet2> sens;
  if (want_grad) sens.resize(m_r);
  std::vector<double> x(d);
  for (int i = 0; i < m_r; ++i) {
    for (int k = 0; k < d; ++k) x[k] = set_.interior(i, k);
    const Jet2 j = jets.jet(i);
    if (want_grad) {
      const ResidualSensitivity s = residual_sensitivity(spec_, x, j);
      r[i] = s.value;
      sens[i] = s.adjoint;
    } else {
      r[i] = spec_.residual(x, j);
    }
    if (!std::isfinite(r[i])) non_finite_at(spec_, x);
  }
  double sr = 0.0;
  for (double v : r) sr += v * v;
  out.pinn_r = w_.r / m_r * sr;

  std::vector<double> dr;
  if (want_grad) {
    dr.resize(m_r);
    for (int i = 0; i < m_r; ++i) dr[i] = 2.0 * w_.r / m_r * r[i];
  }
  if (!interior_pairs_.pairs.empty()) {
    out.holder_r = holder_on_pairs(r, interior_pairs_, opt_.mode, opt_.tau,
                                   want_grad ? std::span<double>(dr) : std::span<double>(), out.lambda_r)
                       .value;
    out.reg_r = out.lambda_r * out.holder_r;
  }
  if (want_grad) {
    JetBatch adj(d, 2, m_r);
    for (int i = 0; i < m_r; ++i) adj.set_jet(i, jet_scale(sens[i], dr[i]));
    interior_eval_.backward(p, adj, grad);
  }

  // Boundary: mismatch term and, for d >= 2, Hoelder term of h on the boundary.
  const JetBatch& hb = boundary_eval_.forward(p, set_.boundary);
  std::vector<double> hv(m_b);
  double sb = 0.0;
  for (int i = 0; i < m_b; ++i) {
    hv[i] = hb.value(i);
    sb += (hv[i] - g_[i]) * (hv[i] - g_[i]);
  }
  out.pinn_b = w_.b / m_b * sb;
  std::vector<double> dh;
  if (want_grad) {
    dh.resize(m_b);
    for (int i = 0; i < m_b; ++i) dh[i] = 2.0 * w_.b / m_b * (hv[i] - g_[i]);
  }
  if (boundary_pairs_) {
    out.holder_b = holder_on_pairs(hv, *boundary_pairs_, opt_.mode, opt_.tau,
                                   want_grad ? std::span<double>(dh) : std::span<double>(), out.lambda_b)
                       .value;
    out.reg_b = out.lambda_b * out.holder_b;
  }
  if (want_grad) {
    JetBatch adj(d, 0, m_b);
    for (int i = 0; i < m_b; ++i) adj.at(0, i) = dh[i];
    boundary_eval_.backward(p, adj, grad);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo loss and the bound checker

MonteCarloLoss expected_loss_mc(const Trial& h, const OperatorSpec& spec, const LossWeights& w, int n,
                                std::uint64_t seed) {
  require(n >= 100, ErrorKind::invalid_argument, "expected_loss_mc: need at least 100 samples");
  const Domain& dom = spec.domain;
  Rng rr(mix_seed(seed, 10));
  const PointSet xr = sample_interior(dom, n, rr);
  const auto r = residuals(spec, xr, h.jets(xr, 2));
  std::vector<double> rs(n);
  for (int i = 0; i < n; ++i) rs[i] = w.r * r[i] * r[i];
  const MeanStderr res = mean_stderr(rs);

  PointSet xb;
  if (dom.dim == 1) {
    xb = boundary_endpoints(dom);
  } else {
    Rng rb(mix_seed(seed, 11));
    xb = sample_boundary(dom, n, rb);
  }
  const JetBatch hb = h.jets(xb, 0);
  const auto g = boundary_values(spec, xb);
  std::vector<double> bs(xb.rows());
  for (int i = 0; i < static_cast<int>(xb.rows()); ++i) bs[i] = w.b * (hb.value(i) - g[i]) * (hb.value(i) - g[i]);
  MeanStderr bnd = mean_stderr(bs);
  if (dom.dim == 1) bnd.stderr_ = 0.0;  // exact average over both endpoints

  MonteCarloLoss out;
  out.residual_term = res.mean;
  out.residual_stderr = res.stderr_;
  out.boundary_term = bnd.mean;
  out.boundary_stderr = bnd.stderr_;
  out.value = res.mean + bnd.mean;
  out.stderr_ = std::sqrt(res.stderr_ * res.stderr_ + bnd.stderr_ * bnd.stderr_);
  return out;
}

double boundary_data_seminorm_sq(const OperatorSpec& spec, double alpha, int n, std::uint64_t seed) {
  const Domain& dom = spec.domain;
  PointSet xb;
  if (dom.dim == 1) {
    xb = boundary_endpoints(dom);
  } else {
    Rng rng(seed);
    xb = sample_boundary(dom, n, rng);
  }
  const auto g = boundary_values(spec, xb);
  double best = 0.0;
  const Eigen::MatrixXd pts = xb.transpose();
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < pts.cols(); ++j) {
      const double d2 = (pts.col(i) - pts.col(j)).squaredNorm();
      if (d2 < 1e-28) continue;
      const double diff = g[i] - g[j];
      best = std::max(best, diff * diff / std::pow(d2, alpha));
    }
  }
  return best;
}

BoundCheck check_generalization_bound(const Trial& h, const OperatorSpec& spec, const TrainingSet& set,
                                      const LossWeights& w, const RegSchedule& sched, std::uint64_t seed,
                                      const BoundOptions& opt) {
  const int d = set.domain.dim;
  BoundCheck out;
  out.expected = expected_loss_mc(h, spec, w, opt.mc_samples, seed);
  out.lhs = out.expected.value + 3.0 * out.expected.stderr_;

  LossOptions hard;
  hard.mode = HolderMode::hard;
  hard.pair_budget = 0;
  out.regularized = regularized_loss(h, spec, set, w, sched, hard);
  out.rhs = sched.C_m * out.regularized;
  if (d >= 2) {
    const DensityConstants k = density_constants(set.domain);
    const double g2 = opt.g_seminorm_sq ? *opt.g_seminorm_sq
                                        : boundary_data_seminorm_sq(spec, sched.alpha, opt.g_points, mix_seed(seed, 12));
    const double sd = std::sqrt(static_cast<double>(d));
    out.C_prime = 3.0 * w.b * std::pow(sd, 2.0 * sched.alpha) * std::pow(k.c_b, -2.0 * sched.alpha / (d - 1)) * g2;
    out.rhs += out.C_prime * std::pow(static_cast<double>(set.m_b()), -sched.alpha / (d - 1));
  }
  out.slack = out.rhs - out.lhs;
  out.holds = out.lhs <= out.rhs;
  return out;
}

}  // namespace vispinn
