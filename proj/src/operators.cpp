// SPDX-License-Identifier: MIT
#include "vispinn/operators.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "vispinn/rng.hpp"

namespace vispinn {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kPucciGrid = 32;

template <class J>
using scalar_of = std::decay_t<decltype(std::declval<J>().value)>;

double zero_boundary(std::span<const double>) { return 0.0; }

Jet2 sin_pi(std::span<const double> x, int k) { return jet_sin(jet_scale(jet_var(x, k), kPi)); }

OperatorSpec poisson2d() {
  auto f = [](std::span<const double> x) { return 2.0 * kPi * kPi * std::sin(kPi * x[0]) * std::sin(kPi * x[1]); };
  auto F = [f](std::span<const double> x, const auto& j) { return -(j.h(0, 0) + j.h(1, 1)) - f(x); };
  JetFn exact = [](std::span<const double> x) { return jet_mul(sin_pi(x, 0), sin_pi(x, 1)); };
  return make_operator("poisson2d", Domain::hypercube(2), F, zero_boundary, exact);
}

OperatorSpec poisson1d() {
  auto F = [](std::span<const double> x, const auto& j) { return -j.h(0, 0) - kPi * kPi * std::sin(kPi * x[0]); };
  JetFn exact = [](std::span<const double> x) { return sin_pi(x, 0); };
  return make_operator("poisson1d", Domain::hypercube(1), F, zero_boundary, exact);
}

OperatorSpec eikonal1d() {
  auto F = [](std::span<const double>, const auto& j) { return abs_of(j.grad[0]) - 1.0; };
  // Viscosity solution min(x, 1 - x); at the kink the first branch is reported.
  JetFn exact = [](std::span<const double> x) {
    Jet2 j(1);
    if (x[0] <= 1.0 - x[0]) {
      j.value = x[0];
      j.grad[0] = 1.0;
    } else {
      j.value = 1.0 - x[0];
      j.grad[0] = -1.0;
    }
    return j;
  };
  return make_operator("eikonal1d", Domain::hypercube(1), F, zero_boundary, exact);
}

OperatorSpec monge_ampere2d() {
  auto f = [](std::span<const double> x) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    return (1.0 + r2) * std::exp(r2);
  };
  // f - det X on PSD Hessians. Off the cone: f - det+(X) + sum of negative
  // eigenvalue parts, which keeps F nonincreasing in X everywhere and gives
  // concave candidates a positive residual.
  auto F = [f](std::span<const double> x, const auto& j) {
    using std::sqrt;
    const auto a = j.h(0, 0), b = j.h(0, 1), c = j.h(1, 1);
    const auto det = a * c - b * b;
    const double dv = value_of(det), tr = value_of(a) + value_of(c);
    if (dv >= 0.0 && tr >= 0.0) return f(x) - det;
    if (dv >= 0.0) return f(x) - (a + c);  // both eigenvalues <= 0
    const auto half = 0.5 * (a - c);
    return f(x) - (0.5 * (a + c) - sqrt(half * half + b * b));  // f - lambda_min
  };
  JetFn exact = [](std::span<const double> x) {
    const Jet2 a = jet_var(x, 0);
    const Jet2 b = jet_var(x, 1);
    return jet_exp(jet_scale(jet_add(jet_square(a), jet_square(b)), 0.5));
  };
  PointFn g = [](std::span<const double> x) { return std::exp(0.5 * (x[0] * x[0] + x[1] * x[1])); };
  return make_operator("monge_ampere2d", Domain::hypercube(2), F, g, exact, Admissibility::psd_hessian,
                       "degenerate elliptic on positive semidefinite Hessians (convex functions)");
}

OperatorSpec pucci1d() {
  const std::vector<double> coeffs = pucci_coefficients();
  auto f = [coeffs](std::span<const double> x) {
    double best = -std::numeric_limits<double>::infinity();
    for (double a : coeffs) best = std::max(best, a * kPi * kPi * std::sin(kPi * x[0]));
    return best;
  };
  auto F = [coeffs, f](std::span<const double> x, const auto& j) {
    using T = scalar_of<decltype(j)>;
    std::array<T, kPucciGrid> branch;
    for (int k = 0; k < kPucciGrid; ++k) branch[k] = -coeffs[k] * j.h(0, 0);
    return max_of(std::span<const T>(branch)) - f(x);
  };
  JetFn exact = [](std::span<const double> x) { return sin_pi(x, 0); };
  return make_operator("pucci1d", Domain::hypercube(1), F, zero_boundary, exact);
}

}  // namespace

std::vector<double> pucci_coefficients() {
  std::vector<double> a(kPucciGrid);
  for (int k = 0; k < kPucciGrid; ++k) a[k] = 1.0 + static_cast<double>(k) / (kPucciGrid - 1);
  return a;
}

double eval_residual(const OperatorSpec& spec, std::span<const double> x, const Jet2& jet) {
  require(static_cast<int>(x.size()) == spec.domain.dim && jet.dim == spec.domain.dim, ErrorKind::dimension_mismatch,
          "eval_residual: dimension mismatch");
  const double r = spec.residual(x, jet);
  if (!std::isfinite(r)) fail(ErrorKind::degenerate_evaluation, "non-finite residual for operator " + spec.name);
  return r;
}

ResidualSensitivity residual_sensitivity(const OperatorSpec& spec, std::span<const double> x, const Jet2& jet) {
  thread_local ad::Tape tape;
  tape.clear();
  const int d = jet.dim;
  VarJet vj(d);
  vj.value = tape.variable(jet.value);
  for (int k = 0; k < d; ++k) vj.grad[k] = tape.variable(jet.grad[k]);
  for (int k = 0; k < jet.hess_size(); ++k) vj.hess[k] = tape.variable(jet.hess[k]);
  const ad::Var out = spec.residual_var(x, vj);
  if (!std::isfinite(out.value)) fail(ErrorKind::degenerate_evaluation, "non-finite residual for operator " + spec.name);
  const std::vector<double> adj = tape.adjoints(out);
  ResidualSensitivity s;
  s.value = out.value;
  s.adjoint = Jet2(d);
  // Leaves were pushed in the order value, grad, hess.
  s.adjoint.value = adj[0];
  for (int k = 0; k < d; ++k) s.adjoint.grad[k] = adj[1 + k];
  for (int k = 0; k < jet.hess_size(); ++k) s.adjoint.hess[k] = adj[1 + d + k];
  return s;
}

EllipticityReport check_ellipticity(const OperatorSpec& spec, int trials, std::uint64_t seed) {
  require(trials >= 1, ErrorKind::invalid_argument, "check_ellipticity: trials must be >= 1");
  constexpr double kTol = 1e-10;
  const int d = spec.domain.dim;
  Rng rng(seed);
  EllipticityReport rep;
  rep.trials = trials;

  auto gram = [&](Eigen::MatrixXd& out) {
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
    }
    out = a.transpose() * a;
  };

  for (int t = 0; t < trials; ++t) {
    const PointSet xs = sample_interior(spec.domain, 1, rng);
    const std::vector<double> x(xs.data(), xs.data() + d);

    Jet2 lower(d);
    lower.value = 2.0 * rng.normal();
    for (int k = 0; k < d; ++k) lower.grad[k] = 2.0 * rng.normal();

    Eigen::MatrixXd X(d, d);
    Eigen::MatrixXd P(d, d);
    if (spec.admissibility == Admissibility::psd_hessian) {
      Eigen::MatrixXd Y;
      gram(Y);
      gram(P);
      X = Y + P;
    } else {
      for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) X(i, j) = X(j, i) = 2.0 * rng.normal();
      }
      gram(P);
    }
    const double delta = std::abs(rng.normal());

    Jet2 upper = lower;
    upper.value = lower.value + delta;
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) {
        lower.h(i, j) = X(i, j);
        upper.h(i, j) = X(i, j) - P(i, j);
      }
    }
    const double gap = spec.residual(x, lower) - spec.residual(x, upper);
    if (gap > kTol) {
      ++rep.violations;
      if (gap > rep.worst_violation) {
        rep.worst_violation = gap;
        rep.witness = EllipticityWitness{x, lower, upper, gap};
      }
    }
  }
  return rep;
}

OperatorSpec with_zeroth_order(const OperatorSpec& spec, double c) {
  OperatorSpec s = spec;
  s.name = spec.name + "+r";
  auto base = spec.residual;
  auto base_var = spec.residual_var;
  s.residual = [base, c](std::span<const double> x, const Jet2& j) { return base(x, j) + c * j.value; };
  s.residual_var = [base_var, c](std::span<const double> x, const VarJet& j) { return base_var(x, j) + c * j.value; };
  s.exact.reset();
  return s;
}

std::vector<OperatorSpec> catalog() { return {poisson2d(), poisson1d(), eikonal1d(), monge_ampere2d(), pucci1d()}; }

OperatorSpec find_operator(const std::string& name) {
  for (auto& s : catalog()) {
    if (s.name == name) return s;
  }
  fail(ErrorKind::config, "unknown operator '" + name + "'");
}

}  // namespace vispinn
