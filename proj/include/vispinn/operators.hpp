// SPDX-License-Identifier: MIT
/**
 * @file operators.hpp
 * @brief Fully nonlinear operators F(x, r, p, X), the bundled benchmark
 *        catalog and a randomized degenerate-ellipticity checker.
 *
 * An operator is evaluated on a jet: r = jet.value, p = jet.grad and
 * X = jet.hess. Each operator is written once as a generic callable and
 * instantiated for `double` and for tape variables, so the same formula
 * yields residuals and their sensitivities with respect to the jet.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "vispinn/autodiff.hpp"
#include "vispinn/sampling.hpp"

namespace vispinn {

/// Region of (r, p, X) on which an operator is degenerate elliptic.
enum class Admissibility {
  any,
  psd_hessian,  // X positive semidefinite (convexity restriction)
};

using PointFn = std::function<double(std::span<const double>)>;
using JetFn = std::function<Jet2(std::span<const double>)>;

struct OperatorSpec {
  std::string name;
  Domain domain;
  Admissibility admissibility = Admissibility::any;
  std::string admissibility_note;
  std::function<double(std::span<const double>, const Jet2&)> residual;
  std::function<ad::Var(std::span<const double>, const VarJet&)> residual_var;
  PointFn boundary;                 // g on the boundary
  std::optional<JetFn> exact;       // analytic jet of the exact solution
};

/// Builds a spec from a generic callable `f(x, jet)` usable with both jet types.
template <class F>
OperatorSpec make_operator(std::string name, Domain domain, F f, PointFn boundary,
                           std::optional<JetFn> exact = std::nullopt,
                           Admissibility adm = Admissibility::any, std::string note = {}) {
  OperatorSpec s;
  s.name = std::move(name);
  s.domain = domain;
  s.admissibility = adm;
  s.admissibility_note = std::move(note);
  s.residual = [f](std::span<const double> x, const Jet2& j) { return f(x, j); };
  s.residual_var = [f](std::span<const double> x, const VarJet& j) { return f(x, j); };
  s.boundary = std::move(boundary);
  s.exact = std::move(exact);
  return s;
}

/// F(x, jet); throws `degenerate_evaluation` on a non-finite result.
double eval_residual(const OperatorSpec& spec, std::span<const double> x, const Jet2& jet);

/// Residual plus dF/d(value, grad, packed hess), laid out as a Jet2.
struct ResidualSensitivity {
  double value = 0.0;
  Jet2 adjoint;
};
ResidualSensitivity residual_sensitivity(const OperatorSpec& spec, std::span<const double> x, const Jet2& jet);

struct EllipticityWitness {
  std::vector<double> x;
  Jet2 lower;   // (r, p, X)
  Jet2 upper;   // (r + delta, p, X - P)
  double gap = 0.0;  // F(lower) - F(upper)
};

struct EllipticityReport {
  int trials = 0;
  int violations = 0;
  double worst_violation = 0.0;
  std::optional<EllipticityWitness> witness;
};

/// Randomized check of F(x, r, p, X) <= F(x, r + delta, p, X - P) + 1e-10
/// for delta >= 0 and P = A^T A positive semidefinite.
EllipticityReport check_ellipticity(const OperatorSpec& spec, int trials, std::uint64_t seed);

/// F + c * r. For c >= 0 the result stays degenerate elliptic.
OperatorSpec with_zeroth_order(const OperatorSpec& spec, double c);

/// Grid of Pucci coefficients a in [1, 2].
std::vector<double> pucci_coefficients();

/// The bundled benchmarks: poisson2d, poisson1d, eikonal1d, monge_ampere2d, pucci1d.
std::vector<OperatorSpec> catalog();

/// Looks up a catalog entry by name; throws `config` for unknown names.
OperatorSpec find_operator(const std::string& name);

}  // namespace vispinn
