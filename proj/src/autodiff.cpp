// SPDX-License-Identifier: MIT
#include "vispinn/autodiff.hpp"

#include <cmath>

namespace vispinn {

VarParams lift(const MlpParams& params, ad::Tape& tape) {
  VarParams out{params.arch, {}};
  out.theta.reserve(params.theta.size());
  for (double v : params.theta) out.theta.push_back(tape.variable(v));
  return out;
}

ParamGradient param_gradient(const ParamObjective& objective, const MlpParams& params) {
  ad::Tape tape;
  const VarParams lifted = lift(params, tape);
  const ad::Var out = objective(lifted);
  if (!std::isfinite(out.value)) fail(ErrorKind::degenerate_evaluation, "param_gradient: objective is not finite");
  const std::vector<double> adj = tape.adjoints(out);
  ParamGradient g;
  g.objective = out.value;
  g.values.resize(params.theta.size());
  // Leaves were pushed first, so node k is parameter k.
  for (std::size_t k = 0; k < g.values.size(); ++k) g.values[k] = adj[k];
  return g;
}

}  // namespace vispinn
