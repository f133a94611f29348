// SPDX-License-Identifier: MIT
#pragma once

#include <functional>
#include <vector>

#include "vispinn/jet.hpp"
#include "vispinn/network.hpp"
#include "vispinn/reverse.hpp"

namespace vispinn {

/// Gradient with respect to the flat parameter vector, in the layer-major
/// flattening order of `BasicMlpParams::theta`.
struct ParamGradient {
  std::vector<double> values;
  double objective = 0.0;
};

using VarParams = BasicMlpParams<ad::Var>;
using VarJet = BasicJet2<ad::Var>;
using ParamObjective = std::function<ad::Var(const VarParams&)>;

/// Records `objective` on a fresh tape with every parameter as a leaf and
/// sweeps it backwards. Throws `degenerate_evaluation` if the objective
/// value is not finite.
ParamGradient param_gradient(const ParamObjective& objective, const MlpParams& params);

/// Lifts parameters onto `tape` as independent variables.
VarParams lift(const MlpParams& params, ad::Tape& tape);

}  // namespace vispinn
