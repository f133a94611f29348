// SPDX-License-Identifier: MIT
// Independent oracles shared by the unit tests and the acceptance binary.
#pragma once

#include <cmath>
#include <span>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "vispinn/jet.hpp"
#include "vispinn/network.hpp"
#include "vispinn/rng.hpp"

namespace vispinn::testing {

// Random expression trees evaluated both as plain doubles (the oracle) and as jets.
struct Node {
  int op = 0;  // 0 var, 1 const, 2 add, 3 sub, 4 mul, 5 tanh, 6 sin, 7 exp, 8 square, 9 scale
  int var = 0;
  double c = 0.0;
  int a = -1, b = -1;
};

struct Composite {
  int dim = 1;
  std::vector<Node> nodes;
  int root = -1;
};

inline int grow(Composite& e, Rng& rng, int depth) {
  Node n;
  if (depth == 0 || rng.uniform() < 0.15) {
    if (rng.uniform() < 0.8) {
      n.op = 0;
      n.var = static_cast<int>(rng.index(e.dim));
    } else {
      n.op = 1;
      n.c = rng.uniform(-1.0, 1.0);
    }
  } else {
    n.op = 2 + static_cast<int>(rng.index(8));
    n.c = rng.uniform(-1.5, 1.5);
    n.a = grow(e, rng, depth - 1);
    if (n.op <= 4) n.b = grow(e, rng, depth - 1);
  }
  e.nodes.push_back(n);
  return static_cast<int>(e.nodes.size()) - 1;
}

template <class T>
T eval(const Composite& e, int k, std::span<const double> x) {
  const Node& n = e.nodes[k];
  if constexpr (std::is_same_v<T, double>) {
    switch (n.op) {
      case 0: return x[n.var];
      case 1: return n.c;
      case 2: return eval<T>(e, n.a, x) + eval<T>(e, n.b, x);
      case 3: return eval<T>(e, n.a, x) - eval<T>(e, n.b, x);
      case 4: return eval<T>(e, n.a, x) * eval<T>(e, n.b, x);
      case 5: return std::tanh(eval<T>(e, n.a, x));
      case 6: return std::sin(eval<T>(e, n.a, x));
      case 7: return std::exp(0.3 * eval<T>(e, n.a, x));
      case 8: { const double v = eval<T>(e, n.a, x); return v * v; }
      default: return n.c * eval<T>(e, n.a, x);
    }
  } else {
    switch (n.op) {
      case 0: return jet_var(x, n.var);
      case 1: return jet_constant(e.dim, n.c);
      case 2: return eval<T>(e, n.a, x) + eval<T>(e, n.b, x);
      case 3: return eval<T>(e, n.a, x) - eval<T>(e, n.b, x);
      case 4: return eval<T>(e, n.a, x) * eval<T>(e, n.b, x);
      case 5: return jet_tanh(eval<T>(e, n.a, x));
      case 6: return jet_sin(eval<T>(e, n.a, x));
      case 7: return jet_exp(jet_scale(eval<T>(e, n.a, x), 0.3));
      case 8: return jet_square(eval<T>(e, n.a, x));
      default: return jet_scale(eval<T>(e, n.a, x), n.c);
    }
  }
}

inline Composite random_composite(std::uint64_t seed) {
  Rng rng(seed);
  Composite e;
  e.dim = 1 + static_cast<int>(rng.index(3));
  e.root = grow(e, rng, 1 + static_cast<int>(rng.index(4)));
  return e;
}

// Independent forward pass with Eigen matrices built from the layout contract.
inline double matrix_forward(const MlpParams& p, const std::vector<double>& x) {
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (int l = 0; l < p.arch.depth(); ++l) {
    const int r = p.arch.fan_out(l), c = p.arch.fan_in(l);
    Eigen::MatrixXd W(r, c);
    Eigen::VectorXd b(r);
    std::size_t k = p.arch.weight_offset(l);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) W(i, j) = p.theta[k++];
    for (int i = 0; i < r; ++i) b[i] = p.theta[k++];
    Eigen::VectorXd z = W * a + b;
    a = l + 1 < p.arch.depth() ? Eigen::VectorXd(z.array().tanh()) : z;
  }
  return a[0];
}

inline Architecture random_arch(Rng& rng) {
  const int d = 1 + static_cast<int>(rng.index(3));
  std::vector<int> w{d};
  const int hidden = 1 + static_cast<int>(rng.index(3));
  for (int i = 0; i < hidden; ++i) w.push_back(2 + static_cast<int>(rng.index(10)));
  w.push_back(1);
  return Architecture(w);
}

}  // namespace vispinn::testing
