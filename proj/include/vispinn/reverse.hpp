// SPDX-License-Identifier: MIT
/**
 * @file reverse.hpp
 * @brief Minimal tape-based reverse-mode differentiation.
 *
 * Every operation on a `Var` appends a node with at most two parents and the
 * corresponding local partial derivatives. `Tape::adjoints` sweeps the tape
 * backwards once. Vars without a tape are constants.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "vispinn/error.hpp"

namespace vispinn::ad {

class Tape;

struct Var {
  double value = 0.0;
  std::int32_t id = -1;
  Tape* tape = nullptr;

  Var() = default;
  Var(double v) : value(v) {}  // NOLINT: implicit constants are intended
  Var(double v, std::int32_t i, Tape* t) : value(v), id(i), tape(t) {}

  bool is_constant() const noexcept { return tape == nullptr; }
};

class Tape {
 public:
  Var variable(double v) { return Var(v, push(-1, 0.0, -1, 0.0), this); }

  std::int32_t push(std::int32_t a, double da, std::int32_t b, double db) {
    nodes_.push_back({a, b, da, db});
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() noexcept { nodes_.clear(); }

  /// Adjoints d(out)/d(node) for every node on the tape.
  std::vector<double> adjoints(const Var& out) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    if (out.is_constant()) return adj;
    adj[out.id] = 1.0;
    for (std::int32_t k = out.id; k >= 0; --k) {
      const double a = adj[k];
      if (a == 0.0) continue;
      const Node& n = nodes_[k];
      if (n.a >= 0) adj[n.a] += a * n.da;
      if (n.b >= 0) adj[n.b] += a * n.db;
    }
    return adj;
  }

 private:
  struct Node {
    std::int32_t a, b;
    double da, db;
  };
  std::vector<Node> nodes_;
};

namespace detail {
inline Tape* common_tape(const Var& a, const Var& b) {
  if (a.tape && b.tape && a.tape != b.tape) fail(ErrorKind::invalid_argument, "vars from different tapes");
  return a.tape ? a.tape : b.tape;
}

inline Var unary(const Var& a, double v, double da) {
  if (a.is_constant()) return Var(v);
  return Var(v, a.tape->push(a.id, da, -1, 0.0), a.tape);
}

inline Var binary(const Var& a, const Var& b, double v, double da, double db) {
  Tape* t = common_tape(a, b);
  if (!t) return Var(v);
  return Var(v, t->push(a.is_constant() ? -1 : a.id, da, b.is_constant() ? -1 : b.id, db), t);
}
}  // namespace detail

inline Var operator+(const Var& a, const Var& b) { return detail::binary(a, b, a.value + b.value, 1.0, 1.0); }
inline Var operator-(const Var& a, const Var& b) { return detail::binary(a, b, a.value - b.value, 1.0, -1.0); }
inline Var operator*(const Var& a, const Var& b) { return detail::binary(a, b, a.value * b.value, b.value, a.value); }
inline Var operator/(const Var& a, const Var& b) {
  const double q = a.value / b.value;
  return detail::binary(a, b, q, 1.0 / b.value, -q / b.value);
}
inline Var operator-(const Var& a) { return detail::unary(a, -a.value, -1.0); }

inline Var operator+(const Var& a, double b) { return detail::unary(a, a.value + b, 1.0); }
inline Var operator+(double a, const Var& b) { return detail::unary(b, a + b.value, 1.0); }
inline Var operator-(const Var& a, double b) { return detail::unary(a, a.value - b, 1.0); }
inline Var operator-(double a, const Var& b) { return detail::unary(b, a - b.value, -1.0); }
inline Var operator*(const Var& a, double b) { return detail::unary(a, a.value * b, b); }
inline Var operator*(double a, const Var& b) { return detail::unary(b, a * b.value, a); }
inline Var operator/(const Var& a, double b) { return detail::unary(a, a.value / b, 1.0 / b); }

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

inline Var tanh(const Var& a) {
  const double t = std::tanh(a.value);
  return detail::unary(a, t, 1.0 - t * t);
}
inline Var exp(const Var& a) {
  const double e = std::exp(a.value);
  return detail::unary(a, e, e);
}
inline Var sin(const Var& a) { return detail::unary(a, std::sin(a.value), std::cos(a.value)); }
inline Var cos(const Var& a) { return detail::unary(a, std::cos(a.value), -std::sin(a.value)); }
inline Var sqrt(const Var& a) {
  const double s = std::sqrt(a.value);
  return detail::unary(a, s, 0.5 / s);
}

/// Maximum over a finite set; the derivative follows the argmax branch with
/// the lowest index winning ties.
inline Var max_of(std::span<const Var> xs) {
  require(!xs.empty(), ErrorKind::invalid_argument, "max_of: empty set");
  std::size_t best = 0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (xs[i].value > xs[best].value) best = i;
  }
  return detail::unary(xs[best], xs[best].value, 1.0);
}

inline double value_of(const Var& x) noexcept { return x.value; }

}  // namespace vispinn::ad
