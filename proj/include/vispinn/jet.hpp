// SPDX-License-Identifier: MIT
/**
 * @file jet.hpp
 * @brief Second-order forward jets: (value, gradient, Hessian) of a scalar
 *        function of a point in R^d.
 *
 * Jets are propagated through arithmetic with the exact product and chain
 * rules, so a composite built from supported primitives carries its exact
 * input gradient and Hessian. Only the upper triangle of the Hessian is
 * stored, which makes the Hessian symmetric by construction.
 *
 * The scalar type is a template parameter. `Jet2` (double) is the everyday
 * type; `BasicJet2<ad::Var>` records every operation on a reverse-mode tape,
 * which is how parameter gradients of jet-valued objectives are obtained.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>

#include "vispinn/error.hpp"

namespace vispinn {

inline constexpr int kMaxJetDim = 4;
inline constexpr int kMaxHessSize = kMaxJetDim * (kMaxJetDim + 1) / 2;

/// Index of entry (i, j) in the packed upper triangle of a d x d matrix.
constexpr int packed_index(int i, int j, int d) noexcept {
  if (i > j) std::swap(i, j);
  return i * d - i * (i - 1) / 2 + (j - i);
}

constexpr int packed_size(int d) noexcept { return d * (d + 1) / 2; }

template <class T>
struct BasicJet2 {
  int dim = 0;
  T value{};
  std::array<T, kMaxJetDim> grad{};
  std::array<T, kMaxHessSize> hess{};  // packed upper triangle

  BasicJet2() = default;
  explicit BasicJet2(int d, T v = T{}) : dim(d), value(v) {
    require(d >= 1 && d <= kMaxJetDim, ErrorKind::dimension_mismatch, "jet dimension must be in [1, 4]");
  }

  int hess_size() const noexcept { return packed_size(dim); }
  T& h(int i, int j) noexcept { return hess[packed_index(i, j, dim)]; }
  const T& h(int i, int j) const noexcept { return hess[packed_index(i, j, dim)]; }
};

using Jet2 = BasicJet2<double>;

namespace detail {
inline void check_same_dim(int a, int b) {
  if (a != b) fail(ErrorKind::dimension_mismatch, "jet dimension mismatch");
}
}  // namespace detail

/// Seed jet of coordinate i: value x_i, gradient e_i, zero Hessian.
template <class T = double>
BasicJet2<T> jet_var(std::span<const double> x, int i) {
  if (i < 0 || i >= static_cast<int>(x.size())) fail(ErrorKind::invalid_argument, "jet_var: index out of range");
  BasicJet2<T> j(static_cast<int>(x.size()), T(x[i]));
  j.grad[i] = T(1.0);
  return j;
}

template <class T>
BasicJet2<T> jet_constant(int d, T c) {
  return BasicJet2<T>(d, c);
}

template <class T>
BasicJet2<T> jet_add(const BasicJet2<T>& a, const BasicJet2<T>& b) {
  detail::check_same_dim(a.dim, b.dim);
  BasicJet2<T> r(a.dim, a.value + b.value);
  for (int i = 0; i < a.dim; ++i) r.grad[i] = a.grad[i] + b.grad[i];
  for (int k = 0; k < a.hess_size(); ++k) r.hess[k] = a.hess[k] + b.hess[k];
  return r;
}

template <class T, class S>
BasicJet2<T> jet_add(const BasicJet2<T>& a, S c) {
  BasicJet2<T> r = a;
  r.value = a.value + c;
  return r;
}

template <class T, class S>
BasicJet2<T> jet_scale(const BasicJet2<T>& a, S c) {
  BasicJet2<T> r(a.dim, a.value * c);
  for (int i = 0; i < a.dim; ++i) r.grad[i] = a.grad[i] * c;
  for (int k = 0; k < a.hess_size(); ++k) r.hess[k] = a.hess[k] * c;
  return r;
}

template <class T>
BasicJet2<T> jet_neg(const BasicJet2<T>& a) {
  BasicJet2<T> r(a.dim, -a.value);
  for (int i = 0; i < a.dim; ++i) r.grad[i] = -a.grad[i];
  for (int k = 0; k < a.hess_size(); ++k) r.hess[k] = -a.hess[k];
  return r;
}

template <class T>
BasicJet2<T> jet_sub(const BasicJet2<T>& a, const BasicJet2<T>& b) {
  detail::check_same_dim(a.dim, b.dim);
  BasicJet2<T> r(a.dim, a.value - b.value);
  for (int i = 0; i < a.dim; ++i) r.grad[i] = a.grad[i] - b.grad[i];
  for (int k = 0; k < a.hess_size(); ++k) r.hess[k] = a.hess[k] - b.hess[k];
  return r;
}

/// Product rule to second order:
/// hess = a.hess*b + b.hess*a + a.grad (x) b.grad + b.grad (x) a.grad.
template <class T>
BasicJet2<T> jet_mul(const BasicJet2<T>& a, const BasicJet2<T>& b) {
  detail::check_same_dim(a.dim, b.dim);
  const int d = a.dim;
  BasicJet2<T> r(d, a.value * b.value);
  for (int i = 0; i < d; ++i) r.grad[i] = a.grad[i] * b.value + b.grad[i] * a.value;
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      const int k = packed_index(i, j, d);
      r.hess[k] = a.hess[k] * b.value + b.hess[k] * a.value + a.grad[i] * b.grad[j] + b.grad[i] * a.grad[j];
    }
  }
  return r;
}

/// Chain rule for a scalar function f with f(a) = f0, f'(a) = f1, f''(a) = f2.
template <class T>
BasicJet2<T> jet_chain(const BasicJet2<T>& a, const T& f0, const T& f1, const T& f2) {
  const int d = a.dim;
  BasicJet2<T> r(d, f0);
  for (int i = 0; i < d; ++i) r.grad[i] = f1 * a.grad[i];
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      const int k = packed_index(i, j, d);
      r.hess[k] = f1 * a.hess[k] + f2 * (a.grad[i] * a.grad[j]);
    }
  }
  return r;
}

template <class T>
BasicJet2<T> jet_tanh(const BasicJet2<T>& a) {
  using std::tanh;
  const T t = tanh(a.value);
  const T s1 = 1.0 - t * t;
  const T s2 = -2.0 * t * s1;
  return jet_chain(a, t, s1, s2);
}

template <class T>
BasicJet2<T> jet_sin(const BasicJet2<T>& a) {
  using std::cos;
  using std::sin;
  const T s = sin(a.value);
  return jet_chain(a, s, T(cos(a.value)), T(-s));
}

template <class T>
BasicJet2<T> jet_exp(const BasicJet2<T>& a) {
  using std::exp;
  const T e = exp(a.value);
  return jet_chain(a, e, e, e);
}

template <class T>
BasicJet2<T> jet_square(const BasicJet2<T>& a) {
  return jet_mul(a, a);
}

template <class T>
BasicJet2<T> operator+(const BasicJet2<T>& a, const BasicJet2<T>& b) { return jet_add(a, b); }
template <class T>
BasicJet2<T> operator-(const BasicJet2<T>& a, const BasicJet2<T>& b) { return jet_sub(a, b); }
template <class T>
BasicJet2<T> operator-(const BasicJet2<T>& a) { return jet_neg(a); }
template <class T>
BasicJet2<T> operator*(const BasicJet2<T>& a, const BasicJet2<T>& b) { return jet_mul(a, b); }
template <class T>
BasicJet2<T> operator*(double c, const BasicJet2<T>& a) { return jet_scale(a, c); }

/// Maximum with the lowest index winning ties.
inline double max_of(std::span<const double> xs) {
  require(!xs.empty(), ErrorKind::invalid_argument, "max_of: empty set");
  double best = xs[0];
  for (double x : xs.subspan(1)) {
    if (x > best) best = x;
  }
  return best;
}

/// |x| as max(x, -x); at x = 0 the first branch is taken.
template <class T>
T abs_of(const T& x) {
  const T pair[2] = {x, -x};
  return max_of(std::span<const T>(pair, 2));
}

inline double value_of(double x) noexcept { return x; }

}  // namespace vispinn
