// SPDX-License-Identifier: MIT
// Central-difference oracles shared by the unit tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace vispinn::testing {

using ScalarFn = std::function<double(std::span<const double>)>;

inline double fd_grad(const ScalarFn& f, std::vector<double> x, int i, double h = 1e-5) {
  const double xi = x[i];
  x[i] = xi + h;
  const double up = f(x);
  x[i] = xi - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

/// Second derivative from a 4-point stencil (i != j) or a 3-point one.
inline double fd_hess(const ScalarFn& f, std::vector<double> x, int i, int j, double h = 1e-4) {
  if (i == j) {
    const double xi = x[i];
    const double f0 = f(x);
    x[i] = xi + h;
    const double up = f(x);
    x[i] = xi - h;
    const double down = f(x);
    return (up - 2.0 * f0 + down) / (h * h);
  }
  auto at = [&](double si, double sj) {
    std::vector<double> y = x;
    y[i] += si * h;
    y[j] += sj * h;
    return f(y);
  };
  return (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h * h);
}

inline double rel_err(double approx, double truth) { return std::abs(approx - truth) / std::max(1.0, std::abs(truth)); }

}  // namespace vispinn::testing
