// SPDX-License-Identifier: MIT
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "vispinn/error.hpp"

namespace vispinn {

inline double median(std::vector<double> xs) {
  require(!xs.empty(), ErrorKind::invalid_argument, "median of empty set");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size() && xs.size() >= 2, ErrorKind::invalid_argument, "loglog_slope: need >= 2 pairs");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    require(xs[i] > 0 && ys[i] > 0, ErrorKind::invalid_argument, "loglog_slope: values must be positive");
    const double lx = std::log(xs[i]);
    const double ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  require(den > 0, ErrorKind::invalid_argument, "loglog_slope: x values must be distinct");
  return (n * sxy - sx * sy) / den;
}

/// Mean and standard error of the mean.
struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline MeanStderr mean_stderr(std::span<const double> xs) {
  require(!xs.empty(), ErrorKind::invalid_argument, "mean of empty set");
  const double n = static_cast<double>(xs.size());
  double s = 0;
  for (double x : xs) s += x;
  const double mean = s / n;
  if (xs.size() < 2) return {mean, 0.0};
  double v = 0;
  for (double x : xs) v += (x - mean) * (x - mean);
  v /= (n - 1);
  return {mean, std::sqrt(v / n)};
}

}  // namespace vispinn
