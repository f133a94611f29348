// SPDX-License-Identifier: MIT
/**
 * @file network.hpp
 * @brief Feed-forward tanh networks with scalar output.
 *
 * The network with widths (n0, ..., nL) is
 *
 *   h1(x)  = W1 x + b1
 *   hl(x)  = Wl tanh(h(l-1)(x)) + bl,   l = 2..L
 *
 * and its output is hL(x), a scalar. Parameters are stored in one flat
 * vector in layer-major order: W1 (row-major), b1, W2 (row-major), b2, ...
 * That order is also the order of every parameter gradient in the library.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vispinn/error.hpp"
#include "vispinn/jet.hpp"

namespace vispinn {

/// Layer widths (n0, ..., nL) with n0 = d, nL = 1 and L >= 2.
class Architecture {
 public:
  Architecture() = default;
  explicit Architecture(std::vector<int> widths);

  const std::vector<int>& widths() const noexcept { return widths_; }
  int input_dim() const noexcept { return widths_.front(); }
  /// Number of affine layers L.
  int depth() const noexcept { return static_cast<int>(widths_.size()) - 1; }
  int fan_in(int layer) const noexcept { return widths_[layer]; }
  int fan_out(int layer) const noexcept { return widths_[layer + 1]; }

  std::size_t weight_offset(int layer) const noexcept { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const noexcept {
    return offsets_[layer] + static_cast<std::size_t>(fan_out(layer)) * fan_in(layer);
  }
  /// Sum over layers of n_l * n_(l-1) + n_l.
  std::size_t param_count() const noexcept { return offsets_.back(); }

  bool operator==(const Architecture& other) const { return widths_ == other.widths_; }

 private:
  std::vector<int> widths_;
  std::vector<std::size_t> offsets_{0};
};

/// Architecture plus flat parameter vector theta.
template <class T>
struct BasicMlpParams {
  Architecture arch;
  std::vector<T> theta;

  const T& weight(int layer, int row, int col) const {
    return theta[arch.weight_offset(layer) + static_cast<std::size_t>(row) * arch.fan_in(layer) + col];
  }
  const T& bias(int layer, int row) const { return theta[arch.bias_offset(layer) + row]; }
};

using MlpParams = BasicMlpParams<double>;

/// Glorot-uniform weights, zero biases; deterministic in `seed`.
MlpParams init(const Architecture& arch, std::uint64_t seed);

/// All-zero parameters.
MlpParams zero_params(const Architecture& arch);

namespace detail {
inline void check_input(const Architecture& arch, std::size_t n) {
  if (static_cast<int>(n) != arch.input_dim()) fail(ErrorKind::dimension_mismatch, "network input dimension mismatch");
}

/// Value channel of one affine layer. Shared by `forward` and `forward_jet`
/// so that both produce bit-identical values.
template <class T, class A>
void affine_values(const BasicMlpParams<T>& p, int layer, const std::vector<A>& in, std::vector<T>& out) {
  const int rows = p.arch.fan_out(layer);
  const int cols = p.arch.fan_in(layer);
  out.assign(rows, T{});
  for (int i = 0; i < rows; ++i) {
    T acc = T{};
    for (int j = 0; j < cols; ++j) acc = acc + p.weight(layer, i, j) * in[j];
    out[i] = acc + p.bias(layer, i);
  }
}
}  // namespace detail

/// Network output h^L(x).
template <class T>
T forward(const BasicMlpParams<T>& p, std::span<const double> x) {
  using std::tanh;
  detail::check_input(p.arch, x.size());
  std::vector<double> in(x.begin(), x.end());
  std::vector<T> z;
  detail::affine_values(p, 0, in, z);
  std::vector<T> a;
  for (int l = 1; l < p.arch.depth(); ++l) {
    a.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) a[i] = tanh(z[i]);
    detail::affine_values(p, l, a, z);
  }
  return z[0];
}

/// Output jet (h, Dh, D^2h) with respect to the input point.
template <class T>
BasicJet2<T> forward_jet(const BasicMlpParams<T>& p, std::span<const double> x) {
  using std::tanh;
  detail::check_input(p.arch, x.size());
  const int d = p.arch.input_dim();
  const int hs = packed_size(d);

  std::vector<double> in(x.begin(), x.end());
  std::vector<T> zval;
  detail::affine_values(p, 0, in, zval);
  std::vector<BasicJet2<T>> z(zval.size(), BasicJet2<T>(d));
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i].value = zval[i];
    for (int k = 0; k < d; ++k) z[i].grad[k] = p.weight(0, static_cast<int>(i), k);
  }

  std::vector<T> aval;
  std::vector<BasicJet2<T>> a;
  for (int l = 1; l < p.arch.depth(); ++l) {
    a.resize(z.size());
    aval.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      a[i] = jet_tanh(z[i]);
      aval[i] = a[i].value;
    }
    detail::affine_values(p, l, aval, zval);
    z.assign(zval.size(), BasicJet2<T>(d));
    for (int i = 0; i < p.arch.fan_out(l); ++i) {
      z[i].value = zval[i];
      for (int j = 0; j < p.arch.fan_in(l); ++j) {
        const T& w = p.weight(l, i, j);
        for (int k = 0; k < d; ++k) z[i].grad[k] = z[i].grad[k] + w * a[j].grad[k];
        for (int k = 0; k < hs; ++k) z[i].hess[k] = z[i].hess[k] + w * a[j].hess[k];
      }
    }
  }
  return z[0];
}

/// Jets of the network output at many points, stored channel-major:
/// channel 0 is the value, channels 1..d the gradient, then the packed
/// Hessian. With order 0 only the value channel is present.
struct JetBatch {
  int dim = 0;
  int order = 2;
  int count = 0;
  Eigen::RowVectorXd data;

  JetBatch() = default;
  JetBatch(int d, int ord, int n);

  int channels() const noexcept { return order == 0 ? 1 : 1 + dim + packed_size(dim); }
  double& at(int channel, int point) { return data[static_cast<Eigen::Index>(channel) * count + point]; }
  double at(int channel, int point) const { return data[static_cast<Eigen::Index>(channel) * count + point]; }
  double value(int p) const { return at(0, p); }

  Jet2 jet(int p) const;
  void set_jet(int p, const Jet2& j);
};

/// Batched jet evaluation with a hand-derived reverse pass for parameter
/// gradients. Forward values agree with `forward_jet` up to summation order.
class BatchEvaluator {
 public:
  BatchEvaluator(Architecture arch, int order);

  /// `points` is count x d, one point per row.
  const JetBatch& forward(const MlpParams& p, const Eigen::MatrixXd& points);

  /// Accumulates d(objective)/d(theta) into `grad` given the adjoint of the
  /// last forward output. Must follow a `forward` call with the same params.
  void backward(const MlpParams& p, const JetBatch& adjoint, std::span<double> grad);

 private:
  void activate(int layer);
  void activate_backward(int layer, Eigen::MatrixXd& adj);

  Architecture arch_;
  int order_;
  int count_ = 0;
  int channels_ = 1;
  std::vector<Eigen::MatrixXd> pre_;   // pre-activations per layer, n_l x (K m)
  std::vector<Eigen::MatrixXd> post_;  // activations of hidden layers, index l feeds layer l
  std::vector<Eigen::ArrayXXd> s1_, s2_, s3_;  // tanh derivatives at the value channel
  Eigen::MatrixXd points_;
  JetBatch out_;
  // Aligned copies of the parameters; maps into caller storage would make
  // vectorized reductions depend on the buffer address.
  std::vector<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w_, gw_;
  std::vector<Eigen::VectorXd> b_, gb_;
  // Backward scratch, kept across calls to avoid large per-step allocations.
  Eigen::MatrixXd zbar_, abar_, scratch_;
  Eigen::ArrayXXd tanh_;
};

/// Weight file: {"schema": "vispinn-net-v1", "activation": "tanh", "arch": [...],
/// "layers": [{"W": [[...]], "b": [...]}]}.
std::string params_to_json(const MlpParams& p);
MlpParams params_from_json(const std::string& text);
void save_params(const MlpParams& p, const std::filesystem::path& path);
MlpParams load_params(const std::filesystem::path& path);

}  // namespace vispinn
