// SPDX-License-Identifier: MIT
#include "vispinn/network.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vispinn/rng.hpp"

namespace vispinn {

Architecture::Architecture(std::vector<int> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 3) fail(ErrorKind::invalid_argument, "architecture needs at least one hidden layer (L >= 2)");
  for (int w : widths_) {
    if (w < 1) fail(ErrorKind::invalid_argument, "architecture widths must be positive");
  }
  if (widths_.back() != 1) fail(ErrorKind::invalid_argument, "network output must be scalar");
  if (widths_.front() > kMaxJetDim) fail(ErrorKind::invalid_argument, "input dimension above 4 is not supported");
  for (int l = 0; l < depth(); ++l) {
    const std::size_t n = static_cast<std::size_t>(fan_out(l)) * fan_in(l) + fan_out(l);
    offsets_.push_back(offsets_.back() + n);
  }
}

MlpParams init(const Architecture& arch, std::uint64_t seed) {
  MlpParams p{arch, std::vector<double>(arch.param_count(), 0.0)};
  Rng rng(seed);
  for (int l = 0; l < arch.depth(); ++l) {
    const double bound = std::sqrt(6.0 / (arch.fan_in(l) + arch.fan_out(l)));
    const std::size_t n = static_cast<std::size_t>(arch.fan_out(l)) * arch.fan_in(l);
    for (std::size_t k = 0; k < n; ++k) p.theta[arch.weight_offset(l) + k] = rng.uniform(-bound, bound);
  }
  return p;
}

MlpParams zero_params(const Architecture& arch) { return MlpParams{arch, std::vector<double>(arch.param_count(), 0.0)}; }

// ---------------------------------------------------------------------------
// JetBatch

JetBatch::JetBatch(int d, int ord, int n) : dim(d), order(ord), count(n) {
  data = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(channels()) * n);
}

Jet2 JetBatch::jet(int p) const {
  Jet2 j(dim, at(0, p));
  if (order == 0) return j;
  for (int k = 0; k < dim; ++k) j.grad[k] = at(1 + k, p);
  for (int k = 0; k < packed_size(dim); ++k) j.hess[k] = at(1 + dim + k, p);
  return j;
}

void JetBatch::set_jet(int p, const Jet2& j) {
  at(0, p) = j.value;
  if (order == 0) return;
  for (int k = 0; k < dim; ++k) at(1 + k, p) = j.grad[k];
  for (int k = 0; k < packed_size(dim); ++k) at(1 + dim + k, p) = j.hess[k];
}

// ---------------------------------------------------------------------------
// BatchEvaluator

namespace {
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajor> weight_map(const Architecture& a, std::span<const double> theta, int l) {
  return {theta.data() + a.weight_offset(l), a.fan_out(l), a.fan_in(l)};
}
Eigen::Map<RowMajor> weight_map(const Architecture& a, std::span<double> theta, int l) {
  return {theta.data() + a.weight_offset(l), a.fan_out(l), a.fan_in(l)};
}
Eigen::Map<const Eigen::VectorXd> bias_map(const Architecture& a, std::span<const double> theta, int l) {
  return {theta.data() + a.bias_offset(l), a.fan_out(l)};
}
Eigen::Map<Eigen::VectorXd> bias_map(const Architecture& a, std::span<double> theta, int l) {
  return {theta.data() + a.bias_offset(l), a.fan_out(l)};
}
}  // namespace

BatchEvaluator::BatchEvaluator(Architecture arch, int order) : arch_(std::move(arch)), order_(order) {
  require(order == 0 || order == 2, ErrorKind::invalid_argument, "BatchEvaluator order must be 0 or 2");
  const int d = arch_.input_dim();
  channels_ = order_ == 0 ? 1 : 1 + d + packed_size(d);
  pre_.resize(arch_.depth());
  post_.resize(arch_.depth());
  s1_.resize(arch_.depth());
  s2_.resize(arch_.depth());
  s3_.resize(arch_.depth());
  w_.resize(arch_.depth());
  gw_.resize(arch_.depth());
  b_.resize(arch_.depth());
  gb_.resize(arch_.depth());
}

const JetBatch& BatchEvaluator::forward(const MlpParams& p, const Eigen::MatrixXd& points) {
  if (!(p.arch == arch_)) fail(ErrorKind::dimension_mismatch, "BatchEvaluator: architecture mismatch");
  const int d = arch_.input_dim();
  if (points.cols() != d) fail(ErrorKind::dimension_mismatch, "BatchEvaluator: point dimension mismatch");
  const int m = static_cast<int>(points.rows());
  count_ = m;
  points_ = points;
  const std::span<const double> theta(p.theta);
  for (int l = 0; l < arch_.depth(); ++l) {
    w_[l] = weight_map(arch_, theta, l);
    b_[l] = bias_map(arch_, theta, l);
  }

  // First layer: value = W x + b, gradient channel k = column k of W, Hessian 0.
  const auto& w0 = w_[0];
  Eigen::MatrixXd& z0 = pre_[0];
  z0.setZero(arch_.fan_out(0), static_cast<Eigen::Index>(channels_) * m);
  z0.leftCols(m).noalias() = w0 * points.transpose();
  z0.leftCols(m).colwise() += b_[0];
  if (order_ == 2) {
    for (int k = 0; k < d; ++k) z0.middleCols(static_cast<Eigen::Index>(1 + k) * m, m).colwise() = w0.col(k);
  }

  for (int l = 1; l < arch_.depth(); ++l) {
    activate(l);
    Eigen::MatrixXd& z = pre_[l];
    z.noalias() = w_[l] * post_[l];
    z.leftCols(m).colwise() += b_[l];
  }

  if (out_.count != m || out_.order != order_) out_ = JetBatch(d, order_, m);
  out_.data = pre_[arch_.depth() - 1].row(0);
  return out_;
}

void BatchEvaluator::activate(int l) {
  const int m = count_;
  const int d = arch_.input_dim();
  const Eigen::MatrixXd& z = pre_[l - 1];
  Eigen::MatrixXd& a = post_[l];
  a.resize(z.rows(), z.cols());

  // tanh through exp: Eigen vectorizes exp for double but not tanh.
  tanh_ = 1.0 - 2.0 / ((2.0 * z.leftCols(m).array()).exp() + 1.0);
  const auto& t = tanh_;
  s1_[l] = 1.0 - t.square();
  s2_[l] = -2.0 * t * s1_[l];
  s3_[l] = s1_[l] * (6.0 * t.square() - 2.0);
  a.leftCols(m) = t.matrix();
  if (order_ == 0) return;

  const auto& s1 = s1_[l];
  const auto& s2 = s2_[l];
  auto block = [&](const Eigen::MatrixXd& mat, int c) { return mat.middleCols(static_cast<Eigen::Index>(c) * m, m).array(); };
  for (int k = 0; k < d; ++k) a.middleCols(static_cast<Eigen::Index>(1 + k) * m, m).array() = s1 * block(z, 1 + k);
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      const int c = 1 + d + packed_index(i, j, d);
      a.middleCols(static_cast<Eigen::Index>(c) * m, m).array() =
          s1 * block(z, c) + s2 * block(z, 1 + i) * block(z, 1 + j);
    }
  }
}

void BatchEvaluator::activate_backward(int l, Eigen::MatrixXd& adj) {
  // On entry `adj` holds adjoints of post_[l]; on exit adjoints of pre_[l-1].
  const int m = count_;
  const int d = arch_.input_dim();
  const Eigen::MatrixXd& z = pre_[l - 1];
  const auto& s1 = s1_[l];
  const auto& s2 = s2_[l];
  const auto& s3 = s3_[l];
  auto zb = [&](int c) { return z.middleCols(static_cast<Eigen::Index>(c) * m, m).array(); };

  if (order_ == 0) {
    adj.leftCols(m).array() *= s1;
    return;
  }

  Eigen::MatrixXd& out = scratch_;
  out.resize(adj.rows(), adj.cols());
  auto ab = [&](int c) { return adj.middleCols(static_cast<Eigen::Index>(c) * m, m).array(); };
  auto ob = [&](int c) { return out.middleCols(static_cast<Eigen::Index>(c) * m, m).array(); };

  ob(0) = s1 * ab(0);
  for (int k = 0; k < d; ++k) {
    ob(0) += s2 * ab(1 + k) * zb(1 + k);
    ob(1 + k) = s1 * ab(1 + k);
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      const int c = 1 + d + packed_index(i, j, d);
      const auto h_adj = ab(c);
      ob(0) += h_adj * (s2 * zb(c) + s3 * zb(1 + i) * zb(1 + j));
      ob(1 + i) += s2 * h_adj * zb(1 + j);
      ob(1 + j) += s2 * h_adj * zb(1 + i);
      ob(c) = s1 * h_adj;
    }
  }
  adj.swap(out);
}

void BatchEvaluator::backward(const MlpParams& p, const JetBatch& adjoint, std::span<double> grad) {
  require(adjoint.count == count_ && adjoint.order == order_, ErrorKind::dimension_mismatch,
          "BatchEvaluator::backward: adjoint shape mismatch");
  require(grad.size() == arch_.param_count(), ErrorKind::dimension_mismatch, "BatchEvaluator::backward: gradient size");
  const int m = count_;
  const int d = arch_.input_dim();
  (void)p;

  Eigen::MatrixXd& zbar = zbar_;
  zbar = adjoint.data;
  for (int l = arch_.depth() - 1; l >= 1; --l) {
    gw_[l].noalias() = zbar * post_[l].transpose();
    gb_[l] = zbar.leftCols(m).rowwise().sum();
    abar_.noalias() = w_[l].transpose() * zbar;
    activate_backward(l, abar_);
    zbar.swap(abar_);
  }
  gw_[0].noalias() = zbar.leftCols(m) * points_;
  if (order_ == 2) {
    for (int k = 0; k < d; ++k) gw_[0].col(k) += zbar.middleCols(static_cast<Eigen::Index>(1 + k) * m, m).rowwise().sum();
  }
  gb_[0] = zbar.leftCols(m).rowwise().sum();
  for (int l = 0; l < arch_.depth(); ++l) {
    weight_map(arch_, grad, l) += gw_[l];
    bias_map(arch_, grad, l) += gb_[l];
  }
}

// ---------------------------------------------------------------------------
// Persistence

std::string params_to_json(const MlpParams& p) {
  nlohmann::ordered_json j;
  j["schema"] = "vispinn-net-v1";
  j["activation"] = "tanh";
  j["arch"] = p.arch.widths();
  auto layers = nlohmann::ordered_json::array();
  for (int l = 0; l < p.arch.depth(); ++l) {
    auto w = nlohmann::ordered_json::array();
    for (int i = 0; i < p.arch.fan_out(l); ++i) {
      auto row = nlohmann::ordered_json::array();
      for (int k = 0; k < p.arch.fan_in(l); ++k) row.push_back(p.weight(l, i, k));
      w.push_back(std::move(row));
    }
    auto b = nlohmann::ordered_json::array();
    for (int i = 0; i < p.arch.fan_out(l); ++i) b.push_back(p.bias(l, i));
    layers.push_back({{"W", std::move(w)}, {"b", std::move(b)}});
  }
  j["layers"] = std::move(layers);
  return j.dump(2);
}

MlpParams params_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::io, std::string("weight file: ") + e.what());
  }
  if (!j.contains("schema") || j["schema"] != "vispinn-net-v1") fail(ErrorKind::io, "weight file: unknown schema");
  if (j.value("activation", "") != "tanh") fail(ErrorKind::io, "weight file: unsupported activation");
  try {
    Architecture arch(j.at("arch").get<std::vector<int>>());
    MlpParams p = zero_params(arch);
    const auto& layers = j.at("layers");
    if (static_cast<int>(layers.size()) != arch.depth()) fail(ErrorKind::io, "weight file: layer count mismatch");
    for (int l = 0; l < arch.depth(); ++l) {
      const auto w = layers[l].at("W").get<std::vector<std::vector<double>>>();
      const auto b = layers[l].at("b").get<std::vector<double>>();
      if (static_cast<int>(w.size()) != arch.fan_out(l) || static_cast<int>(b.size()) != arch.fan_out(l)) {
        fail(ErrorKind::io, "weight file: layer shape mismatch");
      }
      for (int i = 0; i < arch.fan_out(l); ++i) {
        if (static_cast<int>(w[i].size()) != arch.fan_in(l)) fail(ErrorKind::io, "weight file: layer shape mismatch");
        for (int k = 0; k < arch.fan_in(l); ++k) {
          p.theta[arch.weight_offset(l) + static_cast<std::size_t>(i) * arch.fan_in(l) + k] = w[i][k];
        }
        p.theta[arch.bias_offset(l) + i] = b[i];
      }
    }
    for (double v : p.theta) {
      if (!std::isfinite(v)) fail(ErrorKind::io, "weight file: non-finite parameter");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::io, std::string("weight file: ") + e.what());
  }
}

void save_params(const MlpParams& p, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << params_to_json(p) << '\n';
}

MlpParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return params_from_json(ss.str());
}

}  // namespace vispinn
