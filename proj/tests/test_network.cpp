// SPDX-License-Identifier: MIT
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "fd.hpp"
#include "oracles.hpp"
#include "vispinn/autodiff.hpp"
#include "vispinn/network.hpp"
#include "vispinn/rng.hpp"

using namespace vispinn;
using vispinn::testing::fd_grad;
using vispinn::testing::fd_hess;
using vispinn::testing::rel_err;
using namespace vispinn::testing;

TEST_SUITE("network") {
  TEST_CASE("architecture validation") {
    CHECK_THROWS_AS(Architecture({2, 1}), Error);
    CHECK_THROWS_AS(Architecture({2, 0, 1}), Error);
    CHECK_THROWS_AS(Architecture({2, 4, 2}), Error);
    CHECK_THROWS_AS(Architecture({5, 4, 1}), Error);
    const Architecture a({2, 16, 16, 1});
    CHECK(a.param_count() == (16 * 2 + 16) + (16 * 16 + 16) + (1 * 16 + 1));
    CHECK(init(a, 3).theta.size() == a.param_count());
  }

  TEST_CASE("initialization") {
    const Architecture a({2, 16, 16, 1});
    const MlpParams p = init(a, 11), q = init(a, 11), r = init(a, 12);
    CHECK(p.theta == q.theta);
    CHECK(p.theta != r.theta);
    for (int l = 0; l < a.depth(); ++l) {
      const double bound = std::sqrt(6.0 / (a.fan_in(l) + a.fan_out(l)));
      for (int i = 0; i < a.fan_out(l); ++i) {
        CHECK(p.bias(l, i) == 0.0);
        for (int j = 0; j < a.fan_in(l); ++j) CHECK(std::abs(p.weight(l, i, j)) < bound);
      }
    }
  }

  TEST_CASE("trivial networks") {
    const Architecture a({2, 5, 1});
    const std::vector<double> x{0.3, -0.2};
    CHECK(forward(zero_params(a), x) == 0.0);
    MlpParams p = init(a, 4);
    for (int j = 0; j < 5; ++j) p.theta[a.weight_offset(1) + j] = 0.0;
    p.theta[a.bias_offset(1)] = 0.75;
    CHECK(forward(p, x) == 0.75);
    CHECK(forward(p, std::vector<double>{0.9, 0.1}) == 0.75);
  }

  TEST_CASE("forward matches an independent matrix implementation") {
    for (std::uint64_t s = 0; s < 30; ++s) {
      Rng rng(mix_seed(60, s));
      const Architecture a = random_arch(rng);
      const MlpParams p = init(a, mix_seed(61, s));
      std::vector<double> x(a.input_dim());
      for (auto& v : x) v = rng.uniform(-1.0, 1.0);
      CHECK(forward(p, x) == doctest::Approx(matrix_forward(p, x)).epsilon(1e-12));
    }
  }

  TEST_CASE("value channel equals forward exactly") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      Rng rng(mix_seed(62, s));
      const Architecture a = random_arch(rng);
      const MlpParams p = init(a, s);
      std::vector<double> x(a.input_dim());
      for (auto& v : x) v = rng.uniform(0.0, 1.0);
      CHECK(forward_jet(p, x).value == forward(p, x));
    }
  }

  TEST_CASE("small weights give a nearly linear network") {
    MlpParams p = init(Architecture({2, 8, 8, 1}), 9);
    for (auto& t : p.theta) t *= 1e-3;
    const Jet2 j = forward_jet(p, std::vector<double>{0.4, 0.6});
    for (int k = 0; k < j.hess_size(); ++k) CHECK(std::abs(j.hess[k]) < 1e-8);
  }

  TEST_CASE("input jets of 50 networks match finite differences") {
    for (std::uint64_t s = 0; s < 50; ++s) {
      Rng rng(mix_seed(63, s));
      const Architecture a = random_arch(rng);
      const MlpParams p = init(a, mix_seed(64, s));
      std::vector<double> x(a.input_dim());
      for (auto& v : x) v = rng.uniform(0.0, 1.0);
      auto f = [&](std::span<const double> y) { return forward(p, y); };
      const Jet2 j = forward_jet(p, x);
      for (int i = 0; i < a.input_dim(); ++i) {
        CHECK_MESSAGE(rel_err(j.grad[i], fd_grad(f, x, i)) < 1e-6, "net ", s);
        for (int k = i; k < a.input_dim(); ++k) CHECK_MESSAGE(rel_err(j.h(i, k), fd_hess(f, x, i, k)) < 1e-6, "net ", s);
      }
    }
  }

  TEST_CASE("batched jets agree with pointwise jets") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      Rng rng(mix_seed(65, s));
      const Architecture a = random_arch(rng);
      const MlpParams p = init(a, s);
      Eigen::MatrixXd pts(7, a.input_dim());
      for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = rng.uniform(0.0, 1.0);
      BatchEvaluator ev(a, 2);
      const JetBatch& out = ev.forward(p, pts);
      for (int i = 0; i < 7; ++i) {
        std::vector<double> x(a.input_dim());
        for (int k = 0; k < a.input_dim(); ++k) x[k] = pts(i, k);
        const Jet2 ref = forward_jet(p, x), got = out.jet(i);
        CHECK(got.value == doctest::Approx(ref.value).epsilon(1e-13));
        for (int k = 0; k < a.input_dim(); ++k) CHECK(got.grad[k] == doctest::Approx(ref.grad[k]).epsilon(1e-12));
        for (int k = 0; k < ref.hess_size(); ++k) CHECK(got.hess[k] == doctest::Approx(ref.hess[k]).epsilon(1e-11));
      }
    }
  }

  TEST_CASE("batched reverse pass agrees with the tape") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      Rng rng(mix_seed(66, s));
      const Architecture a = random_arch(rng);
      const MlpParams p = init(a, s);
      const int m = 5, d = a.input_dim(), K = 1 + d + packed_size(d);
      Eigen::MatrixXd pts(m, d);
      for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = rng.uniform(0.0, 1.0);
      // objective: sum over points and channels of c * channel
      JetBatch adj(d, 2, m);
      for (Eigen::Index i = 0; i < adj.data.size(); ++i) adj.data[i] = rng.uniform(-1.0, 1.0);

      BatchEvaluator ev(a, 2);
      ev.forward(p, pts);
      std::vector<double> fast(p.theta.size(), 0.0);
      ev.backward(p, adj, fast);

      const ParamGradient slow = param_gradient(
          [&](const VarParams& q) {
            ad::Var acc = 0.0;
            for (int i = 0; i < m; ++i) {
              std::vector<double> x(d);
              for (int k = 0; k < d; ++k) x[k] = pts(i, k);
              const VarJet j = forward_jet(q, x);
              acc += adj.at(0, i) * j.value;
              for (int k = 0; k < d; ++k) acc += adj.at(1 + k, i) * j.grad[k];
              for (int k = 0; k < K - 1 - d; ++k) acc += adj.at(1 + d + k, i) * j.hess[k];
            }
            return acc;
          },
          p);
      for (std::size_t k = 0; k < fast.size(); ++k) CHECK(fast[k] == doctest::Approx(slow.values[k]).epsilon(1e-10));
    }
  }

  TEST_CASE("weights json round trip and rejection") {
    const MlpParams p = init(Architecture({2, 6, 3, 1}), 21);
    const MlpParams q = params_from_json(params_to_json(p));
    CHECK(q.arch == p.arch);
    CHECK(q.theta == p.theta);

    const auto path = std::filesystem::temp_directory_path() / "vispinn_test_weights.json";
    save_params(p, path);
    CHECK(load_params(path).theta == p.theta);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(params_from_json("{\"schema\": \"other\"}"), Error);
    std::string text = params_to_json(p);
    const auto pos = text.find("tanh");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 4, "relu");
    CHECK_THROWS_AS(params_from_json(text), Error);
    CHECK_THROWS_AS(params_from_json("not json"), Error);
  }

  TEST_CASE("input dimension is checked") {
    const MlpParams p = init(Architecture({2, 3, 1}), 1);
    CHECK_THROWS_AS(forward(p, std::vector<double>{0.1}), Error);
  }
}
