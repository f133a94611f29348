// SPDX-License-Identifier: MIT
#include "vispinn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "vispinn/csv.hpp"
#include "vispinn/rng.hpp"

namespace vispinn {

Optimizer parse_optimizer(const std::string& name) {
  if (name == "adam") return Optimizer::adam;
  if (name == "gradient-descent" || name == "gd") return Optimizer::gradient_descent;
  fail(ErrorKind::config, "unknown optimizer '" + name + "'");
}

std::string to_string(Optimizer opt) { return opt == Optimizer::adam ? "adam" : "gradient-descent"; }

double gradient_self_check(LossEvaluator& eval, const MlpParams& p, int coords, std::uint64_t seed) {
  std::vector<double> grad(p.theta.size());
  eval.evaluate(p, grad);
  Rng rng(seed);
  MlpParams q = p;
  double worst = 0.0;
  for (int c = 0; c < coords; ++c) {
    const auto k = static_cast<std::size_t>(rng.index(p.theta.size()));
    const double h = 1e-6 * std::max(1.0, std::abs(p.theta[k]));
    q.theta[k] = p.theta[k] + h;
    const double up = eval.evaluate(q).total();
    q.theta[k] = p.theta[k] - h;
    const double down = eval.evaluate(q).total();
    q.theta[k] = p.theta[k];
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - grad[k]) / std::max(1.0, std::abs(grad[k])));
  }
  return worst;
}

TrainReport train(const OperatorSpec& spec, const Architecture& arch, const TrainingSet& set, const LossWeights& w,
                  const TrainConfig& cfg) {
  require(cfg.step_size > 0.0, ErrorKind::invalid_argument, "train: step size must be positive");
  require(cfg.steps >= 0, ErrorKind::invalid_argument, "train: step count must be nonnegative");
  require(cfg.epsilon >= 0.0, ErrorKind::invalid_argument, "train: epsilon must be nonnegative");
  require(arch.input_dim() == set.domain.dim, ErrorKind::dimension_mismatch, "train: architecture / domain mismatch");
  const auto t0 = std::chrono::steady_clock::now();

  TrainReport rep;
  rep.seed = cfg.seed;
  rep.schedule = lambda_hat(w, set.m_r(), set.m_b(), set.domain.dim, cfg.alpha, density_constants(set.domain), cfg.kappa);

  MlpParams params = cfg.initial ? *cfg.initial : init(arch, mix_seed(cfg.seed, 2));
  require(params.arch == arch, ErrorKind::dimension_mismatch, "train: initial parameters do not match architecture");

  LossOptions smooth;
  smooth.mode = HolderMode::smooth;
  smooth.pair_budget = cfg.pair_budget;
  smooth.pair_seed = mix_seed(cfg.seed, 3);
  smooth.tau = cfg.temperature;
  LossEvaluator eval(spec, set, w, rep.schedule, smooth, arch);

  if (cfg.gradient_check && cfg.steps > 0) {
    const double err = gradient_self_check(eval, params, 10, mix_seed(cfg.seed, 4));
    if (!(err <= 1e-4)) {
      fail(ErrorKind::training_failure, fmt::format("gradient self-check failed: relative error {:.3g}", err));
    }
  }

  const std::size_t n = params.theta.size();
  std::vector<double> grad(n), m1(n, 0.0), m2(n, 0.0);
  constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  double b1t = 1.0, b2t = 1.0;
  double initial = 0.0;
  double best = std::numeric_limits<double>::infinity();
  MlpParams best_params = params;
  const int log_every = std::max(1, cfg.log_every);

  for (int step = 0; step <= cfg.steps; ++step) {
    const bool last = step == cfg.steps;
    const LossBreakdown b = eval.evaluate(params, last ? std::span<double>() : std::span<double>(grad));
    const double obj = b.total();
    if (!std::isfinite(obj)) fail(ErrorKind::training_failure, fmt::format("non-finite loss at step {}", step));
    if (step == 0) initial = obj;
    if (initial > 0.0 && obj > 1e6 * initial) {
      fail(ErrorKind::training_failure, fmt::format("divergence at step {}: loss {:.6g}", step, obj));
    }
    if (obj < best) {
      best = obj;
      best_params = params;
      rep.best_step = step;
    }
    if (step % log_every == 0 || last) rep.history.push_back({step, obj, best, b});
    if (last) break;

    for (double g : grad) {
      if (!std::isfinite(g)) fail(ErrorKind::training_failure, fmt::format("non-finite gradient at step {}", step));
    }
    if (cfg.optimizer == Optimizer::adam) {
      b1t *= beta1;
      b2t *= beta2;
      for (std::size_t k = 0; k < n; ++k) {
        m1[k] = beta1 * m1[k] + (1.0 - beta1) * grad[k];
        m2[k] = beta2 * m2[k] + (1.0 - beta2) * grad[k] * grad[k];
        const double mhat = m1[k] / (1.0 - b1t);
        const double vhat = m2[k] / (1.0 - b2t);
        params.theta[k] -= cfg.step_size * mhat / (std::sqrt(vhat) + adam_eps);
      }
    } else {
      for (std::size_t k = 0; k < n; ++k) params.theta[k] -= cfg.step_size * grad[k];
    }
  }
  rep.steps_run = cfg.steps;
  rep.best_objective = best;
  rep.params = std::move(best_params);

  // Verification quantities are recomputed with hard maxima.
  LossOptions hard = smooth;
  hard.mode = HolderMode::hard;
  LossEvaluator hard_eval(spec, set, w, rep.schedule, hard, arch);
  rep.final_hard = hard_eval.evaluate(rep.params);
  rep.final_pinn_loss = rep.final_hard.pinn();
  rep.final_regularized_loss = rep.final_hard.total();
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

bool epsilon_accept(const TrainReport& report, double baseline, double eps) {
  return report.final_regularized_loss <= baseline + eps;
}

double c0_error(const PointFn& h, const PointFn& reference, const Domain& domain, int resolution) {
  const PointSet grid = probe_grid(domain, resolution);
  double worst = 0.0;
  std::vector<double> x(domain.dim);
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    for (int k = 0; k < domain.dim; ++k) x[k] = grid(i, k);
    worst = std::max(worst, std::abs(h(x) - reference(x)));
  }
  return worst;
}

double c0_error(const MlpParams& h, const PointFn& reference, const Domain& domain, int resolution) {
  const PointSet grid = probe_grid(domain, resolution);
  BatchEvaluator ev(h.arch, 0);
  const JetBatch& out = ev.forward(h, grid);
  double worst = 0.0;
  std::vector<double> x(domain.dim);
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    for (int k = 0; k < domain.dim; ++k) x[k] = grid(i, k);
    worst = std::max(worst, std::abs(out.value(static_cast<int>(i)) - reference(x)));
  }
  return worst;
}

void write_history_csv(std::ostream& out, const TrainReport& report) {
  write_csv_metadata(out, "loss-history", report.seed);
  out << "step,loss_pinn,loss_reg_r,loss_reg_b,lambda_hat_r,lambda_hat_b,C_m,objective,running_min,holder_r,holder_b\n";
  for (const auto& h : report.history) {
    out << h.step << ',' << format_double(h.loss.pinn()) << ',' << format_double(h.loss.reg_r) << ','
        << format_double(h.loss.reg_b) << ',' << format_double(report.schedule.hat_r) << ','
        << format_double(report.schedule.hat_b) << ',' << format_double(report.schedule.C_m) << ','
        << format_double(h.objective) << ',' << format_double(h.running_min) << ',' << format_double(h.loss.holder_r)
        << ',' << format_double(h.loss.holder_b) << '\n';
  }
}

std::string report_to_json(const TrainReport& report, const std::string& operator_name, const TrainingSet& set,
                           const LossWeights& w, bool deterministic) {
  nlohmann::ordered_json j;
  j["schema"] = "vispinn-report-v1";
  j["version"] = std::string(kVersion);
  j["operator"] = operator_name;
  j["arch"] = report.params.arch.widths();
  j["seed"] = report.seed;
  j["m_r"] = set.m_r();
  j["m_b"] = set.m_b();
  j["lambda"] = {{"r", w.r}, {"b", w.b}};
  j["schedule"] = {{"alpha", report.schedule.alpha},
                   {"kappa", report.schedule.kappa},
                   {"lambda_hat_r", report.schedule.hat_r},
                   {"lambda_hat_b", report.schedule.hat_b},
                   {"C_m", report.schedule.C_m}};
  const DensityConstants k = density_constants(set.domain);
  j["density_constants"] = {{"c_r", k.c_r}, {"C_r", k.C_r}, {"c_b", k.c_b}, {"C_b", k.C_b}};
  j["steps"] = report.steps_run;
  j["best_step"] = report.best_step;
  j["best_objective"] = report.best_objective;
  j["final_pinn_loss"] = report.final_pinn_loss;
  j["final_regularized_loss"] = report.final_regularized_loss;
  j["holder_r"] = report.final_hard.holder_r;
  j["holder_b"] = report.final_hard.holder_b;
  j["c0_error"] = report.c0_error ? nlohmann::ordered_json(*report.c0_error) : nlohmann::ordered_json(nullptr);
  if (!deterministic) j["wall_seconds"] = report.wall_seconds;
  auto trace = nlohmann::ordered_json::array();
  for (const auto& h : report.history) {
    trace.push_back({{"step", h.step}, {"holder_r", h.loss.holder_r}, {"holder_b", h.loss.holder_b}});
  }
  j["holder_trace"] = std::move(trace);
  return j.dump(2);
}

}  // namespace vispinn
