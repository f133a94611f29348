// SPDX-License-Identifier: MIT
/**
 * @file training.hpp
 * @brief Full-batch minimization of the Hoelder-regularized empirical loss.
 */
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vispinn/loss.hpp"

namespace vispinn {

enum class Optimizer { adam, gradient_descent };

Optimizer parse_optimizer(const std::string& name);
std::string to_string(Optimizer opt);

struct TrainConfig {
  Optimizer optimizer = Optimizer::adam;
  double step_size = 1e-3;
  int steps = 1000;
  std::uint64_t seed = 0;
  double kappa = 1.0;
  double alpha = 1.0;
  double temperature = kDefaultTemperature;
  double epsilon = 0.0;
  bool deterministic = true;
  int log_every = 100;
  bool gradient_check = true;
  std::size_t pair_budget = kDefaultPairBudget;
  std::optional<MlpParams> initial;  // overrides seeded initialization
};

struct HistoryRow {
  int step = 0;
  double objective = 0.0;
  double running_min = 0.0;
  LossBreakdown loss;
};

struct TrainReport {
  MlpParams params;  // best-seen iterate
  std::vector<HistoryRow> history;
  RegSchedule schedule;
  int best_step = 0;
  int steps_run = 0;
  double best_objective = 0.0;          // min of the smooth training objective
  double final_pinn_loss = 0.0;         // at the best iterate
  double final_regularized_loss = 0.0;  // at the best iterate, Hoelder terms in hard mode
  LossBreakdown final_hard;
  std::optional<double> c0_error;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8) or plain gradient descent on the
/// smooth-mode regularized loss. Returns the best-seen parameters. Throws
/// `training_failure` on a non-finite loss or on divergence (loss above
/// 1e6 times the initial loss), naming the step.
TrainReport train(const OperatorSpec& spec, const Architecture& arch, const TrainingSet& set, const LossWeights& w,
                  const TrainConfig& cfg);

/// report.final_regularized_loss <= baseline + eps.
bool epsilon_accept(const TrainReport& report, double baseline, double eps);

/// max over the probe grid of |h(x) - reference(x)|.
double c0_error(const PointFn& h, const PointFn& reference, const Domain& domain, int resolution);
double c0_error(const MlpParams& h, const PointFn& reference, const Domain& domain, int resolution);

/// Central-difference check of the analytic gradient of the training
/// objective on `coords` seeded coordinates. Returns the worst relative
/// error with denominator max(1, |analytic|).
double gradient_self_check(LossEvaluator& eval, const MlpParams& p, int coords, std::uint64_t seed);

void write_history_csv(std::ostream& out, const TrainReport& report);
/// JSON report; wall-clock time is left out when `deterministic` is set.
std::string report_to_json(const TrainReport& report, const std::string& operator_name, const TrainingSet& set,
                           const LossWeights& w, bool deterministic);

}  // namespace vispinn
