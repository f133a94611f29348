// SPDX-License-Identifier: MIT
/**
 * @file loss.hpp
 * @brief Empirical and Monte Carlo PINN losses, sampled Hoelder seminorms,
 *        the data-dependent regularization schedule, the Hoelder-regularized
 *        loss and the generalization-bound checker.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "vispinn/network.hpp"
#include "vispinn/operators.hpp"
#include "vispinn/sampling.hpp"

namespace vispinn {

/// lambda = (lambda_r, lambda_b); fixed, independent of the sample size.
struct LossWeights {
  double r = 1.0;
  double b = 1.0;
};

/// lambda-hat^R and the constant C_m, plus the multiplier kappa >= 1 that
/// turns lambda-hat^R into the weights actually used.
struct RegSchedule {
  double alpha = 1.0;
  double hat_r = 0.0;
  double hat_b = 0.0;
  double C_m = 1.0;
  double kappa = 1.0;

  double lambda_r() const noexcept { return kappa * hat_r; }
  double lambda_b() const noexcept { return kappa * hat_b; }
};

RegSchedule lambda_hat(const LossWeights& w, int m_r, int m_b, int d, double alpha, const DensityConstants& k,
                       double kappa = 1.0);

/// A schedule with all regularization weights zero.
RegSchedule no_regularization(double alpha = 1.0);

// ---------------------------------------------------------------------------
// Hoelder seminorm estimation

enum class HolderMode { hard, smooth };

inline constexpr std::size_t kDefaultPairBudget = 4096;
inline constexpr double kDefaultTemperature = 0.01;

/// Point pairs over which difference quotients are taken, with the
/// precomputed denominators ||x_i - x_j||^(2 alpha).
struct PairSet {
  std::vector<std::pair<int, int>> pairs;
  std::vector<double> denom;
  std::size_t size() const noexcept { return pairs.size(); }
};

/// All pairs when C(n,2) <= budget (or budget == 0), otherwise `budget`
/// seeded uniform pairs plus every point's two nearest-neighbour pairs.
/// Pairs closer than 1e-14 are dropped; throws if none remain.
PairSet build_pair_set(const PointSet& points, double alpha, std::size_t budget, std::uint64_t seed);

struct HolderEstimate {
  double value = 0.0;  // squared seminorm estimate
  std::size_t pairs = 0;
  int arg_i = -1;
  int arg_j = -1;
};

/// Hard mode: max over pairs of (|v_i - v_j| / ||x_i - x_j||^alpha)^2.
/// Smooth mode: tau * log(sum exp(q / tau)) of the same squared ratios.
/// If `dvalues` is non-empty, adds scale * d(estimate)/d(values) into it.
HolderEstimate holder_on_pairs(std::span<const double> values, const PairSet& pairs, HolderMode mode, double tau,
                               std::span<double> dvalues = {}, double scale = 1.0);

HolderEstimate holder_seminorm_sq(std::span<const double> values, const PointSet& points, double alpha,
                                  HolderMode mode, std::size_t pair_budget = kDefaultPairBudget,
                                  std::uint64_t seed = 0, double tau = kDefaultTemperature);

// ---------------------------------------------------------------------------
// Trial functions and losses

/// A candidate solution h: either a network or a closed-form jet function.
class Trial {
 public:
  static Trial network(MlpParams params);
  static Trial field(JetFn f, int dim);

  int dim() const noexcept { return dim_; }
  JetBatch jets(const PointSet& points, int order) const;
  const MlpParams* params() const noexcept { return params_ ? &*params_ : nullptr; }

 private:
  int dim_ = 1;
  std::optional<MlpParams> params_;
  JetFn field_;
};

struct LossOptions {
  HolderMode mode = HolderMode::smooth;
  std::size_t pair_budget = kDefaultPairBudget;  // 0 = all pairs
  std::uint64_t pair_seed = 0;
  double tau = kDefaultTemperature;
};

struct LossBreakdown {
  double pinn_r = 0.0;    // (lambda_r / m_r) sum F[h]^2
  double pinn_b = 0.0;    // (lambda_b / m_b) sum (h - g)^2
  double holder_r = 0.0;  // seminorm^2 estimate of F[h] over T_r
  double holder_b = 0.0;  // seminorm^2 estimate of h over T_b (d >= 2)
  double reg_r = 0.0;     // lambda^R_r * holder_r
  double reg_b = 0.0;     // lambda^R_b * holder_b
  double lambda_r = 0.0;
  double lambda_b = 0.0;

  double pinn() const noexcept { return pinn_r + pinn_b; }
  double total() const noexcept { return pinn() + reg_r + reg_b; }
};

double empirical_pinn_loss(const Trial& h, const OperatorSpec& spec, const TrainingSet& set, const LossWeights& w);

LossBreakdown loss_breakdown(const Trial& h, const OperatorSpec& spec, const TrainingSet& set, const LossWeights& w,
                             const RegSchedule& sched, const LossOptions& opt);

/// Pinn loss + lambda^R_r [F[h]]^2 + (d >= 2 ? lambda^R_b [h]^2 : 0).
double regularized_loss(const Trial& h, const OperatorSpec& spec, const TrainingSet& set, const LossWeights& w,
                        const RegSchedule& sched, const LossOptions& opt);

/// Training-time evaluator of the regularized loss of a network and its
/// exact parameter gradient. Pair sets are built once at construction.
class LossEvaluator {
 public:
  LossEvaluator(const OperatorSpec& spec, const TrainingSet& set, const LossWeights& w, const RegSchedule& sched,
                const LossOptions& opt, const Architecture& arch);

  /// If `grad` is non-empty it is overwritten with d(total)/d(theta).
  LossBreakdown evaluate(const MlpParams& p, std::span<double> grad = {});

  const LossOptions& options() const noexcept { return opt_; }

 private:
  OperatorSpec spec_;
  TrainingSet set_;
  LossWeights w_;
  RegSchedule sched_;
  LossOptions opt_;
  PairSet interior_pairs_;
  std::optional<PairSet> boundary_pairs_;
  std::vector<double> g_;
  BatchEvaluator interior_eval_;
  BatchEvaluator boundary_eval_;
};

/// Monte Carlo estimate of lambda_r ||F[h]||^2_{L2(mu_r)} + lambda_b ||h - g||^2_{L2(mu_b)}.
struct MonteCarloLoss {
  double value = 0.0;
  double stderr_ = 0.0;
  double residual_term = 0.0;
  double residual_stderr = 0.0;
  double boundary_term = 0.0;
  double boundary_stderr = 0.0;
};

/// For d = 1 the boundary term is the exact average over both endpoints.
MonteCarloLoss expected_loss_mc(const Trial& h, const OperatorSpec& spec, const LossWeights& w, int n,
                                std::uint64_t seed);

/// [g]^2_{alpha; boundary} by brute force over all pairs of n boundary points.
double boundary_data_seminorm_sq(const OperatorSpec& spec, double alpha, int n, std::uint64_t seed);

struct BoundOptions {
  int mc_samples = 20000;
  int g_points = 10000;
  std::optional<double> g_seminorm_sq;  // reuse a precomputed [g]^2
};

struct BoundCheck {
  double lhs = 0.0;  // MC expected loss + 3 standard errors
  double rhs = 0.0;  // C_m * regularized loss (hard, all pairs) + C' m_b^(-alpha/(d-1))
  double slack = 0.0;
  bool holds = false;
  double C_prime = 0.0;
  double regularized = 0.0;
  MonteCarloLoss expected;
};

BoundCheck check_generalization_bound(const Trial& h, const OperatorSpec& spec, const TrainingSet& set,
                                      const LossWeights& w, const RegSchedule& sched, std::uint64_t seed,
                                      const BoundOptions& opt = {});

}  // namespace vispinn
