// SPDX-License-Identifier: MIT
/**
 * @file experiments.hpp
 * @brief The train / sweep / verify / oracle / report commands.
 *
 * Each command reads a RunConfig, writes its artifacts into an output
 * directory and returns a result that the CLI maps to an exit code.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vispinn/config.hpp"
#include "vispinn/oracle.hpp"
#include "vispinn/training.hpp"

namespace vispinn {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerificationFailed = 1;
inline constexpr int kExitConfigError = 2;

/// Output directory: --out, else VISPINN_OUT, else the config `out` key.
std::filesystem::path resolve_out_dir(const std::optional<std::string>& flag, const RunConfig& rc);

Architecture architecture_for(const RunConfig& rc, const OperatorSpec& spec);
int probe_resolution_for(const RunConfig& rc, const Domain& domain);

struct TrainRun {
  TrainingSet set;
  TrainReport report;
};

/// One training run at (m_r, seed); fills report.c0_error against the
/// operator's reference solution.
TrainRun run_training(const RunConfig& rc, int m_r, std::uint64_t seed);

/// Writes report.json, weights.json and history.csv for m_r[0], seeds[0].
TrainRun cmd_train(const RunConfig& rc, const std::filesystem::path& out);

struct SweepRow {
  int m_r = 0;
  int m_b = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double lambda_hat_r = 0.0;
  double lambda_hat_b = 0.0;
  double pinn_loss = 0.0;
  double expected_loss = 0.0;
  double expected_stderr = 0.0;
  double c0_error = 0.0;
  double holder_r = 0.0;
  double holder_b = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by (m_r, seed)
  std::vector<int> m_values;   // distinct m_r, ascending
  std::vector<double> median_expected_loss;
  std::vector<double> median_c0_error;
  std::vector<double> median_pinn_loss;
  std::optional<double> slope;  // log-log, median expected loss vs m_r
  double theoretical_rate = 0.0;  // -alpha / d
};

/// Rows over (m_r, seed), run on `jobs` threads; writes sweep.csv and
/// sweep_summary.json. Failed rows are kept and marked.
SweepResult cmd_sweep(const RunConfig& rc, const std::filesystem::path& out, int jobs = 1);

struct VerifyResult {
  std::string what;
  bool passed = false;
  std::vector<std::string> lines;  // human-readable per-check summary
};

/// what: sampling | ellipticity | bound | comparison. Writes verify_<what>.csv.
VerifyResult cmd_verify(const std::string& what, const RunConfig& rc, const std::filesystem::path& out);

/// Writes oracle.csv: the finite-difference / sweeping solution for the
/// Poisson and eikonal operators, exact nodal values otherwise.
OracleGrid cmd_oracle(const RunConfig& rc, const std::filesystem::path& out);

struct ReportSummary {
  double pinn_loss = 0.0;
  double regularized_loss = 0.0;
  MonteCarloLoss expected;
  double c0_error = 0.0;
  BoundCheck bound;
};

/// Re-evaluates saved weights (config `weights`, default <out>/weights.json):
/// writes summary.json and profile.csv.
ReportSummary cmd_report(const RunConfig& rc, const std::filesystem::path& out);

}  // namespace vispinn
