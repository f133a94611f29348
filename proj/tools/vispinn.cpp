// SPDX-License-Identifier: MIT
// vispinn: train, sweep, verify, oracle and report from a config file.
//
// Exit codes: 0 success, 1 verification or run failure, 2 configuration error.
// Output directory: --out wins over VISPINN_OUT, which wins over the config.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "vispinn/csv.hpp"
#include "vispinn/experiments.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool deterministic = false;
  int jobs = 1;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "run configuration (key = value)")->required();
  sub->add_option("--seed", c.seed, "override the first seed");
  sub->add_option("--out", c.out, "output directory (overrides VISPINN_OUT)");
  sub->add_flag("--deterministic", c.deterministic, "omit wall-clock fields for byte-identical output");
  sub->add_option("--jobs", c.jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
}

vispinn::RunConfig load(const Common& c) {
  vispinn::RunConfig rc = vispinn::run_config_from(vispinn::load_config(c.config));
  if (c.seed) {
    rc.seeds.front() = *c.seed;
    rc.train.seed = *c.seed;
  }
  if (c.deterministic) rc.train.deterministic = true;
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hoelder-regularized PINN training and verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(vispinn::kVersion));

  Common c;
  std::string what;
  auto* train = app.add_subcommand("train", "train one network; writes report.json, weights.json, history.csv");
  auto* sweep = app.add_subcommand("sweep", "train over an m_r list and seeds; writes sweep.csv");
  auto* verify = app.add_subcommand("verify", "run a verification: sampling, ellipticity, bound, comparison");
  auto* oracle = app.add_subcommand("oracle", "write the reference solution grid");
  auto* report = app.add_subcommand("report", "re-evaluate saved weights");
  for (auto* sub : {train, sweep, verify, oracle, report}) add_common(sub, c);
  verify->add_option("what", what, "sampling | ellipticity | bound | comparison")
      ->required()
      ->check(CLI::IsMember({"sampling", "ellipticity", "bound", "comparison"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : vispinn::kExitConfigError;
  }

  try {
    const vispinn::RunConfig rc = load(c);
    const auto out = vispinn::resolve_out_dir(c.out, rc);
    if (train->parsed()) {
      const auto run = vispinn::cmd_train(rc, out);
      fmt::print("pinn loss {:.6e}  regularized {:.6e}  c0 error {:.6e}  best step {}\n",
                 run.report.final_pinn_loss, run.report.final_regularized_loss, run.report.c0_error.value_or(0.0),
                 run.report.best_step);
      fmt::print("wrote {}\n", out.string());
    } else if (sweep->parsed()) {
      const auto res = vispinn::cmd_sweep(rc, out, c.jobs);
      for (std::size_t i = 0; i < res.m_values.size(); ++i) {
        fmt::print("m_r {:6d}  median expected loss {:.4e}  median c0 error {:.4e}\n", res.m_values[i],
                   res.median_expected_loss[i], res.median_c0_error[i]);
      }
      if (res.slope) fmt::print("slope {:.3f} (theory {:.3f})\n", *res.slope, res.theoretical_rate);
      std::size_t failed = 0;
      for (const auto& r : res.rows) failed += r.ok ? 0 : 1;
      if (failed) fmt::print("{} failed rows\n", failed);
      fmt::print("wrote {}\n", out.string());
    } else if (verify->parsed()) {
      const auto v = vispinn::cmd_verify(what, rc, out);
      for (const auto& line : v.lines) fmt::print("{}\n", line);
      fmt::print("{}: {}\n", v.what, v.passed ? "PASS" : "FAIL");
      return v.passed ? vispinn::kExitOk : vispinn::kExitVerificationFailed;
    } else if (oracle->parsed()) {
      const auto g = vispinn::cmd_oracle(rc, out);
      fmt::print("oracle grid N={} dim={} written to {}\n", g.N, g.dim, out.string());
    } else if (report->parsed()) {
      const auto s = vispinn::cmd_report(rc, out);
      fmt::print("pinn loss {:.6e}  expected {:.6e} +- {:.1e}  c0 error {:.6e}  bound {}\n", s.pinn_loss,
                 s.expected.value, s.expected.stderr_, s.c0_error, s.bound.holds ? "holds" : "violated");
    }
  } catch (const vispinn::Error& e) {
    std::fprintf(stderr, "vispinn: %s\n", e.what());
    return e.kind() == vispinn::ErrorKind::config ? vispinn::kExitConfigError : vispinn::kExitVerificationFailed;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "vispinn: %s\n", e.what());
    return vispinn::kExitVerificationFailed;
  }
  return vispinn::kExitOk;
}
