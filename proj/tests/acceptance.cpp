// SPDX-License-Identifier: MIT
// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
//   vispinn_acceptance --fast       criteria 1-6 and 8
//   vispinn_acceptance --training   criterion 7 (desk-scale training runs)
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fd.hpp"
#include "oracles.hpp"
#include "vispinn/autodiff.hpp"
#include "vispinn/experiments.hpp"
#include "vispinn/stats.hpp"

using namespace vispinn;
using namespace vispinn::testing;
namespace fs = std::filesystem;

namespace {

// ---- pinned tolerances ----------------------------------------------------
constexpr double kJetTol = 1e-6;          // input gradients / Hessians vs central FD
constexpr double kParamTol = 1e-5;        // parameter gradients vs central FD
constexpr double kAutodiffSeconds = 60.0;
constexpr double kFillSlopeTol = 0.1;     // |slope + 1/(2d)|
constexpr double kSamplingSeconds = 120.0;
constexpr double kScheduleTol = 1e-12;
constexpr double kExactLhsTol = 1e-10;    // "lhs ~ 0" for exact solutions
constexpr double kBoundFraction = 0.95;
constexpr double kBoundSeconds = 300.0;
constexpr double kOrderLo = 1.7, kOrderHi = 2.3;
constexpr double kP2PinnTol = 1e-4;
constexpr double kP2C0Tol = 5e-3;
constexpr int kP2MaxInversions = 1;
constexpr double kMaC0Tol = 5e-2;
constexpr double kMaPinnTol = 1e-3;
constexpr double kE1C0Tol = 5e-2;

constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool passed = true;
  std::vector<std::string> notes;

  void check(bool ok, std::string note) {
    passed = passed && ok;
    notes.push_back((ok ? "ok    " : "FAIL  ") + std::move(note));
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool report(const char* id, const char* title, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.check(false, std::string("exception: ") + e.what());
  }
  fmt::print("{} {} {} ({:.1f} s)\n", id, o.passed ? "PASS" : "FAIL", title, seconds_since(t0));
  for (const auto& n : o.notes) fmt::print("    {}\n", n);
  std::fflush(stdout);
  return o.passed;
}

RunConfig config_from(const std::string& text) { return run_config_from(parse_config(text, "acceptance")); }

// ---- 1 ----------------------------------------------------------------------

Outcome autodiff_fidelity() {
  Outcome o;
  const auto t0 = Clock::now();

  double worst_comp = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Composite e = random_composite(mix_seed(kSeed, s));
    Rng rng(mix_seed(kSeed, 1000 + s));
    std::vector<double> x(e.dim);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    auto f = [&](std::span<const double> p) { return eval<double>(e, e.root, p); };
    const Jet2 j = eval<Jet2>(e, e.root, x);
    for (int i = 0; i < e.dim; ++i) {
      worst_comp = std::max(worst_comp, rel_err(j.grad[i], fd_grad(f, x, i)));
      for (int k = i; k < e.dim; ++k) worst_comp = std::max(worst_comp, rel_err(j.h(i, k), fd_hess(f, x, i, k)));
    }
  }
  o.check(worst_comp <= kJetTol, fmt::format("100 composites: worst relative error {:.2e}", worst_comp));

  double worst_net = 0.0, worst_param = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng rng(mix_seed(kSeed, 2000 + s));
    const Architecture a = random_arch(rng);
    const MlpParams p = init(a, mix_seed(kSeed, 3000 + s));
    std::vector<double> x(a.input_dim());
    for (auto& v : x) v = rng.uniform(0.0, 1.0);
    auto f = [&](std::span<const double> y) { return forward(p, y); };
    const Jet2 j = forward_jet(p, x);
    for (int i = 0; i < a.input_dim(); ++i) {
      worst_net = std::max(worst_net, rel_err(j.grad[i], fd_grad(f, x, i)));
      for (int k = i; k < a.input_dim(); ++k) worst_net = std::max(worst_net, rel_err(j.h(i, k), fd_hess(f, x, i, k)));
    }

    // parameter gradient of a second-order objective
    auto obj = [&](const auto& q) {
      const auto jj = forward_jet(q, x);
      auto lap = jj.h(0, 0);
      for (int k = 1; k < a.input_dim(); ++k) lap = lap + jj.h(k, k);
      return lap * lap + jj.grad[0] * jj.value;
    };
    const ParamGradient g = param_gradient([&](const VarParams& q) { return obj(q); }, p);
    MlpParams q = p;
    for (std::size_t k = 0; k < p.theta.size(); ++k) {
      const double h = 1e-6;
      q.theta[k] = p.theta[k] + h;
      const double up = obj(q);
      q.theta[k] = p.theta[k] - h;
      const double down = obj(q);
      q.theta[k] = p.theta[k];
      worst_param = std::max(worst_param, rel_err(g.values[k], (up - down) / (2 * h)));
    }
  }
  o.check(worst_net <= kJetTol, fmt::format("50 networks, input jets: worst relative error {:.2e}", worst_net));
  o.check(worst_param <= kParamTol, fmt::format("50 networks, parameter gradients: worst relative error {:.2e}", worst_param));
  const double secs = seconds_since(t0);
  o.check(secs < kAutodiffSeconds, fmt::format("runtime {:.1f} s < {:.0f} s", secs, kAutodiffSeconds));
  return o;
}

// ---- 2 ----------------------------------------------------------------------

Outcome sampling_lemma() {
  Outcome o;
  const auto t0 = Clock::now();
  const std::vector<std::pair<int, int>> cases{{16, 1}, {100, 1}, {100, 2}, {1024, 2}};
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto [n, d] = cases[i];
    const FillLemmaReport r = verify_fill_lemma(Domain::hypercube(d), n, 200, mix_seed(kSeed, 100 + i));
    o.check(r.passes(), fmt::format("n={} d={}: success {:.3f} >= {:.3f} - 2*{:.3f}", n, d, r.success_fraction(),
                                    r.theoretical_probability, r.standard_error));
  }
  const std::vector<double> ns{16, 64, 256, 1024};
  for (int d : {1, 2}) {
    std::vector<double> med;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const FillLemmaReport r =
          verify_fill_lemma(Domain::hypercube(d), static_cast<int>(ns[i]), 200, mix_seed(kSeed, 150 + 10 * d + i));
      med.push_back(r.median_fill_distance());
    }
    const double slope = loglog_slope(ns, med);
    const double target = -1.0 / (2.0 * d);
    o.check(std::abs(slope - target) <= kFillSlopeTol,
            fmt::format("d={}: median fill-distance slope {:.3f}, target {:.3f} +- {}", d, slope, target, kFillSlopeTol));
  }
  const double secs = seconds_since(t0);
  o.check(secs < kSamplingSeconds, fmt::format("runtime {:.1f} s < {:.0f} s", secs, kSamplingSeconds));
  return o;
}

// ---- 3 ----------------------------------------------------------------------

Outcome schedule_exactness() {
  Outcome o;
  const DensityConstants unit{1.0, 1.0, 1.0, 1.0};
  auto rel = [](double got, double want) { return want == 0.0 ? std::abs(got) : std::abs(got - want) / std::abs(want); };
  // d = 2: C_m = 3 max{2 * 10, sqrt(2) sqrt(10)} = 60
  const RegSchedule s2 = lambda_hat({1.0, 1.0}, 100, 10, 2, 1.0, unit);
  const double cm = 3.0 * std::max(2.0 * std::sqrt(100.0), std::sqrt(2.0) * std::sqrt(10.0));
  o.check(rel(s2.C_m, cm) <= kScheduleTol, fmt::format("d=2 C_m = {} (hand value {})", s2.C_m, cm));
  o.check(rel(s2.hat_r, 3.0 * 2.0 / cm / 10.0) <= kScheduleTol, fmt::format("d=2 lambda_hat_r = {} (0.01)", s2.hat_r));
  o.check(rel(s2.hat_b, 3.0 * 2.0 / cm / 10.0) <= kScheduleTol, fmt::format("d=2 lambda_hat_b = {} (0.01)", s2.hat_b));
  // d = 1: lambda_hat_r = m_r^(-3/2), no boundary term
  const RegSchedule s1 = lambda_hat({1.0, 1.0}, 100, 2, 1, 1.0, unit);
  o.check(rel(s1.hat_r, 1e-3) <= kScheduleTol, fmt::format("d=1 lambda_hat_r = {} (0.001)", s1.hat_r));
  o.check(s1.hat_b == 0.0, fmt::format("d=1 lambda_hat_b = {}", s1.hat_b));
  return o;
}

// ---- 4 ----------------------------------------------------------------------

Outcome ellipticity_suite() {
  Outcome o;
  std::uint64_t k = 0;
  for (const auto& op : catalog()) {
    const EllipticityReport r = check_ellipticity(op, 1000, mix_seed(kSeed, 200 + k++));
    o.check(r.trials == 1000 && r.violations == 0,
            fmt::format("{}: {} violations in {} trials", op.name, r.violations, r.trials));
  }
  return o;
}

// ---- 5 ----------------------------------------------------------------------

Outcome generalization_bound() {
  Outcome o;
  const auto t0 = Clock::now();
  const LossWeights w{1.0, 1.0};
  for (const char* name : {"poisson2d", "poisson1d"}) {
    const OperatorSpec op = find_operator(name);
    const TrainingSet set = sample_training_set(op.domain, 256, kSeed);
    const RegSchedule s = lambda_hat(w, set.m_r(), set.m_b(), op.domain.dim, 1.0, density_constants(op.domain));
    const BoundCheck b =
        check_generalization_bound(Trial::field(*op.exact, op.domain.dim), op, set, w, s, mix_seed(kSeed, 300));
    o.check(b.holds && b.lhs <= kExactLhsTol,
            fmt::format("{} exact solution: lhs {:.2e} <= rhs {:.2e}", name, b.lhs, b.rhs));
  }

  const OperatorSpec p1 = find_operator("poisson2d");
  const TrainingSet set = sample_training_set(p1.domain, 256, kSeed);
  const RegSchedule s = lambda_hat(w, set.m_r(), set.m_b(), 2, 1.0, density_constants(p1.domain));
  BoundOptions bo;
  bo.g_seminorm_sq = boundary_data_seminorm_sq(p1, 1.0, bo.g_points, mix_seed(kSeed, 301));
  const Architecture arch({2, 32, 32, 1});
  int holds = 0;
  double worst_ratio = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Trial net = Trial::network(init(arch, mix_seed(kSeed, 1000 + k)));
    const BoundCheck b = check_generalization_bound(net, p1, set, w, s, mix_seed(kSeed, 2000 + k), bo);
    holds += b.holds ? 1 : 0;
    worst_ratio = std::max(worst_ratio, b.lhs / b.rhs);
  }
  const double frac = holds / 50.0;
  o.check(frac >= kBoundFraction,
          fmt::format("poisson2d, 50 random networks at m_r=256: {}/50 hold (worst lhs/rhs {:.3f})", holds, worst_ratio));
  const double secs = seconds_since(t0);
  o.check(secs < kBoundSeconds, fmt::format("runtime {:.1f} s < {:.0f} s", secs, kBoundSeconds));
  return o;
}

// ---- 6 ----------------------------------------------------------------------

Outcome oracle_orders() {
  Outcome o;
  constexpr double pi = std::numbers::pi;
  const PointFn zero = [](std::span<const double>) { return 0.0; };
  const PointFn f1 = [](std::span<const double> x) { return pi * pi * std::sin(pi * x[0]); };
  const PointFn f2 = [](std::span<const double> x) { return 2 * pi * pi * std::sin(pi * x[0]) * std::sin(pi * x[1]); };
  const PointFn u1 = [](std::span<const double> x) { return std::sin(pi * x[0]); };
  const PointFn u2 = [](std::span<const double> x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); };
  for (int d : {1, 2}) {
    std::vector<double> errs;
    for (int N : {16, 32, 64, 128}) {
      const OracleGrid g = solve_poisson_fd(Domain::hypercube(d), d == 1 ? f1 : f2, zero, N);
      const double h = g.spacing();
      double e = 0.0;
      for (int j = 0; j <= (d == 1 ? 0 : N); ++j) {
        for (int i = 0; i <= N; ++i) {
          std::vector<double> x{i * h};
          if (d == 2) x.push_back(j * h);
          e = std::max(e, std::abs(g.at(i, j) - (d == 1 ? u1 : u2)(x)));
        }
      }
      errs.push_back(e);
    }
    for (std::size_t k = 0; k + 1 < errs.size(); ++k) {
      const double order = std::log2(errs[k] / errs[k + 1]);
      o.check(order >= kOrderLo && order <= kOrderHi,
              fmt::format("poisson d={} N={}->{}: observed order {:.3f}", d, 16 << k, 32 << k, order));
    }
  }

  const int N = 128;
  const OracleGrid eik = solve_eikonal_1d(0.0, 0.0, N);
  double dev = 0.0;
  for (int i = 0; i <= N; ++i) {
    const double x = i * eik.spacing();
    dev = std::max(dev, std::abs(eik.at(i) - std::min(x, 1.0 - x)));
  }
  o.check(dev <= eik.spacing(), fmt::format("eikonal N={}: max |u - min(x,1-x)| = {:.2e} <= h = {:.2e}", N, dev,
                                            eik.spacing()));

  // ordered boundary pairs: random smooth data and a nonnegative lift of it
  Rng rng(mix_seed(kSeed, 400));
  for (const auto& s : bundled_solvers()) {
    int passed = 0;
    for (int k = 0; k < 20; ++k) {
      const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1), c = rng.uniform(-1, 1);
      const double lift = rng.uniform(0.0, 0.3), tilt = rng.uniform(0.0, 0.5);
      const PointFn lo = [=](std::span<const double> x) {
        const double y = x.size() > 1 ? x[1] : 0.0;
        return a + b * std::cos(2.0 * x[0]) + c * x[0] * y;
      };
      const PointFn hi = [=](std::span<const double> x) {
        const double y = x.size() > 1 ? x[1] : 0.0;
        return lo(x) + lift + tilt * (x[0] + y) * (x[0] + y);
      };
      passed += discrete_comparison_test(s.solve, s.dim, lo, hi, 64) ? 1 : 0;
    }
    o.check(passed == 20, fmt::format("comparison {}: {}/20 ordered pairs", s.name, passed));
  }
  return o;
}

// ---- 7 ----------------------------------------------------------------------

Outcome convergence_p2() {
  Outcome o;
  const RunConfig rc = config_from(R"(operator = "poisson1d"
arch = [1, 32, 32, 1]
m_r = [64, 256, 1024]
seeds = [0, 1, 2]
steps = 20000
step_size = 1e-3
log_every = 1000
)");
  const fs::path dir = fs::temp_directory_path() / "vispinn_acceptance" / "p2";
  fs::remove_all(dir);
  const SweepResult r = cmd_sweep(rc, dir, 1);
  bool all_ok = true;
  for (const auto& row : r.rows) all_ok = all_ok && row.ok;
  o.check(all_ok, fmt::format("{} sweep rows trained", r.rows.size()));
  for (std::size_t i = 0; i < r.m_values.size(); ++i) {
    o.notes.push_back(fmt::format("      m_r={}: median pinn {:.2e}, c0 {:.2e}, expected {:.2e}", r.m_values[i],
                                  r.median_pinn_loss[i], r.median_c0_error[i], r.median_expected_loss[i]));
  }
  const double pinn = r.median_pinn_loss.back();
  o.check(pinn <= kP2PinnTol, fmt::format("median PINN loss at m_r={}: {:.2e} <= {:.0e}", r.m_values.back(), pinn,
                                          kP2PinnTol));
  const double c0 = median([&] {
    std::vector<double> v;
    for (const auto& row : r.rows) v.push_back(row.c0_error);
    return v;
  }());
  o.check(c0 <= kP2C0Tol, fmt::format("median C0 error {:.2e} <= {:.0e}", c0, kP2C0Tol));
  int inversions = 0;
  for (std::size_t i = 1; i < r.median_c0_error.size(); ++i) inversions += r.median_c0_error[i] > r.median_c0_error[i - 1];
  o.check(inversions <= kP2MaxInversions,
          fmt::format("median C0 error nonincreasing in m_r: {} inversion(s) <= {}", inversions, kP2MaxInversions));
  o.check(r.slope && *r.slope < 0.0,
          fmt::format("expected-loss log-log slope {:.3f} < 0 (theory {:.3f}, not asserted)", r.slope.value_or(NAN),
                      r.theoretical_rate));
  return o;
}

Outcome convergence_ma() {
  Outcome o;
  const RunConfig rc = config_from(R"(operator = "monge_ampere2d"
arch = [2, 48, 48, 1]
m_r = 2048
steps = 40000
step_size = 1e-3
log_every = 1000
)");
  const TrainRun run = run_training(rc, 2048, 0);
  const double c0 = run.report.c0_error.value_or(INFINITY);
  o.check(c0 <= kMaC0Tol, fmt::format("C0 error vs exp(|x|^2/2): {:.2e} <= {:.0e}", c0, kMaC0Tol));
  o.check(run.report.final_pinn_loss <= kMaPinnTol,
          fmt::format("empirical PINN loss {:.2e} <= {:.0e}", run.report.final_pinn_loss, kMaPinnTol));
  return o;
}

Outcome convergence_e1() {
  Outcome o;
  const RunConfig rc = config_from(R"(operator = "eikonal1d"
arch = [1, 32, 32, 1]
m_r = 256
# two boundary points at unit weight leave a straight-line local minimum
lambda_b = 100.0
kappa = 1.0
alpha = 0.5
steps = 20000
step_size = 1e-3
log_every = 500
)");
  double best = INFINITY;
  std::uint64_t best_seed = 0;
  bool traced = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TrainRun run = run_training(rc, rc.m_r.front(), seed);
    const double c0 = run.report.c0_error.value_or(INFINITY);
    o.notes.push_back(fmt::format("      seed {}: C0 error {:.2e}, holder_r {:.3e}", seed, c0, run.report.final_hard.holder_r));
    if (c0 < best) {
      best = c0;
      best_seed = seed;
    }
    const std::string json = report_to_json(run.report, rc.operator_name, run.set, rc.weights, true);
    traced = traced && json.find("\"holder_trace\"") != std::string::npos && run.report.history.size() > 1 &&
             run.report.schedule.hat_r > 0.0;
  }
  o.check(best <= kE1C0Tol, fmt::format("best of 5 seeds (seed {}): C0 error vs min(x,1-x) {:.2e} <= {:.0e}", best_seed,
                                        best, kE1C0Tol));
  o.check(traced, "reports carry a Hoelder trace with regularization active");
  return o;
}

// ---- 8 ----------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(VISPINN_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "vispinn_acceptance" / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path cfg = root / "run.toml";
  std::ofstream(cfg) << R"(operator = "poisson2d"
arch = [2, 12, 12, 1]
m_r = [32, 64, 128]
seeds = [3, 4]
steps = 150
log_every = 25
mc_samples = 2000
oracle_n = 32
sampling_n = [16, 100]
sampling_d = [1, 2]
sampling_trials = 40
ellipticity_trials = 200
bound_draws = 5
comparison_pairs = 4
)";
  const std::vector<std::pair<std::string, std::vector<std::string>>> commands{
      {"train", {"report.json", "weights.json", "history.csv"}},
      {"report", {"summary.json", "profile.csv"}},
      {"sweep --jobs 2", {"sweep.csv", "sweep_summary.json"}},
      {"verify sampling", {"verify_sampling.csv"}},
      {"verify ellipticity", {"verify_ellipticity.csv"}},
      {"verify bound", {"verify_bound.csv"}},
      {"verify comparison", {"verify_comparison.csv"}},
      {"oracle", {"oracle.csv"}},
  };
  for (const char* run : {"a", "b"}) {
    for (const auto& [cmd, files] : commands) {
      const int code = run_cli(cmd + " --config " + cfg.string() + " --out " + (root / run).string() + " --deterministic");
      // verification commands may legitimately report a failed check; only crashes and config errors matter here
      if (code != kExitOk && code != kExitVerificationFailed) o.check(false, fmt::format("{} exited with {}", cmd, code));
    }
  }
  int compared = 0, total = 0;
  for (const auto& [cmd, files] : commands) {
    for (const auto& f : files) {
      ++total;
      const bool exists = fs::exists(root / "a" / f) && fs::exists(root / "b" / f);
      const bool same = exists && slurp(root / "a" / f) == slurp(root / "b" / f);
      if (!same) o.check(false, fmt::format("{}: {} differs or is missing", cmd, f));
      compared += same ? 1 : 0;
    }
  }
  o.check(compared == total, fmt::format("{}/{} outputs byte-identical across reruns", compared, total));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vispinn acceptance suite"};
  bool fast = false, training = false;
  app.add_flag("--fast", fast, "criteria 1-6 and 8");
  app.add_flag("--training", training, "criterion 7");
  CLI11_PARSE(app, argc, argv);
  if (!fast && !training) fast = training = true;

  bool ok = true;
  if (fast) {
    ok &= report("AC1", "autodiff fidelity", autodiff_fidelity);
    ok &= report("AC2", "sampling fill lemma and fill-distance slope", sampling_lemma);
    ok &= report("AC3", "regularization schedule exactness", schedule_exactness);
    ok &= report("AC4", "degenerate ellipticity of bundled operators", ellipticity_suite);
    ok &= report("AC5", "generalization bound", generalization_bound);
    ok &= report("AC6", "oracle orders, eikonal accuracy, discrete comparison", oracle_orders);
  }
  if (training) {
    ok &= report("AC7a", "desk-scale convergence: Poisson 1D sweep", convergence_p2);
    ok &= report("AC7b", "desk-scale convergence: Monge-Ampere 2D", convergence_ma);
    ok &= report("AC7c", "desk-scale convergence: eikonal 1D with Hoelder regularization", convergence_e1);
  }
  if (fast) ok &= report("AC8", "byte-identical reruns", determinism);
  fmt::print("{}\n", ok ? "ALL PASS" : "SOME CRITERIA FAILED");
  return ok ? 0 : 1;
}
