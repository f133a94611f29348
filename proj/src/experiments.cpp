// SPDX-License-Identifier: MIT
#include "vispinn/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <mutex>
#include <thread>
#include <tuple>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "vispinn/csv.hpp"
#include "vispinn/rng.hpp"
#include "vispinn/stats.hpp"

namespace vispinn {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, fmt::format("cannot write '{}'", path.string()));
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

std::string csv_safe(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  }
  return s;
}

}  // namespace

fs::path resolve_out_dir(const std::optional<std::string>& flag, const RunConfig& rc) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("VISPINN_OUT"); env && *env) return env;
  return rc.out;
}

Architecture architecture_for(const RunConfig& rc, const OperatorSpec& spec) {
  if (!rc.arch.empty()) return Architecture(rc.arch);
  return Architecture({spec.domain.dim, 32, 32, 1});
}

int probe_resolution_for(const RunConfig& rc, const Domain& domain) {
  return rc.probe_resolution > 0 ? rc.probe_resolution : default_probe_resolution(domain.dim);
}

TrainRun run_training(const RunConfig& rc, int m_r, std::uint64_t seed) {
  const OperatorSpec spec = find_operator(rc.operator_name);
  const Architecture arch = architecture_for(rc, spec);
  TrainRun run;
  run.set = sample_training_set(spec.domain, m_r, seed);
  TrainConfig tc = rc.train;
  tc.seed = seed;
  run.report = train(spec, arch, run.set, rc.weights, tc);
  const Reference ref = reference_for(spec, rc.oracle_n);
  run.report.c0_error = c0_error(run.report.params, ref.as_function(), spec.domain, probe_resolution_for(rc, spec.domain));
  return run;
}

TrainRun cmd_train(const RunConfig& rc, const fs::path& out) {
  TrainRun run = run_training(rc, rc.m_r.front(), rc.seeds.front());
  write_text(out / "report.json",
             report_to_json(run.report, rc.operator_name, run.set, rc.weights, rc.train.deterministic));
  write_text(out / "weights.json", params_to_json(run.report.params));
  auto hist = open_out(out / "history.csv");
  write_history_csv(hist, run.report);
  return run;
}

namespace {

SweepRow sweep_row(const RunConfig& rc, int m_r, std::uint64_t seed) {
  SweepRow row;
  row.m_r = m_r;
  row.seed = seed;
  const OperatorSpec spec = find_operator(rc.operator_name);
  row.m_b = boundary_count(spec.domain.dim, m_r);
  try {
    TrainRun run = run_training(rc, m_r, seed);
    const TrainReport& rep = run.report;
    row.m_b = run.set.m_b();
    row.lambda_hat_r = rep.schedule.hat_r;
    row.lambda_hat_b = rep.schedule.hat_b;
    row.pinn_loss = rep.final_pinn_loss;
    row.holder_r = rep.final_hard.holder_r;
    row.holder_b = rep.final_hard.holder_b;
    row.c0_error = rep.c0_error.value_or(NAN);
    const MonteCarloLoss mc =
        expected_loss_mc(Trial::network(rep.params), spec, rc.weights, rc.mc_samples, mix_seed(seed, 5));
    row.expected_loss = mc.value;
    row.expected_stderr = mc.stderr_;
    row.ok = true;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::config) throw;
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

}  // namespace

SweepResult cmd_sweep(const RunConfig& rc, const fs::path& out, int jobs) {
  const OperatorSpec spec = find_operator(rc.operator_name);
  std::vector<int> ms = rc.m_r;
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
  if (ms.size() < 3) fail(ErrorKind::config, "sweep: key 'm_r' needs at least 3 distinct values");

  std::vector<std::pair<int, std::uint64_t>> tasks;
  for (int m : ms) {
    for (auto s : rc.seeds) tasks.emplace_back(m, s);
  }
  SweepResult res;
  res.rows.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr config_error;
  std::mutex err_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        res.rows[i] = sweep_row(rc, tasks[i].first, tasks[i].second);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!config_error) config_error = std::current_exception();
      }
    }
  };
  const int n_threads = std::clamp(jobs, 1, static_cast<int>(tasks.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (config_error) std::rethrow_exception(config_error);
  std::sort(res.rows.begin(), res.rows.end(),
            [](const SweepRow& a, const SweepRow& b) { return std::tie(a.m_r, a.seed) < std::tie(b.m_r, b.seed); });

  res.theoretical_rate = -rc.train.alpha / spec.domain.dim;
  std::vector<double> xs, ys;
  for (int m : ms) {
    std::vector<double> el, c0, pl;
    for (const auto& r : res.rows) {
      if (r.m_r == m && r.ok) {
        el.push_back(r.expected_loss);
        c0.push_back(r.c0_error);
        pl.push_back(r.pinn_loss);
      }
    }
    res.m_values.push_back(m);
    res.median_expected_loss.push_back(el.empty() ? NAN : median(el));
    res.median_c0_error.push_back(c0.empty() ? NAN : median(c0));
    res.median_pinn_loss.push_back(pl.empty() ? NAN : median(pl));
    if (!el.empty() && res.median_expected_loss.back() > 0.0) {
      xs.push_back(m);
      ys.push_back(res.median_expected_loss.back());
    }
  }
  if (xs.size() >= 3) res.slope = loglog_slope(xs, ys);

  auto csv = open_out(out / "sweep.csv");
  write_csv_metadata(csv, "sweep", rc.seeds.front());
  csv << "m_r,m_b,lambda_hat_r,lambda_hat_b,pinn_loss,expected_loss,expected_stderr,c0_error,holder_r,holder_b,seed,"
         "status\n";
  for (const auto& r : res.rows) {
    csv << r.m_r << ',' << r.m_b << ',' << format_double(r.lambda_hat_r) << ',' << format_double(r.lambda_hat_b) << ','
        << format_double(r.pinn_loss) << ',' << format_double(r.expected_loss) << ','
        << format_double(r.expected_stderr) << ',' << format_double(r.c0_error) << ',' << format_double(r.holder_r)
        << ',' << format_double(r.holder_b) << ',' << r.seed << ',' << (r.ok ? "ok" : "failed: " + csv_safe(r.error))
        << '\n';
  }

  nlohmann::ordered_json j;
  j["schema"] = "vispinn-sweep-v1";
  j["version"] = std::string(kVersion);
  j["operator"] = rc.operator_name;
  j["m_r"] = res.m_values;
  j["seeds"] = rc.seeds;
  auto nullable = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); };
  auto arr = [&](const std::vector<double>& v) {
    auto a = nlohmann::ordered_json::array();
    for (double x : v) a.push_back(nullable(x));
    return a;
  };
  j["median_expected_loss"] = arr(res.median_expected_loss);
  j["median_c0_error"] = arr(res.median_c0_error);
  j["median_pinn_loss"] = arr(res.median_pinn_loss);
  j["slope"] = res.slope ? nlohmann::ordered_json(*res.slope) : nlohmann::ordered_json(nullptr);
  j["theoretical_rate"] = res.theoretical_rate;
  j["failed_rows"] = std::count_if(res.rows.begin(), res.rows.end(), [](const SweepRow& r) { return !r.ok; });
  write_text(out / "sweep_summary.json", j.dump(2));
  return res;
}

namespace {

VerifyResult verify_sampling(const RunConfig& rc, const fs::path& out) {
  VerifyResult v{"sampling", true, {}};
  auto csv = open_out(out / "verify_sampling.csv");
  write_csv_metadata(csv, "verify-sampling", rc.seeds.front());
  csv << "n,d,trials,successes,success_fraction,theoretical_probability,standard_error,bound,median_fill_distance,"
         "pass\n";
  for (std::size_t i = 0; i < rc.sampling.size(); ++i) {
    const auto [n, d] = rc.sampling[i];
    const FillLemmaReport r =
        verify_fill_lemma(Domain::hypercube(d), n, rc.sampling_trials, mix_seed(rc.seeds.front(), 100 + i));
    const bool ok = r.passes();
    v.passed = v.passed && ok;
    csv << n << ',' << d << ',' << r.trials << ',' << r.successes << ',' << format_double(r.success_fraction()) << ','
        << format_double(r.theoretical_probability) << ',' << format_double(r.standard_error) << ','
        << format_double(r.bound) << ',' << format_double(r.median_fill_distance()) << ',' << (ok ? 1 : 0) << '\n';
    v.lines.push_back(fmt::format("sampling n={} d={}: {:.3f} >= {:.3f} - 2*{:.3f}: {}", n, d, r.success_fraction(),
                                  r.theoretical_probability, r.standard_error, ok ? "pass" : "FAIL"));
  }
  return v;
}

VerifyResult verify_ellipticity(const RunConfig& rc, const fs::path& out) {
  VerifyResult v{"ellipticity", true, {}};
  auto csv = open_out(out / "verify_ellipticity.csv");
  write_csv_metadata(csv, "verify-ellipticity", rc.seeds.front());
  csv << "operator,trials,violations,worst_violation,pass\n";
  const auto ops = catalog();
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const EllipticityReport r = check_ellipticity(ops[i], rc.ellipticity_trials, mix_seed(rc.seeds.front(), 200 + i));
    const bool ok = r.violations == 0;
    v.passed = v.passed && ok;
    csv << ops[i].name << ',' << r.trials << ',' << r.violations << ',' << format_double(r.worst_violation) << ','
        << (ok ? 1 : 0) << '\n';
    v.lines.push_back(fmt::format("ellipticity {}: {} violations in {} trials: {}", ops[i].name, r.violations, r.trials,
                                  ok ? "pass" : "FAIL"));
  }
  return v;
}

VerifyResult verify_bound(const RunConfig& rc, const fs::path& out) {
  VerifyResult v{"bound", true, {}};
  const OperatorSpec spec = find_operator(rc.operator_name);
  const std::uint64_t seed = rc.seeds.front();
  const TrainingSet set = sample_training_set(spec.domain, rc.m_r.front(), seed);
  const RegSchedule sched = lambda_hat(rc.weights, set.m_r(), set.m_b(), spec.domain.dim, rc.train.alpha,
                                       density_constants(spec.domain), rc.train.kappa);
  BoundOptions bo;
  bo.mc_samples = rc.mc_samples;
  if (spec.domain.dim >= 2) bo.g_seminorm_sq = boundary_data_seminorm_sq(spec, rc.train.alpha, bo.g_points, seed);

  auto csv = open_out(out / "verify_bound.csv");
  write_csv_metadata(csv, "verify-bound", seed);
  csv << "candidate,lhs,rhs,slack,holds\n";
  auto emit = [&](const std::string& name, const BoundCheck& b) {
    csv << name << ',' << format_double(b.lhs) << ',' << format_double(b.rhs) << ',' << format_double(b.slack) << ','
        << (b.holds ? 1 : 0) << '\n';
  };
  if (spec.exact) {
    const BoundCheck b = check_generalization_bound(Trial::field(*spec.exact, spec.domain.dim), spec, set, rc.weights,
                                                    sched, mix_seed(seed, 300), bo);
    emit("exact", b);
    v.passed = v.passed && b.holds;
    v.lines.push_back(
        fmt::format("bound exact: lhs {:.3e} <= rhs {:.3e}: {}", b.lhs, b.rhs, b.holds ? "pass" : "FAIL"));
  }
  const Architecture arch = architecture_for(rc, spec);
  int holds = 0;
  for (int k = 0; k < rc.bound_draws; ++k) {
    const MlpParams p = init(arch, mix_seed(seed, 1000 + static_cast<std::uint64_t>(k)));
    const BoundCheck b =
        check_generalization_bound(Trial::network(p), spec, set, rc.weights, sched, mix_seed(seed, 2000 + k), bo);
    holds += b.holds ? 1 : 0;
    emit(fmt::format("network{}", k), b);
  }
  const double frac = static_cast<double>(holds) / rc.bound_draws;
  const bool ok = frac >= 0.95;
  v.passed = v.passed && ok;
  v.lines.push_back(fmt::format("bound random networks: {}/{} hold ({:.3f} >= 0.95): {}", holds, rc.bound_draws, frac,
                                ok ? "pass" : "FAIL"));
  return v;
}

/// Smooth random boundary data and a pointwise larger companion.
std::pair<PointFn, PointFn> ordered_pair(Rng& rng) {
  const double a = rng.uniform(-1.0, 1.0), b = rng.uniform(-1.0, 1.0), c = rng.uniform(-1.0, 1.0);
  const double s = rng.uniform(-1.0, 1.0), k = 1.0 + std::floor(3.0 * rng.uniform());
  const double shift = rng.uniform(0.0, 0.5), bump = rng.uniform(0.0, 1.0);
  PointFn lo = [=](std::span<const double> x) {
    const double y = x.size() > 1 ? x[1] : 0.0;
    return a + b * x[0] + c * y + s * std::sin(std::numbers::pi * k * (x[0] + y));
  };
  PointFn hi = [=](std::span<const double> x) {
    const double y = x.size() > 1 ? x[1] : 0.0;
    return lo(x) + shift + bump * x[0] * x[0] * (1.0 + y);
  };
  return {lo, hi};
}

VerifyResult verify_comparison(const RunConfig& rc, const fs::path& out) {
  VerifyResult v{"comparison", true, {}};
  auto csv = open_out(out / "verify_comparison.csv");
  write_csv_metadata(csv, "verify-comparison", rc.seeds.front());
  csv << "solver,pair,pass\n";
  Rng rng(mix_seed(rc.seeds.front(), 400));
  const int N = std::min(rc.oracle_n, 128);
  for (const auto& s : bundled_solvers()) {
    int passed = 0;
    for (int k = 0; k < rc.comparison_pairs; ++k) {
      const auto [lo, hi] = ordered_pair(rng);
      const bool ok = discrete_comparison_test(s.solve, s.dim, lo, hi, N);
      passed += ok ? 1 : 0;
      csv << s.name << ',' << k << ',' << (ok ? 1 : 0) << '\n';
    }
    const bool ok = passed == rc.comparison_pairs;
    v.passed = v.passed && ok;
    v.lines.push_back(
        fmt::format("comparison {}: {}/{} ordered pairs: {}", s.name, passed, rc.comparison_pairs, ok ? "pass" : "FAIL"));
  }
  return v;
}

}  // namespace

VerifyResult cmd_verify(const std::string& what, const RunConfig& rc, const fs::path& out) {
  if (what == "sampling") return verify_sampling(rc, out);
  if (what == "ellipticity") return verify_ellipticity(rc, out);
  if (what == "bound") return verify_bound(rc, out);
  if (what == "comparison") return verify_comparison(rc, out);
  fail(ErrorKind::config, fmt::format("unknown verification '{}' (sampling, ellipticity, bound, comparison)", what));
}

OracleGrid cmd_oracle(const RunConfig& rc, const fs::path& out) {
  const OperatorSpec spec = find_operator(rc.operator_name);
  require(spec.domain.kind == DomainKind::hypercube && spec.domain.dim <= 2, ErrorKind::config,
          "oracle: only 1D and 2D hypercube operators have grids");
  OracleGrid grid;
  bool solved = false;
  for (const auto& s : bundled_solvers()) {
    if (s.name == spec.name) {
      grid = s.solve(spec.boundary, rc.oracle_n);
      solved = true;
    }
  }
  if (!solved) {
    const Reference ref = reference_for(spec, rc.oracle_n);
    grid.dim = spec.domain.dim;
    grid.N = rc.oracle_n;
    const int per = rc.oracle_n + 1;
    grid.values.resize(grid.dim == 1 ? per : per * per);
    const double h = grid.spacing();
    for (int j = 0; j < (grid.dim == 1 ? 1 : per); ++j) {
      for (int i = 0; i < per; ++i) {
        std::vector<double> x{i * h};
        if (grid.dim == 2) x.push_back(j * h);
        grid.at(i, j) = ref(x);
      }
    }
  }
  auto csv = open_out(out / "oracle.csv");
  write_grid_csv(csv, grid, rc.seeds.front());
  return grid;
}

ReportSummary cmd_report(const RunConfig& rc, const fs::path& out) {
  const OperatorSpec spec = find_operator(rc.operator_name);
  const fs::path wpath = rc.weights_path.empty() ? out / "weights.json" : fs::path(rc.weights_path);
  MlpParams p;
  try {
    p = load_params(wpath);
  } catch (const Error& e) {
    fail(ErrorKind::config, fmt::format("report: cannot load weights: {}", e.what()));
  }
  require(p.arch.input_dim() == spec.domain.dim, ErrorKind::config, "report: weights do not match the operator");
  const std::uint64_t seed = rc.seeds.front();
  const TrainingSet set = sample_training_set(spec.domain, rc.m_r.front(), seed);
  const RegSchedule sched = lambda_hat(rc.weights, set.m_r(), set.m_b(), spec.domain.dim, rc.train.alpha,
                                       density_constants(spec.domain), rc.train.kappa);
  const Trial h = Trial::network(p);
  LossOptions hard;
  hard.mode = HolderMode::hard;
  hard.pair_budget = rc.train.pair_budget;
  hard.pair_seed = mix_seed(seed, 3);
  const LossBreakdown lb = loss_breakdown(h, spec, set, rc.weights, sched, hard);

  ReportSummary s;
  s.pinn_loss = lb.pinn();
  s.regularized_loss = lb.total();
  s.expected = expected_loss_mc(h, spec, rc.weights, rc.mc_samples, mix_seed(seed, 5));
  BoundOptions bo;
  bo.mc_samples = rc.mc_samples;
  s.bound = check_generalization_bound(h, spec, set, rc.weights, sched, mix_seed(seed, 300), bo);

  const Reference ref = reference_for(spec, rc.oracle_n);
  const PointSet grid = probe_grid(spec.domain, probe_resolution_for(rc, spec.domain));
  BatchEvaluator ev(p.arch, 0);
  const JetBatch& vals = ev.forward(p, grid);
  auto csv = open_out(out / "profile.csv");
  write_csv_metadata(csv, "profile", seed);
  for (int k = 0; k < spec.domain.dim; ++k) csv << 'x' << k << ',';
  csv << "h,reference,abs_error\n";
  std::vector<double> x(spec.domain.dim);
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    for (int k = 0; k < spec.domain.dim; ++k) {
      x[k] = grid(i, k);
      csv << format_double(x[k]) << ',';
    }
    const double hv = vals.value(static_cast<int>(i)), rv = ref(x);
    s.c0_error = std::max(s.c0_error, std::abs(hv - rv));
    csv << format_double(hv) << ',' << format_double(rv) << ',' << format_double(std::abs(hv - rv)) << '\n';
  }

  nlohmann::ordered_json j;
  j["schema"] = "vispinn-summary-v1";
  j["version"] = std::string(kVersion);
  j["operator"] = rc.operator_name;
  j["weights"] = wpath.filename().string();
  j["m_r"] = set.m_r();
  j["m_b"] = set.m_b();
  j["seed"] = seed;
  j["pinn_loss"] = s.pinn_loss;
  j["regularized_loss"] = s.regularized_loss;
  j["holder_r"] = lb.holder_r;
  j["holder_b"] = lb.holder_b;
  j["expected_loss"] = {{"value", s.expected.value}, {"stderr", s.expected.stderr_}};
  j["c0_error"] = s.c0_error;
  j["bound"] = {{"lhs", s.bound.lhs}, {"rhs", s.bound.rhs}, {"holds", s.bound.holds}};
  write_text(out / "summary.json", j.dump(2));
  return s;
}

}  // namespace vispinn
