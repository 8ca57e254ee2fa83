// nndag: synthesize linear-SEM data, learn non-negative DAGs, compare
// estimates, and run replicated benchmark sweeps.
//
// Exit codes: 0 success, 1 input/usage error, 2 solver failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "nndag/nndag.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitSolver = 2;

using nlohmann::json;

json diagnostics_json(const nndag::SolveDiagnostics& diag, const nndag::SolverConfig& cfg) {
  json records = json::array();
  for (const auto& r : diag.records)
    records.push_back({{"lambda", r.lambda},
                       {"c", r.c},
                       {"h", r.h},
                       {"aug_lagrangian", r.aug_lagrangian},
                       {"inner_iterations", r.inner_iterations},
                       {"inner_converged", r.inner_converged},
                       {"inner_precision_limited", r.inner_precision_limited}});
  return {{"acyclicity", std::string(cfg.acyclicity.name())},
          {"weighted", cfg.noise_weighting.has_value()},
          {"alpha", cfg.alpha},
          {"converged", diag.converged},
          {"final_h", diag.final_h},
          {"final_objective", diag.final_objective},
          {"wall_ms", diag.wall_ms},
          {"outer", records}};
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw nndag::InputError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

struct SynthArgs {
  std::string family = "er";
  long d = 100;
  double avg_degree = 4.0;
  double weight_low = 0.5, weight_high = 2.0;
  long n = 1000;
  double sigma2 = 1.0;
  std::uint64_t seed = 1;
  std::string out_w = "W.csv", out_x = "X.csv";
};

int run_synth(const SynthArgs& a) {
  nndag::GraphSpec g;
  g.family = nndag::parse_graph_family(a.family);
  g.d = a.d;
  g.avg_degree = a.avg_degree;
  g.weight_low = a.weight_low;
  g.weight_high = a.weight_high;
  const auto w = nndag::gen_dag(g, nndag::derive_seed(a.seed, 1));
  const auto x = nndag::sample_sem(w, a.n, nndag::NoiseModel::isotropic(a.sigma2),
                                   nndag::derive_seed(a.seed, 2));
  nndag::write_matrix_csv(a.out_w, w);
  nndag::write_matrix_csv(a.out_x, x);
  std::cerr << "wrote " << a.out_w << " (" << w.rows() << "x" << w.cols() << ", "
            << (w.array() != 0.0).count() << " edges) and " << a.out_x << " ("
            << x.rows() << "x" << x.cols() << ")\n";
  return kExitOk;
}

struct SolveArgs {
  std::string x_path;
  std::string out = "W_hat.csv";
  std::string diag_path = "diagnostics.json";
  std::string method = "ldet";
  std::optional<double> sigma2;
  std::string variances_path;
  std::uint64_t seed = 0;
  nndag::SolverConfig cfg;
};

int run_solve(SolveArgs a) {
  const nndag::DataMatrix x = nndag::read_matrix_csv(a.x_path);
  a.cfg.acyclicity = nndag::parse_acyclicity(a.method, a.cfg.acyclicity.s);
  if (a.sigma2) a.cfg.noise_weighting = nndag::NoiseModel::isotropic(*a.sigma2);
  if (!a.variances_path.empty()) {
    const nndag::Matrix v = nndag::read_matrix_csv(a.variances_path);
    a.cfg.noise_weighting = nndag::NoiseModel::diagonal(v.reshaped());
  }
  try {
    auto [w_hat, diag] = nndag::solve(x, a.cfg, a.seed);
    nndag::write_matrix_csv(a.out, w_hat);
    write_json(a.diag_path, diagnostics_json(diag, a.cfg));
    std::cerr << "final h " << diag.final_h << ", objective " << diag.final_objective
              << ", " << diag.records.size() << " outer iterations\n";
    if (!diag.converged) {
      std::cerr << "error: h did not reach h_tol within kappa_max iterations\n";
      return kExitSolver;
    }
    return kExitOk;
  } catch (const nndag::SolverStalled& e) {
    write_json(a.diag_path, diagnostics_json(e.diagnostics(), a.cfg));
    std::cerr << "error: solver stalled: " << e.what() << '\n';
    return kExitSolver;
  }
}

struct MetricsArgs {
  std::string w_hat, w_star;
  double tau = 0.3;
  bool reversal_two = false;
};

int run_metrics(const MetricsArgs& a) {
  const auto w_hat = nndag::read_matrix_csv(a.w_hat);
  const auto w_star = nndag::read_matrix_csv(a.w_star);
  const auto cost = a.reversal_two ? nndag::ReversalCost::two : nndag::ReversalCost::one;
  const auto r = nndag::evaluate(w_hat, w_star, a.tau, cost);
  const json j = {{"nerr", r.nerr},
                  {"shd_normalized", r.shd_normalized},
                  {"shd", r.shd(cost)},
                  {"true_positives", r.true_positives},
                  {"false_positives", r.false_positives},
                  {"false_negatives", r.false_negatives},
                  {"reversed", r.reversed},
                  {"tau", a.tau}};
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

struct BenchArgs {
  std::string config_path;
  std::string case_name;
  std::string out_rows = "rows.csv";
  std::string out_summary = "summary.csv";
  std::string out_moments;
  std::optional<int> realizations;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string grid;
  std::string methods;
  bool quiet = false;
};

int run_bench(const BenchArgs& a) {
  nndag::KeyValues kv;
  if (!a.config_path.empty()) kv = nndag::read_config(a.config_path);
  if (!a.case_name.empty()) kv["case"] = a.case_name;
  if (a.realizations) kv["realizations"] = std::to_string(*a.realizations);
  if (a.seed) kv["seed"] = std::to_string(*a.seed);
  if (a.workers) kv["workers"] = std::to_string(*a.workers);
  if (!a.grid.empty()) kv["grid"] = a.grid;
  if (!a.methods.empty()) kv["methods"] = a.methods;
  const nndag::ExperimentSpec spec = nndag::build_experiment(kv);

  std::size_t done = 0;
  const std::size_t total = spec.families.size() * spec.grid.size() *
                            static_cast<std::size_t>(spec.realizations) *
                            spec.method_names.size();
  const auto rows = nndag::run_experiment(spec, [&](const nndag::ResultRow& r) {
    ++done;
    if (!a.quiet)
      std::cerr << "[" << done << "/" << total << "] " << r.method << " sweep=" << r.sweep
                << " rep=" << r.rep << (r.failed ? " FAILED " + r.error : "") << '\n';
  });

  std::ofstream rows_out(a.out_rows);
  if (!rows_out) throw nndag::InputError("cannot write '" + a.out_rows + "'");
  nndag::write_rows_csv(rows_out, rows);

  const auto summary = nndag::aggregate(rows);
  std::ofstream summary_out(a.out_summary);
  if (!summary_out) throw nndag::InputError("cannot write '" + a.out_summary + "'");
  nndag::write_summary_csv(summary_out, summary);
  if (!a.out_moments.empty()) {
    std::ofstream moments_out(a.out_moments);
    if (!moments_out) throw nndag::InputError("cannot write '" + a.out_moments + "'");
    nndag::write_moments_csv(moments_out, summary);
  }
  return kExitOk;
}

void add_solver_options(CLI::App* app, nndag::SolverConfig& cfg) {
  app->add_option("--alpha", cfg.alpha, "l1 weight");
  app->add_option("--s", cfg.acyclicity.s, "log-det scale s (ldet, dagma)");
  app->add_option("--lambda0", cfg.lambda0, "initial multiplier");
  app->add_option("--c0", cfg.c0, "initial penalty");
  app->add_option("--beta", cfg.beta, "penalty growth factor (> 1)");
  app->add_option("--gamma", cfg.gamma, "required h reduction factor in (0, 1)");
  app->add_option("--kappa-max", cfg.kappa_max, "outer iterations");
  app->add_option("--h-tol", cfg.h_tol, "acyclicity tolerance for early exit");
  app->add_option("--inner-max-iters", cfg.inner_max_iters, "inner iteration cap");
  app->add_option("--inner-grad-tol", cfg.inner_grad_tol, "projected-gradient tolerance");
  app->add_option("--step0", cfg.step0, "initial step");
  app->add_option("--backtrack", cfg.backtrack, "backtracking factor in (0, 1)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-negative weighted DAG structure learning"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "sample a random DAG and linear-SEM data");
  synth_cmd->add_option("--family", synth.family, "er | sf");
  synth_cmd->add_option("--d", synth.d, "nodes");
  synth_cmd->add_option("--avg-degree", synth.avg_degree, "average degree");
  synth_cmd->add_option("--weight-low", synth.weight_low, "lower edge weight");
  synth_cmd->add_option("--weight-high", synth.weight_high, "upper edge weight");
  synth_cmd->add_option("--n", synth.n, "samples");
  synth_cmd->add_option("--sigma2", synth.sigma2, "noise variance");
  synth_cmd->add_option("--seed", synth.seed, "random seed");
  synth_cmd->add_option("--out-w", synth.out_w, "ground-truth W CSV");
  synth_cmd->add_option("--out-x", synth.out_x, "observations CSV (d x n)");

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "learn W from observations");
  solve_cmd->add_option("--x", solve.x_path, "observations CSV (d x n)")
      ->required()
      ->check(CLI::ExistingFile);
  solve_cmd->add_option("--out", solve.out, "estimated W CSV");
  solve_cmd->add_option("--diag", solve.diag_path, "diagnostics JSON");
  solve_cmd->add_option("--method", solve.method, "ldet | mexp | notears | dagma");
  solve_cmd->add_option("--sigma2", solve.sigma2, "known isotropic noise variance (weighted score)");
  solve_cmd->add_option("--variances", solve.variances_path,
                        "CSV of per-node noise variances (weighted score)")
      ->check(CLI::ExistingFile);
  solve_cmd->add_option("--seed", solve.seed, "accepted for reproducibility records");
  add_solver_options(solve_cmd, solve.cfg);

  MetricsArgs metrics;
  auto* metrics_cmd = app.add_subcommand("metrics", "compare an estimate with the truth");
  metrics_cmd->add_option("--w-hat", metrics.w_hat, "estimated W CSV")
      ->required()
      ->check(CLI::ExistingFile);
  metrics_cmd->add_option("--w-star", metrics.w_star, "ground-truth W CSV")
      ->required()
      ->check(CLI::ExistingFile);
  metrics_cmd->add_option("--tau", metrics.tau, "support threshold for SHD");
  metrics_cmd->add_flag("--reversal-two", metrics.reversal_two,
                        "count a reversed edge as two changes");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "run a replicated sweep");
  bench_cmd->add_option("--config", bench.config_path, "key = value config file")
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--case", bench.case_name, "samples | nodes | noise | custom");
  bench_cmd->add_option("--out-rows", bench.out_rows, "per-run rows CSV");
  bench_cmd->add_option("--out-summary", bench.out_summary, "median/percentile CSV");
  bench_cmd->add_option("--out-moments", bench.out_moments, "mean/std CSV");
  bench_cmd->add_option("--realizations", bench.realizations, "realizations per point");
  bench_cmd->add_option("--seed", bench.seed, "base seed");
  bench_cmd->add_option("--workers", bench.workers, "worker threads (<= 0: all cores)");
  bench_cmd->add_option("--grid", bench.grid, "comma-separated sweep values");
  bench_cmd->add_option("--methods", bench.methods, "comma-separated methods");
  bench_cmd->add_flag("--quiet", bench.quiet, "no progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*synth_cmd) return run_synth(synth);
    if (*solve_cmd) return run_solve(solve);
    if (*metrics_cmd) return run_metrics(metrics);
    if (*bench_cmd) return run_bench(bench);
  } catch (const nndag::SolverStalled& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
