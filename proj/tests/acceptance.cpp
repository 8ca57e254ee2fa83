// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "nndag/nndag.hpp"
#include "oracles.hpp"

using namespace nndag;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void check(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs < limit_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::ostringstream line;
  line << (pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail << " ("
       << std::fixed;
  line.precision(1);
  line << secs << " s, limit " << limit_s << " s" << (in_time ? "" : ", TOO SLOW") << ")";
  std::cout << line.str() << std::endl;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Median of `metric` over rows with the given method and sweep value.
double median_of(const std::vector<ResultRow>& rows, const std::string& method, double sweep,
                 double ResultRow::*metric, int* failed = nullptr) {
  std::vector<double> v;
  int nfail = 0;
  for (const auto& r : rows)
    if (r.method == method && r.sweep == sweep) {
      if (r.failed) ++nfail;
      if (std::isfinite(r.*metric)) v.push_back(r.*metric);
    }
  if (failed) *failed = nfail;
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  return percentile_sorted(v, 0.5);
}

ExperimentSpec desk_spec(Index d) {
  ExperimentSpec s = preset(ExperimentCase::custom);
  s.graph.d = d;
  s.graph.avg_degree = 4.0;
  s.realizations = 10;
  s.seed0 = 1;
  s.workers = 0;
  return s;
}

Outcome property_suite() {
  Rng rng(2024);
  const AcyclicityFn ldet = AcyclicityFn::ldet();
  double min_h = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Matrix w = oracle::random_nonneg(rng, 10, rng.uniform(0.05, 0.6), rng.uniform(0.01, 0.99));
    const auto h = h_eval(ldet, w);
    if (!h) return {false, "random in-domain matrix rejected"};
    min_h = std::min(min_h, *h);
  }

  double max_dag_h = 0.0, min_closed_h = std::numeric_limits<double>::infinity();
  int closing_edges = 0;
  for (int t = 0; t < 100; ++t) {
    GraphSpec g;
    g.d = 10;
    g.avg_degree = 1.0 + static_cast<double>(t % 5);
    g.family = t % 2 ? GraphFamily::sf : GraphFamily::er;
    const Matrix w = gen_dag(g, derive_seed(7, static_cast<std::uint64_t>(t)));
    max_dag_h = std::max(max_dag_h, std::abs(*h_eval(ldet, w)));

    // reach(i, j): a directed path i -> ... -> j exists.
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> reach = (w.array() > 0.0).matrix();
    for (Index k = 0; k < 10; ++k)
      for (Index i = 0; i < 10; ++i)
        if (reach(i, k))
          for (Index j = 0; j < 10; ++j) reach(i, j) = reach(i, j) || reach(k, j);
    for (Index i = 0; i < 10; ++i)
      for (Index j = 0; j < 10; ++j) {
        if (!reach(i, j)) continue;
        // Close the cycle with j -> i, shrinking the weight until in domain.
        Matrix closed = w;
        double weight = 1.0;
        Result<double> h = DomainViolation::logdet_undefined;
        for (; weight > 1e-300; weight *= 0.5) {
          closed(j, i) = weight;
          h = h_eval(ldet, closed);
          if (h) break;
        }
        if (!h) return {false, "could not place a cycle-closing edge in domain"};
        min_closed_h = std::min(min_closed_h, *h);
        ++closing_edges;
      }
  }
  const bool pass = min_h >= -1e-12 && max_dag_h <= 1e-9 && min_closed_h > 1e-6;
  return {pass, "min h over 1000 matrices " + fmt(min_h) + ", max |h| on 100 DAGs " +
                    fmt(max_dag_h) + ", min h after " + std::to_string(closing_edges) +
                    " cycle-closing edges " + fmt(min_closed_h)};
}

Outcome gradient_checks() {
  Rng rng(99);
  double worst = 0.0;
  const AcyclicityFn fns[] = {AcyclicityFn::ldet(), AcyclicityFn::mexp(), AcyclicityFn::notears(),
                              AcyclicityFn::dagma()};
  for (const auto& fn : fns)
    for (int t = 0; t < 5; ++t) {
      const Matrix w = oracle::random_nonneg(rng, 6, 0.5, 0.6);
      const Matrix numeric =
          oracle::finite_difference([&](const Matrix& m) { return *h_eval(fn, m); }, w, 1e-5);
      worst = std::max(worst, oracle::relative_error(*h_grad(fn, w), numeric));
    }

  for (int variant = 0; variant < 2; ++variant)
    for (int t = 0; t < 5; ++t) {
      DataMatrix x(6, 50);
      for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
      Vector v(6);
      for (Index i = 0; i < 6; ++i) v(i) = rng.uniform(0.5, 3.0);
      const ScoreFn fn = variant == 0 ? ScoreFn{0.1} : ScoreFn{0.1, NoiseModel::diagonal(v)};
      const ScoreContext ctx = build_context(x, fn);
      // Interior point, so every central difference stays in W >= 0.
      Matrix w(6, 6);
      for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(0.1, 1.0);
      const Matrix numeric =
          oracle::finite_difference([&](const Matrix& m) { return score_eval(ctx, fn, m); }, w, 1e-5);
      worst = std::max(worst, oracle::relative_error(score_grad(ctx, fn, w), numeric));
    }
  return {worst <= 1e-5, "worst relative error " + fmt(worst) + " over 30 points"};
}

Outcome global_minimum() {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::uint64_t t = 0; t < 20; ++t) {
    GraphSpec g;
    g.d = 4;
    g.avg_degree = 2.0;
    const Matrix w_star = gen_dag(g, derive_seed(31, t, 1));
    const DataMatrix x = sample_sem(w_star, 1000, NoiseModel::isotropic(1.0), derive_seed(31, t, 2));
    SolverConfig cfg;
    const auto [w_hat, diag] = solve(x, cfg);
    const ScoreContext ctx = build_context(x, cfg.score_fn());
    const double found =
        score_eval(ctx, cfg.score_fn(), oracle::nearest_dag_by_threshold(w_hat));
    const auto best = oracle::best_over_orderings(ctx.gram(), ctx.residual_weight(), cfg.alpha);
    worst = std::max(worst, found - best.objective);
  }
  return {worst <= 1e-3, "worst gap to the ordering oracle " + fmt(worst)};
}

Outcome er_support() {
  ExperimentSpec s = desk_spec(50);
  s.grid = {1000};
  s.method_names = {"ldet"};
  int failed = 0;
  const auto rows = run_experiment(s);
  const double med = median_of(rows, "ldet", 1000, &ResultRow::shd, &failed);
  return {med <= 0.05, "median normalized SHD " + fmt(med) + " (" + std::to_string(failed) +
                           "/10 runs above h_tol)"};
}

std::vector<ResultRow> sample_rows;

Outcome consistency() {
  ExperimentSpec s = desk_spec(20);
  s.grid = {100, 1000, 10000};
  s.method_names = {"ldet", "mexp"};
  sample_rows = run_experiment(s);
  const double a = median_of(sample_rows, "ldet", 100, &ResultRow::nerr);
  const double b = median_of(sample_rows, "ldet", 1000, &ResultRow::nerr);
  const double c = median_of(sample_rows, "ldet", 10000, &ResultRow::nerr);
  return {a > b && b > c && c <= 0.02,
          "median nerr at n = 100, 1000, 10000: " + fmt(a) + ", " + fmt(b) + ", " + fmt(c)};
}

Outcome ldet_vs_mexp() {
  if (sample_rows.empty()) return {false, "consistency rows unavailable"};
  const double l = median_of(sample_rows, "ldet", 1000, &ResultRow::nerr);
  const double m = median_of(sample_rows, "mexp", 1000, &ResultRow::nerr);
  return {l <= m, "median nerr ldet " + fmt(l) + ", mexp " + fmt(m)};
}

Outcome noise_robustness() {
  ExperimentSpec s = desk_spec(20);
  s.sweep = SweepParam::sigma2;
  s.grid = {1, 10};
  s.method_names = {"ldet", "ldet-sigma"};
  const auto rows = run_experiment(s);
  const double w1 = median_of(rows, "ldet-sigma", 1, &ResultRow::nerr);
  const double w10 = median_of(rows, "ldet-sigma", 10, &ResultRow::nerr);
  const double u10 = median_of(rows, "ldet", 10, &ResultRow::nerr);
  return {w10 <= 2.0 * w1 && w10 <= u10, "weighted " + fmt(w1) + " at 1, " + fmt(w10) +
                                              " at 10; unweighted " + fmt(u10) + " at 10"};
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "nndag_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "bench.cfg");
    cfg << "case = samples\nd = 10\navg_degree = 2\ngrid = 200, 500\n"
           "methods = ldet, dagma\nrealizations = 3\nseed = 17\nworkers = 0\n";
  }
  auto run = [&](const std::string& tag) {
    const std::string cmd = std::string(NNDAG_CLI) + " bench --quiet --config " +
                            (dir / "bench.cfg").string() + " --out-rows " +
                            (dir / (tag + ".csv")).string() + " --out-summary " +
                            (dir / (tag + "_summary.csv")).string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  if (run("a") != 0 || run("b") != 0) return {false, "bench exited non-zero"};
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string a = slurp(dir / "a.csv"), b = slurp(dir / "b.csv");
  fs::remove_all(dir);
  return {!a.empty() && a == b, std::to_string(a.size()) + " bytes, " +
                                    (a == b ? "identical" : "different")};
}

}  // namespace

int main() {
  check(1, "log-det acyclicity properties", 10, property_suite);
  check(2, "analytic gradients vs finite differences", 10, gradient_checks);
  check(3, "global minimum on d=4 (20 instances)", 120, global_minimum);
  check(4, "ER support recovery, d=50, n=1000", 300, er_support);
  check(5, "consistency in n, d=20", 600, consistency);
  check(6, "ldet no worse than mexp at n=1000", 300, ldet_vs_mexp);
  check(7, "noise-weighted score stability", 300, noise_robustness);
  check(8, "bench rerun is byte-identical", 60, determinism);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
