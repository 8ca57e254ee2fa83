#pragma once

// Replicated benchmark sweeps: synthesize (W*, X) per realization, run every
// method on the same data, and summarize the metrics per sweep point.
//
// Config files are flat "key = value" text; '#' starts a comment. Every key
// maps onto one ExperimentSpec field (see apply_setting). A config starts from
// the preset named by its `case` key and overrides from there.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nndag/errors.hpp"
#include "nndag/graph.hpp"
#include "nndag/matrix_io.hpp"
#include "nndag/metrics.hpp"
#include "nndag/solver.hpp"

namespace nndag {

enum class ExperimentCase { samples, nodes, noise, custom };

/// Quantity varied along the grid.
enum class SweepParam { n, d, sigma2, alpha, avg_degree };

inline std::string_view to_string(ExperimentCase c) {
  switch (c) {
    case ExperimentCase::samples: return "samples";
    case ExperimentCase::nodes: return "nodes";
    case ExperimentCase::noise: return "noise";
    case ExperimentCase::custom: return "custom";
  }
  return "?";
}

inline ExperimentCase parse_case(std::string_view s) {
  if (s == "samples") return ExperimentCase::samples;
  if (s == "nodes") return ExperimentCase::nodes;
  if (s == "noise") return ExperimentCase::noise;
  if (s == "custom") return ExperimentCase::custom;
  throw ConfigError("unknown case '" + std::string(s) + "'");
}

inline SweepParam parse_sweep_param(std::string_view s) {
  if (s == "n") return SweepParam::n;
  if (s == "d") return SweepParam::d;
  if (s == "sigma2") return SweepParam::sigma2;
  if (s == "alpha") return SweepParam::alpha;
  if (s == "avg_degree") return SweepParam::avg_degree;
  throw ConfigError("unknown sweep parameter '" + std::string(s) + "'");
}

/// A named solver configuration. `weighted` methods use the true noise model
/// of each realization as their score weighting.
struct MethodSpec {
  std::string name;
  SolverConfig config;
  bool weighted = false;
};

/// "ldet", "mexp", "notears", "dagma", optionally suffixed "-sigma" for the
/// noise-weighted score.
inline MethodSpec parse_method(const std::string& name, const SolverConfig& base) {
  MethodSpec m;
  m.name = name;
  m.config = base;
  std::string fn = name;
  constexpr std::string_view kSuffix = "-sigma";
  if (fn.size() > kSuffix.size() &&
      fn.compare(fn.size() - kSuffix.size(), kSuffix.size(), kSuffix) == 0) {
    m.weighted = true;
    fn.resize(fn.size() - kSuffix.size());
  }
  m.config.acyclicity = parse_acyclicity(fn, base.acyclicity.s);
  return m;
}

struct ExperimentSpec {
  ExperimentCase kind = ExperimentCase::samples;
  SweepParam sweep = SweepParam::n;
  std::vector<double> grid;
  GraphSpec graph;
  std::vector<GraphFamily> families{GraphFamily::er};
  Index n = 1000;
  NoiseModel noise = NoiseModel::isotropic(1.0);
  SolverConfig solver;  ///< shared settings; methods copy it
  std::vector<std::string> method_names;
  int realizations = 100;
  std::uint64_t seed0 = 1;
  int workers = 1;
  double tau = 0.3;
  ReversalCost reversal = ReversalCost::one;
  /// Wall time breaks byte-identical reruns, so it is opt-in.
  bool record_wall_time = false;

  std::vector<MethodSpec> methods() const {
    std::vector<MethodSpec> out;
    for (const auto& name : method_names) out.push_back(parse_method(name, solver));
    return out;
  }

  void validate() const {
    if (grid.empty()) throw ConfigError("sweep grid is empty");
    if (realizations < 1) throw ConfigError("realizations must be >= 1");
    if (method_names.empty()) throw ConfigError("no methods given");
    if (families.empty()) throw ConfigError("no graph families given");
    if (tau < 0.0) throw ConfigError("tau must be >= 0");
    solver.validate();
    (void)methods();
    for (double v : grid)
      if (!std::isfinite(v)) throw ConfigError("grid values must be finite");
  }
};

/// Full-size presets. Realizations default to 100; reduce for quick runs.
inline ExperimentSpec preset(ExperimentCase kind) {
  ExperimentSpec s;
  s.kind = kind;
  s.graph.d = 100;
  s.graph.avg_degree = 4.0;
  switch (kind) {
    case ExperimentCase::samples:
      s.sweep = SweepParam::n;
      s.grid = {50, 100, 500, 1000, 5000};
      s.method_names = {"ldet", "mexp", "dagma", "notears"};
      break;
    case ExperimentCase::nodes:
      s.sweep = SweepParam::d;
      s.grid = {50, 100, 250, 500};
      s.families = {GraphFamily::er, GraphFamily::sf};
      s.method_names = {"ldet", "dagma"};
      break;
    case ExperimentCase::noise:
      s.sweep = SweepParam::sigma2;
      s.grid = {1, 2, 4, 6, 8, 10};
      s.method_names = {"ldet", "ldet-sigma", "dagma"};
      break;
    case ExperimentCase::custom:
      s.sweep = SweepParam::n;
      s.grid = {1000};
      s.method_names = {"ldet"};
      break;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Config parsing

using KeyValues = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

inline long long to_int(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

}  // namespace detail

inline KeyValues parse_config(std::istream& in) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  return kv;
}

inline KeyValues read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path + "'");
  return parse_config(in);
}

/// Applies one config key to a spec.
inline void apply_setting(ExperimentSpec& s, const std::string& key,
                          const std::string& v) {
  using detail::to_double;
  using detail::to_int;
  SolverConfig& sc = s.solver;
  if (key == "case") {
    s.kind = parse_case(v);
  } else if (key == "sweep") {
    s.sweep = parse_sweep_param(v);
  } else if (key == "grid") {
    s.grid.clear();
    for (const auto& item : detail::split_list(v)) s.grid.push_back(to_double(key, item));
  } else if (key == "family") {
    s.families.clear();
    for (const auto& item : detail::split_list(v))
      s.families.push_back(parse_graph_family(item));
  } else if (key == "d") {
    s.graph.d = to_int(key, v);
  } else if (key == "avg_degree") {
    s.graph.avg_degree = to_double(key, v);
  } else if (key == "weight_low") {
    s.graph.weight_low = to_double(key, v);
  } else if (key == "weight_high") {
    s.graph.weight_high = to_double(key, v);
  } else if (key == "n") {
    s.n = to_int(key, v);
  } else if (key == "sigma2") {
    s.noise = NoiseModel::isotropic(to_double(key, v));
  } else if (key == "methods") {
    s.method_names = detail::split_list(v);
  } else if (key == "realizations") {
    s.realizations = static_cast<int>(to_int(key, v));
  } else if (key == "seed") {
    s.seed0 = static_cast<std::uint64_t>(to_int(key, v));
  } else if (key == "workers") {
    s.workers = static_cast<int>(to_int(key, v));
  } else if (key == "tau") {
    s.tau = to_double(key, v);
    sc.tau_threshold = s.tau;
  } else if (key == "reversal") {
    if (v == "one") s.reversal = ReversalCost::one;
    else if (v == "two") s.reversal = ReversalCost::two;
    else throw ConfigError("reversal: expected one|two");
  } else if (key == "record_wall_time") {
    s.record_wall_time = detail::to_bool(key, v);
  } else if (key == "alpha") {
    sc.alpha = to_double(key, v);
  } else if (key == "s") {
    sc.acyclicity.s = to_double(key, v);
  } else if (key == "lambda0") {
    sc.lambda0 = to_double(key, v);
  } else if (key == "c0") {
    sc.c0 = to_double(key, v);
  } else if (key == "beta") {
    sc.beta = to_double(key, v);
  } else if (key == "gamma") {
    sc.gamma = to_double(key, v);
  } else if (key == "kappa_max") {
    sc.kappa_max = static_cast<int>(to_int(key, v));
  } else if (key == "h_tol") {
    sc.h_tol = to_double(key, v);
  } else if (key == "inner_max_iters") {
    sc.inner_max_iters = static_cast<int>(to_int(key, v));
  } else if (key == "inner_grad_tol") {
    sc.inner_grad_tol = to_double(key, v);
  } else if (key == "step0") {
    sc.step0 = to_double(key, v);
  } else if (key == "backtrack") {
    sc.backtrack = to_double(key, v);
  } else if (key == "bb_steps") {
    sc.bb_steps = detail::to_bool(key, v);
  } else if (key == "diagonal_scaling") {
    sc.diagonal_scaling = detail::to_bool(key, v);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

/// Preset for kv["case"] (default samples) with every other key applied.
inline ExperimentSpec build_experiment(const KeyValues& kv) {
  const auto it = kv.find("case");
  ExperimentSpec s = preset(it == kv.end() ? ExperimentCase::samples : parse_case(it->second));
  for (const auto& [key, value] : kv)
    if (key != "case") apply_setting(s, key, value);
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Running

struct ResultRow {
  std::string case_name;
  std::string method;
  double sweep = 0.0;
  int rep = 0;
  std::uint64_t seed = 0;
  double nerr = std::numeric_limits<double>::quiet_NaN();
  double shd = std::numeric_limits<double>::quiet_NaN();
  double final_h = std::numeric_limits<double>::quiet_NaN();
  int iters = 0;
  double wall_ms = 0.0;
  bool failed = false;

  // Not serialized.
  std::uint64_t data_hash = 0;
  std::string error;
};

/// FNV-1a over the bytes of W* and X.
inline std::uint64_t hash_data(const AdjMatrix& w, const DataMatrix& x) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const Matrix& m) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
    const std::size_t len = static_cast<std::size_t>(m.size()) * sizeof(double);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  mix(w);
  mix(x);
  return h;
}

/// Worker count after the NNDAG_WORKERS override; <= 0 means all cores.
inline int effective_workers(const ExperimentSpec& spec) {
  int workers = spec.workers;
  if (const char* env = std::getenv("NNDAG_WORKERS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0') workers = static_cast<int>(v);
  }
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return workers;
}

/// Seed of realization `rep` at grid point `point` for graph family `family`.
inline std::uint64_t run_seed(std::uint64_t seed0, std::size_t family, std::size_t point,
                              int rep) {
  return derive_seed(seed0, family, point, static_cast<std::uint64_t>(rep));
}

namespace detail {

struct PointSetup {
  GraphSpec graph;
  Index n = 0;
  NoiseModel noise;
  double alpha = 0.0;
};

inline PointSetup point_setup(const ExperimentSpec& spec, GraphFamily family, double value) {
  PointSetup p{spec.graph, spec.n, spec.noise, spec.solver.alpha};
  p.graph.family = family;
  switch (spec.sweep) {
    case SweepParam::n: p.n = static_cast<Index>(std::llround(value)); break;
    case SweepParam::d: p.graph.d = static_cast<Index>(std::llround(value)); break;
    case SweepParam::sigma2: p.noise = NoiseModel::isotropic(value); break;
    case SweepParam::alpha: p.alpha = value; break;
    case SweepParam::avg_degree: p.graph.avg_degree = value; break;
  }
  return p;
}

}  // namespace detail

/// Runs every (family, grid point, realization) task and returns rows in
/// canonical order: family, grid point, realization, method. `on_row`, if set,
/// sees each row as it completes (serialized, in completion order).
inline std::vector<ResultRow> run_experiment(
    const ExperimentSpec& spec,
    const std::function<void(const ResultRow&)>& on_row = {}) {
  spec.validate();
  const std::vector<MethodSpec> methods = spec.methods();
  const bool label_family = spec.families.size() > 1;

  struct Task {
    std::size_t family, point;
    int rep;
  };
  std::vector<Task> tasks;
  for (std::size_t f = 0; f < spec.families.size(); ++f)
    for (std::size_t p = 0; p < spec.grid.size(); ++p)
      for (int r = 0; r < spec.realizations; ++r) tasks.push_back({f, p, r});

  std::vector<std::vector<ResultRow>> results(tasks.size());
  std::mutex emit_mutex;

  auto run_task = [&](std::size_t index) {
    const Task& task = tasks[index];
    const GraphFamily family = spec.families[task.family];
    const double value = spec.grid[task.point];
    const std::uint64_t seed = run_seed(spec.seed0, task.family, task.point, task.rep);

    std::vector<ResultRow> rows;
    auto base_row = [&](const MethodSpec& m) {
      ResultRow row;
      row.case_name = std::string(to_string(spec.kind));
      row.method = m.name;
      if (label_family) row.method += "-" + std::string(to_string(family));
      row.sweep = value;
      row.rep = task.rep;
      row.seed = seed;
      return row;
    };

    try {
      const detail::PointSetup setup = detail::point_setup(spec, family, value);
      const AdjMatrix w_star = gen_dag(setup.graph, derive_seed(seed, 1));
      const DataMatrix x = sample_sem(w_star, setup.n, setup.noise, derive_seed(seed, 2));
      const std::uint64_t data_hash = hash_data(w_star, x);

      for (const MethodSpec& m : methods) {
        ResultRow row = base_row(m);
        row.data_hash = data_hash;
        SolverConfig cfg = m.config;
        cfg.alpha = setup.alpha;
        if (m.weighted) cfg.noise_weighting = setup.noise;
        const auto start = std::chrono::steady_clock::now();
        try {
          auto [w_hat, diag] = solve(x, cfg, seed);
          const MetricReport report = evaluate(w_hat, w_star, spec.tau, spec.reversal);
          row.nerr = report.nerr;
          row.shd = report.shd_normalized;
          row.final_h = diag.final_h;
          row.iters = diag.total_inner_iterations();
          row.failed = !diag.converged;
        } catch (const std::exception& e) {
          row.failed = true;
          row.error = e.what();
        }
        if (spec.record_wall_time)
          row.wall_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count();
        rows.push_back(std::move(row));
      }
    } catch (const std::exception& e) {
      // Data generation failed (invalid point); every method fails with it.
      for (const MethodSpec& m : methods) {
        ResultRow row = base_row(m);
        row.failed = true;
        row.error = e.what();
        rows.push_back(std::move(row));
      }
    }

    if (on_row) {
      std::lock_guard lock(emit_mutex);
      for (const auto& row : rows) on_row(row);
    }
    results[index] = std::move(rows);
  };

  const int workers =
      std::min<int>(effective_workers(spec), static_cast<int>(tasks.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) run_task(i);
      });
    for (auto& th : pool) th.join();
  }

  std::vector<ResultRow> rows;
  for (auto& group : results)
    for (auto& row : group) rows.push_back(std::move(row));
  return rows;
}

// ---------------------------------------------------------------------------
// Aggregation

/// Linear-interpolation percentile of sorted values: position p (N - 1).
inline double percentile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw AggregationError("percentile of an empty set");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct SummaryRow {
  std::string case_name;
  std::string method;
  double sweep = 0.0;
  std::string metric;
  double median = 0.0, p25 = 0.0, p75 = 0.0;
  double mean = 0.0, stddev = 0.0;  ///< sample standard deviation
  int count = 0;                    ///< finite values used
};

/// Per (method, sweep value) statistics of nerr, shd, final_h and iters, in
/// order of first appearance. Non-finite values (failed runs) are skipped; a
/// metric with no finite value reports nan.
inline std::vector<SummaryRow> aggregate(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw AggregationError("no rows to aggregate");
  struct Group {
    std::string case_name, method;
    double sweep;
    std::vector<const ResultRow*> members;
  };
  std::vector<Group> groups;
  for (const auto& row : rows) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.case_name == row.case_name && g.method == row.method && g.sweep == row.sweep;
    });
    if (it == groups.end()) {
      groups.push_back({row.case_name, row.method, row.sweep, {}});
      it = std::prev(groups.end());
    }
    it->members.push_back(&row);
  }

  using Getter = double (*)(const ResultRow&);
  const std::pair<const char*, Getter> metrics[] = {
      {"nerr", [](const ResultRow& r) { return r.nerr; }},
      {"shd", [](const ResultRow& r) { return r.shd; }},
      {"final_h", [](const ResultRow& r) { return r.final_h; }},
      {"iters", [](const ResultRow& r) {
         return r.error.empty() ? static_cast<double>(r.iters)
                                : std::numeric_limits<double>::quiet_NaN();
       }},
  };

  std::vector<SummaryRow> out;
  for (const Group& g : groups) {
    for (const auto& [name, get] : metrics) {
      std::vector<double> values;
      for (const ResultRow* r : g.members)
        if (const double v = get(*r); std::isfinite(v)) values.push_back(v);
      SummaryRow s;
      s.case_name = g.case_name;
      s.method = g.method;
      s.sweep = g.sweep;
      s.metric = name;
      s.count = static_cast<int>(values.size());
      if (values.empty()) {
        s.median = s.p25 = s.p75 = s.mean = s.stddev =
            std::numeric_limits<double>::quiet_NaN();
      } else {
        std::sort(values.begin(), values.end());
        s.median = percentile_sorted(values, 0.5);
        s.p25 = percentile_sorted(values, 0.25);
        s.p75 = percentile_sorted(values, 0.75);
        s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
                 static_cast<double>(values.size());
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1))
                                     : 0.0;
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV output (12 significant digits)

inline void write_rows_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "case,method,sweep,rep,seed,nerr,shd,final_h,iters,wall_ms,failed\n";
  for (const auto& r : rows) {
    out << r.case_name << ',' << r.method << ',' << format_number(r.sweep, 12) << ','
        << r.rep << ',' << r.seed << ',' << format_number(r.nerr, 12) << ','
        << format_number(r.shd, 12) << ',' << format_number(r.final_h, 12) << ','
        << r.iters << ',' << format_number(r.wall_ms, 12) << ',' << (r.failed ? 1 : 0)
        << '\n';
  }
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "case,method,sweep,metric,median,p25,p75\n";
  for (const auto& s : rows)
    out << s.case_name << ',' << s.method << ',' << format_number(s.sweep, 12) << ','
        << s.metric << ',' << format_number(s.median, 12) << ','
        << format_number(s.p25, 12) << ',' << format_number(s.p75, 12) << '\n';
}

/// Mean / standard deviation companion to the percentile summary.
inline void write_moments_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "case,method,sweep,metric,mean,std,count\n";
  for (const auto& s : rows)
    out << s.case_name << ',' << s.method << ',' << format_number(s.sweep, 12) << ','
        << s.metric << ',' << format_number(s.mean, 12) << ','
        << format_number(s.stddev, 12) << ',' << s.count << '\n';
}

}  // namespace nndag
