#pragma once

// Experiment drivers: worst-case sweeps, indistinguishability witnesses, the
// affine-context and support-hit audits, reports, and the gadget catalog.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "adaptlab/descriptors.hpp"
#include "adaptlab/errors.hpp"
#include "adaptlab/format.hpp"
#include "adaptlab/gadgets.hpp"
#include "adaptlab/learners.hpp"
#include "adaptlab/tasks.hpp"

namespace adaptlab {

inline constexpr int kReportSchemaVersion = 1;

inline constexpr const char* kLowerBoundNote =
    "Lower bounds quantified over every ReLU network with at most m weights are not checked empirically. "
    "This report covers their constructive skeleton only: affine contexts, collision pairs, support hitting "
    "and the delta budget.";

// ---------------------------------------------------------------------------
// Evaluation points

/// Per-axis uniform grid size used when none is requested.
inline std::size_t default_grid(std::size_t d) {
  switch (d) {
    case 1: return 10000;
    case 2: return 256;
    case 3: return 64;
    default: return 16;
  }
}

/// Coordinates along `axis` where the task or the context introduces a kink:
/// bump plateau and support faces, hat centres and feet, and every query
/// coordinate (plus its delta neighbours for hat families).
inline std::vector<double> breakpoints(const Task& task, const Context& ctx, std::size_t axis) {
  std::vector<double> b;
  double reach = 0.0;
  if (const auto* p = std::get_if<PathTask>(&task)) {
    for (const auto& c : p->path.cubes()) {
      const double center = c.center()[axis], l = c.side_length();
      for (double off : {0.0, p->eta * l, 0.5 * l}) {
        b.push_back(center - off);
        b.push_back(center + off);
      }
    }
  } else {
    std::size_t n = 0;
    double delta = 0.0;
    std::vector<double> extra;
    if (const auto* v = std::get_if<ValueTask>(&task)) {
      n = v->n_budget;
      delta = v->delta;
      extra = {v->q_star};
    } else {
      const auto& a = std::get<AddressTask>(task);
      n = a.n_budget;
      delta = a.delta;
      extra = {a.q_star};
    }
    auto centers = static_points(n);
    centers.insert(centers.end(), extra.begin(), extra.end());
    for (double c : centers)
      for (double off : {-delta, 0.0, delta}) b.push_back(c + off);
    reach = delta;
  }
  for (const auto& o : ctx)
    for (double off : {-reach, 0.0, reach}) b.push_back(o.query[axis] + off);
  std::vector<double> out;
  for (double v : b)
    if (v >= 0.0 && v <= 1.0) out.push_back(v);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace harness_detail {

/// Calls fn on every point of the tensor product of the per-axis sets.
template <class Fn>
void for_each_product(const std::vector<std::vector<double>>& axes, Fn&& fn) {
  const std::size_t d = axes.size();
  for (const auto& a : axes)
    if (a.empty()) return;
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  while (true) {
    for (std::size_t i = 0; i < d; ++i) x[i] = axes[i][idx[i]];
    fn(std::span<const double>(x));
    std::size_t i = d;
    while (i > 0) {
      --i;
      if (++idx[i] < axes[i].size()) break;
      idx[i] = 0;
      if (i == 0) return;
    }
  }
}

}  // namespace harness_detail

/// Uniform grid with `grid` points per axis (endpoints included), followed
/// by the tensor product of the per-axis breakpoints.
template <class Fn>
void for_each_evaluation_point(const Task& task, const Context& ctx, std::size_t grid, Fn&& fn) {
  const std::size_t d = task_dim(task);
  require(grid >= 2, "grid >= 2", "grid = " + std::to_string(grid));
  std::vector<double> axis(grid);
  for (std::size_t k = 0; k < grid; ++k) axis[k] = static_cast<double>(k) / static_cast<double>(grid - 1);
  harness_detail::for_each_product(std::vector<std::vector<double>>(d, axis), fn);
  std::vector<std::vector<double>> kinks;
  for (std::size_t i = 0; i < d; ++i) kinks.push_back(breakpoints(task, ctx, i));
  harness_detail::for_each_product(kinks, fn);
}

inline double sup_error(const Task& task, const RunResult& run, std::size_t grid) {
  double worst = 0.0;
  for_each_evaluation_point(task, run.context, grid, [&](std::span<const double> x) {
    const double e = std::abs(run.predict(x) - evaluate_task(task, x));
    if (!(e <= worst)) worst = std::isnan(e) ? INFINITY : e;
  });
  return worst;
}

// ---------------------------------------------------------------------------
// Reports

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct TaskRecord {
  std::size_t index = 0;
  double error = 0.0;
  std::size_t n_queries = 0;
  nlohmann::json task;
};

struct ExperimentReport {
  std::string experiment;
  nlohmann::json parameters = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string sampling;
  std::vector<TaskRecord> tasks;
  double worst_error = 0.0;
  std::size_t n_queries = 0;
  std::size_t max_weights = 0;
  nlohmann::json witnesses = nlohmann::json::array();
  std::vector<Check> checks;
  nlohmann::json details = nlohmann::json::object();
  std::optional<double> wall_time_ms;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
};

inline nlohmann::json to_json(const ExperimentReport& r) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& t : r.tasks)
    tasks.push_back({{"index", t.index}, {"error", t.error}, {"n_queries", t.n_queries}, {"task", t.task}});
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  return {{"schema_version", kReportSchemaVersion},
          {"experiment", r.experiment},
          {"parameters", r.parameters},
          {"seed", r.seed},
          {"sampling", r.sampling},
          {"worst_error", r.worst_error},
          {"n_queries", r.n_queries},
          {"max_weights", r.max_weights},
          {"tasks", tasks},
          {"witnesses", r.witnesses},
          {"checks", checks},
          {"details", r.details},
          {"all_pass", r.all_pass()},
          {"wall_time_ms", r.wall_time_ms ? nlohmann::json(*r.wall_time_ms) : nlohmann::json(nullptr)},
          {"note", kLowerBoundNote}};
}

/// One header row and one data row. Parameter columns follow the sorted
/// parameter keys; wall_time_ms is empty when timing was not requested.
inline std::string to_csv(const ExperimentReport& r) {
  auto cell = [](const nlohmann::json& v) {
    if (v.is_null()) return std::string();
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return format_real(v.get<double>());
    return v.dump();
  };
  std::ostringstream head, row;
  head << "experiment";
  row << r.experiment;
  for (const auto& [k, v] : r.parameters.items()) {
    head << ',' << k;
    row << ',' << cell(v);
  }
  head << ",seed,worst_error,n_queries,max_weights,wall_time_ms\n";
  row << ',' << r.seed << ',' << format_real(r.worst_error) << ',' << r.n_queries << ',' << r.max_weights << ','
      << (r.wall_time_ms ? format_real(*r.wall_time_ms) : "") << '\n';
  return head.str() + row.str();
}

// ---------------------------------------------------------------------------
// Worst-case sweeps

using TaskSampler = std::function<Task(std::mt19937_64&)>;
using LearnerRun = std::function<RunResult(const Task&)>;

inline LearnerRun runner(const InContextLearner& l) {
  return [&l](const Task& t) { return run_in_context(l, t); };
}
inline LearnerRun runner(const AgenticLearner& l) {
  return [&l](const Task& t) { return run_agentic(l, t); };
}

struct SweepOptions {
  std::size_t n_tasks = 100;
  std::size_t grid = 0;  // per-axis points; 0 selects default_grid(d)
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 selects hardware_concurrency
  bool timing = false;
};

/// Runs `body(i)` for i in [0, n) on a worker pool. Results must be written
/// to slot i by the body; the first exception in index order is rethrown.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](unsigned w) {
    for (std::size_t i = w; i < n; i += threads) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Samples tasks sequentially from the seed, evaluates them in parallel and
/// reduces in task order, so the report does not depend on thread count.
inline ExperimentReport sweep_worst_case(const LearnerRun& run, std::size_t learner_dim, std::size_t max_weights,
                                         const TaskSampler& sampler, const SweepOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(opt.seed);
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < opt.n_tasks; ++i) {
    tasks.push_back(sampler(rng));
    require(task_dim(tasks.back()) == learner_dim, "compatible learner/family",
            "task dimension " + std::to_string(task_dim(tasks.back())) + " vs learner " + std::to_string(learner_dim));
  }
  const std::size_t grid = opt.grid ? opt.grid : default_grid(learner_dim);
  ExperimentReport r;
  r.seed = opt.seed;
  r.max_weights = max_weights;
  r.tasks.resize(tasks.size());
  parallel_for(tasks.size(), opt.threads, [&](std::size_t i) {
    const RunResult res = run(tasks[i]);
    r.tasks[i] = {i, sup_error(tasks[i], res, grid), res.context.size(), to_json(tasks[i])};
  });
  for (const auto& t : r.tasks) {
    r.worst_error = std::max(r.worst_error, t.error);
    r.n_queries = std::max(r.n_queries, t.n_queries);
  }
  r.parameters["grid"] = grid;
  r.parameters["n_tasks"] = opt.n_tasks;
  if (opt.timing)
    r.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

template <class Learner>
ExperimentReport sweep_worst_case(const Learner& learner, const TaskSampler& sampler, const SweepOptions& opt) {
  auto r = sweep_worst_case(runner(learner), learner.dim, learner.weight_count(), sampler, opt);
  r.experiment = learner.kind;
  return r;
}

// Documented sampling schemes.
inline constexpr const char* kPathSampling =
    "uniform over nested paths: a uniform level-1 cube, then independent uniform child choices";
inline constexpr const char* kHatSampling =
    "uniform over coefficients: s uniform in the unit cube, q* uniform in [2/3,1], beta a fair coin";

inline TaskSampler path_sampler(std::size_t d, std::size_t depth, double eta) {
  return [=](std::mt19937_64& rng) -> Task { return make_path_task(random_path(d, depth, rng), eta); };
}

inline TaskSampler value_sampler(std::size_t n_budget, double delta, HardFunctionPtr g) {
  return [=](std::mt19937_64& rng) -> Task { return random_value_task(n_budget, delta, g, rng); };
}

inline TaskSampler address_sampler(std::size_t n_budget, double delta, HardFunctionPtr g) {
  return [=](std::mt19937_64& rng) -> Task { return random_address_task(n_budget, delta, g, rng); };
}

// ---------------------------------------------------------------------------
// Witness pairs

struct WitnessPair {
  Task task_a;
  Task task_b;
  std::vector<Point> shared_queries;
  Context shared_context;
  Point witness_point;
  double separation = 0.0;
};

inline Context context_of(const Task& task, const std::vector<Point>& queries) {
  Context ctx;
  for (const auto& q : queries) ctx.push_back({q, evaluate_task(task, q)});
  return ctx;
}

/// Largest response difference between two contexts on the same queries.
inline double context_gap(const Context& a, const Context& b) {
  require(a.size() == b.size(), "contexts of equal length", "");
  double gap = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    require(a[i].query == b[i].query, "contexts on identical queries", "position " + std::to_string(i));
    gap = std::max(gap, std::abs(a[i].response - b[i].response));
  }
  return gap;
}

/// Re-evaluates both tasks and throws InvariantError if the contexts differ
/// by more than `tol` or the separation at the witness point is not met.
inline void verify_witness(const WitnessPair& w, double tol = 1e-12) {
  const auto ca = context_of(w.task_a, w.shared_queries), cb = context_of(w.task_b, w.shared_queries);
  const double gap = context_gap(ca, cb);
  if (gap > tol) throw InvariantError("witness contexts differ by " + format_real(gap));
  const double sep = std::abs(evaluate_task(w.task_a, w.witness_point) - evaluate_task(w.task_b, w.witness_point));
  if (std::abs(sep - w.separation) > tol)
    throw InvariantError("witness separation " + format_real(sep) + " != recorded " + format_real(w.separation));
}

inline nlohmann::json to_json(const WitnessPair& w) {
  return {{"task_a", to_json(w.task_a)},       {"task_b", to_json(w.task_b)},
          {"shared_queries", w.shared_queries}, {"shared_context", to_json(w.shared_context)},
          {"witness_point", w.witness_point},   {"separation", w.separation}};
}

inline WitnessPair witness_from_json(const nlohmann::json& j) {
  WitnessPair w{task_from_json(j.at("task_a")), task_from_json(j.at("task_b")),
                j.at("shared_queries").get<std::vector<Point>>(), {}, j.at("witness_point").get<Point>(),
                j.at("separation").get<double>()};
  w.shared_context = context_of(w.task_a, w.shared_queries);
  return w;
}

/// First level-(L-1) cube, in lexicographic index order, that contains no
/// query under the half-open cell convention.
inline std::optional<CubeIndex> find_uncovered_cube(const std::vector<Point>& queries, std::size_t d, std::size_t depth) {
  require(d >= 1 && depth >= 1, "d >= 1 and L >= 1", "");
  const int level = static_cast<int>(depth) - 1;
  std::set<std::vector<std::int64_t>> covered;
  for (const auto& q : queries) {
    if (q.size() != d) throw DimensionError("query dimension " + std::to_string(q.size()) + " != d");
    covered.insert(cell_of(q, level).index);
  }
  const std::int64_t cells = std::int64_t{1} << level;
  std::vector<std::int64_t> idx(d, 0);
  while (true) {
    if (!covered.count(idx)) return CubeIndex{level, idx};
    std::size_t i = d;
    while (i > 0) {
      --i;
      if (++idx[i] < cells) break;
      idx[i] = 0;
      if (i == 0) return std::nullopt;
    }
  }
}

/// Two paths through an uncovered level-(L-1) cube Q that differ only in
/// their level-L cube (first and last child of Q). Both bumps vanish outside
/// Q, so the contexts agree; at the centre of the first child they differ by 1.
inline WitnessPair path_witness(const std::vector<Point>& queries, std::size_t d, std::size_t depth, double eta) {
  require(d >= 1 && depth >= 1 && d * (depth - 1) < 63, "d >= 1, L >= 1", "");
  const std::size_t cells = std::size_t{1} << (d * (depth - 1));
  require(queries.size() < cells, "|queries| < 2^{d(L-1)}",
          std::to_string(queries.size()) + " queries, " + std::to_string(cells) + " cubes");
  const auto cube = find_uncovered_cube(queries, d, depth);
  if (!cube) throw InvariantError("no uncovered cube despite |queries| < 2^{d(L-1)}");
  std::vector<CubeIndex> prefix;
  if (cube->level >= 1) prefix = path_to(*cube).cubes();
  const auto kids = cube->children();
  auto with_child = [&](const CubeIndex& c) {
    auto cubes = prefix;
    cubes.push_back(c);
    return Task(make_path_task(CubicalPath(std::move(cubes)), eta));
  };
  WitnessPair w{with_child(kids.front()), with_child(kids.back()), queries, {}, kids.front().center(), 0.0};
  w.shared_context = context_of(w.task_a, queries);
  w.separation = std::abs(evaluate_task(w.task_a, w.witness_point) - evaluate_task(w.task_b, w.witness_point));
  if (context_gap(w.shared_context, context_of(w.task_b, queries)) != 0.0)
    throw InvariantError("path witness contexts differ");
  return w;
}

/// Smallest point of [2/3, 1] (up to `margin`) farther than delta from every
/// query: sweep upward, jumping past each delta-neighbourhood that covers y.
inline double first_clear_point(std::vector<double> xi, double delta, double margin) {
  std::sort(xi.begin(), xi.end());
  double y = 2.0 / 3.0;
  for (double x : xi)
    if (std::abs(y - x) <= delta) y = x + delta + margin;
  if (y > 1.0) throw InvariantError("no point of [2/3,1] avoids every query neighbourhood");
  return y;
}

inline double clear_margin(std::size_t n, double delta) {
  return std::min(delta / 4.0, (1.0 / 3.0 - 2.0 * static_cast<double>(n) * delta) / (2.0 * static_cast<double>(n)));
}

/// Pair (beta = 0, beta = 1) whose spike sits at a point y in [2/3, 1] that no
/// query sees. Requires an invertible address function so y = q*(s) for
/// some s.
inline WitnessPair address_witness(const std::vector<double>& queries, std::size_t n_budget, double delta,
                                   const HardFunctionPtr& g) {
  require(queries.size() == n_budget, "|queries| = N",
          std::to_string(queries.size()) + " queries, N = " + std::to_string(n_budget));
  validate_hat_family(n_budget, delta);
  require(g && g->kind() == HardKind::invertible_address, "invertible-address mode", "");
  require(g->input_dim() == n_budget - 1, "address function input_dim = N-1", "");
  const double y = first_clear_point(queries, delta, clear_margin(n_budget, delta));
  const auto s = invert_address(*g, std::max(y, g->lo()));
  const auto a = make_address_task(n_budget, s, 0, delta, g);
  const auto b = make_address_task(n_budget, s, 1, delta, g);
  for (double x : queries)
    if (std::abs(x - a.q_star) <= delta) throw InvariantError("address witness spike is visible to a query");
  std::vector<Point> pts;
  for (double x : queries) pts.push_back({x});
  WitnessPair w{a, b, pts, {}, {a.q_star}, 0.0};
  w.shared_context = context_of(w.task_a, pts);
  w.separation = std::abs(evaluate_task(w.task_b, w.witness_point) - evaluate_task(w.task_a, w.witness_point));
  if (context_gap(w.shared_context, context_of(w.task_b, pts)) > 1e-12)
    throw InvariantError("address witness contexts differ");
  return w;
}

/// s with coordinate i reflected (s_i -> 1 - s_i); fold_tau cannot tell the
/// two apart, so the address q*(s) is shared.
inline std::vector<double> collision_partner(std::vector<double> s, std::size_t i) {
  require(i < s.size(), "collision coordinate in range", std::to_string(i));
  s[i] = 1.0 - s[i];
  return s;
}

// ---------------------------------------------------------------------------
// Affine context

struct AffineContextReport {
  std::vector<double> xi;
  double q_star = 0.0;
  std::size_t trials = 0;
  double max_defect = 0.0;
  double endpoint_defect = 0.0;
};

inline nlohmann::json to_json(const AffineContextReport& r) {
  return {{"xi", r.xi}, {"q_star", r.q_star}, {"trials", r.trials}, {"max_defect", r.max_defect},
          {"endpoint_defect", r.endpoint_defect}};
}

/// Fixed sample points xi_i = (i-1)/(N-1), a moving-hat centre q* that no
/// xi_i sees, and a seeded (non-affine) g. Measures how far the map
/// s -> C_N(f_{s,q*}; xi) is from affine along random segments. With
/// `hit_moving_support` the last sample point is moved onto q*, which makes
/// the context read g(s) and breaks affinity.
inline AffineContextReport affine_context_check(std::size_t n_budget, double delta, std::size_t trials,
                                                std::uint64_t seed, bool hit_moving_support = false) {
  validate_hat_family(n_budget, delta);
  AffineContextReport r;
  for (std::size_t i = 0; i < n_budget; ++i)
    r.xi.push_back(static_cast<double>(i) / static_cast<double>(n_budget - 1));
  r.q_star = first_clear_point(r.xi, delta, clear_margin(n_budget, delta));
  if (hit_moving_support) r.xi.back() = r.q_star;
  r.trials = trials;
  const auto g = std::make_shared<const HardFunction>(HardFunction::seeded(seed, n_budget - 2));
  auto context = [&](const std::vector<double>& s) {
    const Task t = make_value_task(n_budget, s, r.q_star, delta, g);
    std::vector<double> c;
    for (double x : r.xi) c.push_back(evaluate_task(t, std::span<const double>(&x, 1)));
    return c;
  };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto defect = [&](const std::vector<double>& u, const std::vector<double>& v, double lambda) {
    std::vector<double> w(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) w[i] = lambda * u[i] + (1.0 - lambda) * v[i];
    const auto cu = context(u), cv = context(v), cw = context(w);
    double worst = 0.0;
    for (std::size_t i = 0; i < cw.size(); ++i)
      worst = std::max(worst, std::abs(cw[i] - (lambda * cu[i] + (1.0 - lambda) * cv[i])));
    return worst;
  };
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<double> u(n_budget - 2), v(n_budget - 2);
    for (auto& x : u) x = unit(rng);
    for (auto& x : v) x = unit(rng);
    const double lambda = unit(rng);
    r.max_defect = std::max(r.max_defect, defect(u, v, lambda));
    if (t < 8) r.endpoint_defect = std::max({r.endpoint_defect, defect(u, v, 0.0), defect(u, v, 1.0)});
  }
  return r;
}

// ---------------------------------------------------------------------------
// Support-hit audit

struct SupportAudit {
  std::vector<bool> static_hits;  // [q_i - delta, q_i + delta] visited, i = 1..N-1
  bool moving_hit = false;        // (q* - delta, q* + delta) visited
  double q_star = 0.0;
  double final_query = 0.0;
  double final_response = 0.0;
  bool beta_observable = false;  // predictions differ between beta = 0 and beta = 1
  Context transcript;
};

inline nlohmann::json to_json(const SupportAudit& a) {
  return {{"static_hits", a.static_hits}, {"moving_hit", a.moving_hit},     {"q_star", a.q_star},
          {"final_query", a.final_query}, {"final_response", a.final_response},
          {"beta_observable", a.beta_observable}, {"transcript", to_json(a.transcript)}};
}

/// Records which hat supports the agent's transcript touches on `task`, then
/// runs the agent on the same task with beta flipped and compares the two
/// prediction arrays exactly.
inline SupportAudit support_hit_audit(const AgenticLearner& agent, const AddressTask& task, std::size_t grid = 10000) {
  SupportAudit a;
  const RunResult run = run_agentic(agent, task);
  a.transcript = run.context;
  a.q_star = task.q_star;
  a.final_query = run.context.back().query[0];
  a.final_response = run.context.back().response;
  const auto q = static_points(task.n_budget);
  for (std::size_t i = 0; i + 1 < task.n_budget; ++i) {
    bool hit = false;
    for (const auto& o : run.context) hit = hit || std::abs(o.query[0] - q[i]) < task.delta;
    a.static_hits.push_back(hit);
  }
  for (const auto& o : run.context) a.moving_hit = a.moving_hit || std::abs(o.query[0] - task.q_star) < task.delta;

  AddressTask flipped = task;
  flipped.beta = 1 - task.beta;
  const RunResult other = run_agentic(agent, flipped);
  bool same = run.context == other.context;
  for_each_evaluation_point(Task(task), run.context, grid, [&](std::span<const double> x) {
    same = same && run.predict(x) == other.predict(x);
  });
  a.beta_observable = !same;
  return a;
}

// ---------------------------------------------------------------------------
// Gadget catalog

struct GadgetCase {
  std::string name;
  MlpNetwork net;
  std::function<double(std::span<const double>)> reference;
  double lo = 0.0, hi = 1.0;               // input box [lo, hi]^in_dim
  std::vector<std::vector<double>> kinks;  // per-axis breakpoints
  double tolerance = 1e-9;
};

namespace harness_detail {

inline std::string short_real(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace harness_detail

inline std::vector<GadgetCase> gadget_catalog() {
  using harness_detail::short_real;
  std::vector<GadgetCase> out;
  out.push_back({"abs", abs_gadget(), [](std::span<const double> x) { return std::abs(x[0]); }, -2.0, 2.0, {{0.0}}});
  out.push_back({"selector", selector_gadget(),
                 [](std::span<const double> x) { return std::clamp(x[0], 0.0, 1.0); }, -1.0, 2.0, {{0.0, 1.0}}});
  for (std::size_t d = 1; d <= 8; ++d)
    out.push_back({"max" + std::to_string(d), max_gadget(d),
                   [](std::span<const double> x) { return *std::max_element(x.begin(), x.end()); }, -2.0, 2.0,
                   std::vector<std::vector<double>>(d, {-1.0, 0.0, 1.0})});
  for (HatSpec h : {HatSpec{0.4, 0.1}, HatSpec{0.3, 0.05}, HatSpec{0.75, 1.0 / 60.0}})
    out.push_back({"hat(" + short_real(h.center) + "," + short_real(h.half_width) + ")", hat_gadget(h),
                   [h](std::span<const double> x) { return hat_reference(h, x[0]); }, -0.5, 1.5,
                   {{h.center - h.half_width, h.center, h.center + h.half_width}}});
  for (BumpSpec b : {BumpSpec{{0.625}, 0.25, 0.25}, BumpSpec{{0.375, 0.625}, 0.25, 0.25},
                     BumpSpec{{0.25, 0.25, 0.75}, 0.5, 0.25}, BumpSpec{{0.5, 0.5}, 1.0, 0.1}}) {
    std::vector<std::vector<double>> kinks;
    for (double c : b.center) {
      const double l = b.side_length;
      kinks.push_back({c - l / 2, c - b.eta * l, c, c + b.eta * l, c + l / 2});
    }
    out.push_back({"bump" + std::to_string(b.center.size()) + "d(side=" + short_real(b.side_length) +
                       ",eta=" + short_real(b.eta) + ")",
                   bump_gadget(b), [b](std::span<const double> x) { return bump_reference(b, x); }, 0.0, 1.0,
                   std::move(kinks)});
  }
  out.push_back({"mult(eps=0.01)", mult_eps(0.01), [](std::span<const double> x) { return x[0] * x[1]; }, 0.0, 1.0,
                 {{0.0, 0.5, 1.0}, {0.0, 0.5, 1.0}}, 0.01});
  return out;
}

struct GadgetResult {
  std::string name;
  std::size_t n_inputs = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Every kink-product point plus uniform samples from the input box, at
/// least `n_inputs` in total.
inline std::vector<Point> gadget_inputs(const GadgetCase& g, std::size_t n_inputs, std::uint64_t seed) {
  std::vector<Point> pts;
  harness_detail::for_each_product(g.kinks, [&](std::span<const double> x) { pts.emplace_back(x.begin(), x.end()); });
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(g.lo, g.hi);
  while (pts.size() < n_inputs) {
    Point p(g.net.in_dim());
    for (auto& v : p) v = u(rng);
    pts.push_back(std::move(p));
  }
  return pts;
}

inline GadgetResult gadget_sweep(const GadgetCase& g, std::size_t n_inputs, std::uint64_t seed) {
  GadgetResult r{g.name, 0, 0.0, g.tolerance, false};
  for (const auto& x : gadget_inputs(g, n_inputs, seed)) {
    const double e = std::abs(evaluate_scalar(g.net, x) - g.reference(x));
    r.max_error = std::isnan(e) ? INFINITY : std::max(r.max_error, e);
    ++r.n_inputs;
  }
  r.pass = r.max_error <= g.tolerance;
  return r;
}

}  // namespace adaptlab
