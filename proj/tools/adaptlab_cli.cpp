// adaptlab: run the separation experiments from the command line.
//
//   adaptlab path-exp --d 1 --L 3 --seed 7
//   adaptlab value-exp --N 5 --eps 0.01
//   adaptlab addr-exp --N 5
//   adaptlab gadget-test
//   adaptlab convert-transformer --input net.json --output net.transformer.json
//   adaptlab witness --family path --d 1 --L 4 --N 7
//
// Exit status: 0 all checks pass, 1 a check failed, 2 invalid configuration,
// 3 I/O failure. Every option can also be set through ADAPTLAB_<NAME>
// (upper case, dashes as underscores), e.g. ADAPTLAB_SEED=3.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "adaptlab/descriptors.hpp"
#include "adaptlab/harness.hpp"
#include "adaptlab/mlp_json.hpp"
#include "adaptlab/transformer.hpp"

namespace {

using namespace adaptlab;
using nlohmann::json;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string experiment;
  std::size_t d = 1;
  std::size_t L = 3;
  std::optional<std::size_t> N;
  std::optional<std::size_t> m;
  std::optional<double> delta;
  double eta = 0.25;
  double eps = 0.01;
  std::uint64_t seed = 0;
  std::optional<std::size_t> grid;
  std::optional<std::size_t> n_tasks;
  std::string family = "path";
  std::string input, output;
  double lambda = 1.0;
  std::size_t samples = 1000;
  std::string out_dir = ".";
  std::string json_path, csv_path;
  unsigned threads = 0;
  bool timing = false;
  bool random_queries = false;
};

std::string env_name(const std::string& flag) {
  std::string e = "ADAPTLAB_";
  for (char c : flag) e += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return e;
}

template <class T>
CLI::Option* opt(CLI::App* app, const std::string& name, T& target, const std::string& help) {
  return app->add_option("--" + name, target, help)->envname(env_name(name));
}

CLI::Option* flag(CLI::App* app, const std::string& name, bool& target, const std::string& help) {
  return app->add_flag("--" + name, target, help)->envname(env_name(name));
}

void add_output(CLI::App* app, RunConfig& c) {
  opt(app, "seed", c.seed, "seed of the single random generator");
  opt(app, "out-dir", c.out_dir, "directory for <experiment>.json and <experiment>.csv");
  opt(app, "json", c.json_path, "report JSON path (overrides --out-dir)");
  opt(app, "csv", c.csv_path, "report CSV path (overrides --out-dir)");
  flag(app, "timing", c.timing, "record wall time (reports are then no longer byte-identical)");
}

// ---------------------------------------------------------------------------

std::size_t budget_N(const RunConfig& c) { return c.N.value_or(5); }
double delta_for(const RunConfig& c) { return c.delta.value_or(default_delta(budget_N(c))); }

void validate(const RunConfig& c) {
  const auto& e = c.experiment;
  if (e == "path-exp" || (e == "witness" && c.family == "path")) {
    require(c.d >= 1 && c.d <= 6, "1 <= d <= 6", "d = " + std::to_string(c.d));
    require(c.L >= 1 && c.d * c.L <= 24, "L >= 1 and d L <= 24", "L = " + std::to_string(c.L));
    require(c.eta > 0.0 && c.eta < 0.5, "0 < eta < 1/2", "eta = " + format_real(c.eta));
  }
  if (e == "value-exp" || e == "addr-exp" || (e == "witness" && c.family == "address")) {
    require(budget_N(c) >= 3, "N >= 3", "N = " + std::to_string(budget_N(c)));
    validate_hat_family(budget_N(c), delta_for(c));
  }
  if (e == "value-exp") require(c.eps > 0.0 && c.eps < 1.0, "0 < eps < 1", "eps = " + format_real(c.eps));
  if (e == "witness")
    require(c.family == "path" || c.family == "address", "family in {path, address}", c.family);
  if (c.grid) require(*c.grid >= 2, "grid >= 2", std::to_string(*c.grid));
  if (c.n_tasks) require(*c.n_tasks >= 1, "n-tasks >= 1", "0");
  if (e == "convert-transformer") {
    require(!c.input.empty(), "--input given", "");
    require(c.lambda > 0.0, "lambda > 0", format_real(c.lambda));
  }
}

void add_check(ExperimentReport& r, std::string name, bool pass, std::string detail) {
  r.checks.push_back({std::move(name), pass, std::move(detail)});
}

std::string le(double value, double bound) { return format_real(value) + " <= " + format_real(bound); }

SweepOptions sweep_options(const RunConfig& c, std::size_t default_tasks) {
  return {c.n_tasks.value_or(default_tasks), c.grid.value_or(0), c.seed, c.threads, c.timing};
}

// ---------------------------------------------------------------------------
// Experiments

ExperimentReport path_exp(const RunConfig& c) {
  const std::size_t queries = (std::size_t{1} << c.d) * c.L;
  const Budget budget{c.N.value_or(queries), c.m.value_or(std::numeric_limits<std::size_t>::max())};
  const auto general = make_path_agent(c.d, c.L, c.eta, false, budget);
  const auto realizable = make_path_agent(c.d, c.L, c.eta, true, budget);
  const auto sampler = path_sampler(c.d, c.L, c.eta);
  const auto opt = sweep_options(c, 100);
  ExperimentReport r = sweep_worst_case(general, sampler, opt);
  const ExperimentReport rr = sweep_worst_case(realizable, sampler, opt);

  std::mt19937_64 rng(c.seed);
  double gap = 0.0;
  const std::size_t grid = opt.grid ? opt.grid : default_grid(c.d);
  for (std::size_t i = 0; i < opt.n_tasks; ++i) {
    const Task t = sampler(rng);
    const auto a = run_agentic(general, t), b = run_agentic(realizable, t);
    for_each_evaluation_point(t, a.context, grid,
                              [&](std::span<const double> x) { gap = std::max(gap, std::abs(a.predict(x) - b.predict(x))); });
  }

  const double worst_general = r.worst_error;
  r.experiment = "path-exp";
  r.sampling = kPathSampling;
  r.parameters.update({{"d", c.d}, {"L", c.L}, {"eta", c.eta}, {"N", budget.queries}});
  r.max_weights = rr.max_weights;
  r.details = {{"worst_error_general", worst_general}, {"worst_error_realizable", rr.worst_error},
               {"realizable_vs_general", gap}, {"agent", to_json(general)}};
  r.worst_error = std::max(r.worst_error, rr.worst_error);
  add_check(r, "general agent exact", worst_general <= 1e-9, le(worst_general, 1e-9));
  add_check(r, "realizable agent exact", rr.worst_error <= 1e-9, le(rr.worst_error, 1e-9));
  add_check(r, "realizable == general pointwise", gap <= 1e-9, le(gap, 1e-9));
  add_check(r, "query count = 2^d L", r.n_queries == queries && rr.n_queries == queries,
            std::to_string(r.n_queries) + " queries");
  if (c.m) add_check(r, "weights <= m", rr.max_weights <= *c.m, std::to_string(rr.max_weights));
  if (opt.timing && rr.wall_time_ms) r.wall_time_ms = *r.wall_time_ms + *rr.wall_time_ms;
  return r;
}

ExperimentReport value_exp(const RunConfig& c) {
  const std::size_t n = budget_N(c);
  const double delta = delta_for(c);
  const auto g = std::make_shared<const HardFunction>(HardFunction::seeded(c.seed, n - 2));
  const Budget budget{n, c.m.value_or(std::numeric_limits<std::size_t>::max())};
  const auto mult = make_value_agent(n, c.eps, true, delta, budget);
  const auto exact = make_value_agent(n, c.eps, false, delta, budget);
  const auto opt = sweep_options(c, 200);
  ExperimentReport r = sweep_worst_case(mult, value_sampler(n, delta, g), opt);
  const ExperimentReport re = sweep_worst_case(exact, value_sampler(n, delta, g), opt);
  const auto affine = affine_context_check(n, delta, 1000, c.seed);
  const auto control = affine_context_check(n, delta, 1000, c.seed, true);

  r.experiment = "value-exp";
  r.sampling = kHatSampling;
  r.parameters.update({{"N", n}, {"delta", delta}, {"eps", c.eps}});
  r.details = {{"worst_error_exact_products", re.worst_error},
               {"affine_context", to_json(affine)},
               {"affine_negative_control", to_json(control)},
               {"hard_function", to_json(*g)},
               {"agent", to_json(mult)}};
  const double bound = static_cast<double>(n) * c.eps;
  add_check(r, "Mult_eps agent error <= N eps", r.worst_error <= bound, le(r.worst_error, bound));
  add_check(r, "exact-product agent exact", re.worst_error <= 1e-9, le(re.worst_error, 1e-9));
  add_check(r, "query count = N", r.n_queries == n, std::to_string(r.n_queries));
  add_check(r, "context affine in s", affine.max_defect <= 1e-12, le(affine.max_defect, 1e-12));
  add_check(r, "negative control breaks affinity", control.max_defect > 1e-6,
            format_real(control.max_defect) + " > 1e-6");
  if (c.m) add_check(r, "weights <= m", r.max_weights <= *c.m, std::to_string(r.max_weights));
  return r;
}

ExperimentReport addr_exp(const RunConfig& c) {
  const std::size_t n = budget_N(c);
  const double delta = delta_for(c);
  const auto g = std::make_shared<const HardFunction>(HardFunction::invertible_address(n - 1));
  const auto agent = make_address_agent(n, {g, std::nullopt}, delta);
  const auto sampler = address_sampler(n, delta, g);
  const auto opt = sweep_options(c, 100);
  ExperimentReport r = sweep_worst_case(agent, sampler, opt);
  r.experiment = "addr-exp";
  r.sampling = kHatSampling;
  r.parameters.update({{"N", n}, {"delta", delta}});
  add_check(r, "general agent exact", r.worst_error <= 1e-9, le(r.worst_error, 1e-9));

  std::mt19937_64 rng(c.seed);
  bool beta_read = true;
  for (std::size_t i = 0; i < opt.n_tasks; ++i) {
    const auto t = std::get<AddressTask>(sampler(rng));
    beta_read = beta_read && run_agentic(agent, t).context.back().response == static_cast<double>(t.beta);
  }
  add_check(r, "final response = beta", beta_read, std::to_string(opt.n_tasks) + " tasks");

  // Witnesses against random fixed query sets.
  std::mt19937_64 wrng(c.seed + 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  bool witnesses_ok = true;
  for (int k = 0; k < 20; ++k) {
    std::vector<double> xi(n);
    for (auto& x : xi) x = unit(wrng);
    try {
      const auto w = address_witness(xi, n, delta, g);
      verify_witness(w, 1e-12);
      witnesses_ok = witnesses_ok && w.separation == 1.0;
      if (k == 0) r.witnesses.push_back(to_json(w));
    } catch (const Error&) {
      witnesses_ok = false;
    }
  }
  add_check(r, "address witness for 20 query sets", witnesses_ok, "separation 1, contexts equal");

  // Collision pair: reflecting a coordinate keeps the address.
  std::vector<double> s(n - 1, 0.0);
  s[0] = 0.3;
  const auto s2 = collision_partner(s, n - 2);
  const bool collide = address_of(*g, s) == address_of(*g, s2);
  add_check(r, "collision pair shares q*(s)", collide, "s_{N-1}: 0 vs 1");

  // A realizable agent with a constant address network misses the spike.
  const auto blind = make_address_agent(n, {nullptr, constant_network(n - 1, {2.0 / 3.0}), c.eps}, delta);
  const double target = 0.9;
  const auto audit = support_hit_audit(blind, make_address_task(n, invert_address(*g, target), 1, delta, g));
  add_check(r, "mispredicted address hides beta", !audit.moving_hit && !audit.beta_observable,
            "final query " + format_real(audit.final_query) + ", q* " + format_real(audit.q_star));
  const auto seen = support_hit_audit(agent, make_address_task(n, invert_address(*g, target), 1, delta, g));
  bool all_static = true;
  for (bool h : seen.static_hits) all_static = all_static && h;
  add_check(r, "general agent hits every support", all_static && seen.moving_hit && seen.beta_observable, "");
  r.details = {{"audit_blind", to_json(audit)}, {"audit_general", to_json(seen)}, {"agent", to_json(agent)}};
  return r;
}

ExperimentReport gadget_test(const RunConfig& c) {
  ExperimentReport r;
  r.experiment = "gadget-test";
  r.seed = c.seed;
  const std::size_t n = c.n_tasks.value_or(10000);
  r.parameters = {{"inputs_per_gadget", n}};
  json table = json::array();
  for (const auto& g : gadget_catalog()) {
    const auto res = gadget_sweep(g, n, c.seed);
    r.worst_error = std::max(r.worst_error, res.tolerance < 1e-6 ? res.max_error : 0.0);
    r.max_weights = std::max(r.max_weights, count_weights(g.net));
    table.push_back({{"name", res.name}, {"inputs", res.n_inputs}, {"max_error", res.max_error},
                     {"tolerance", res.tolerance}, {"weights", count_weights(g.net)}, {"depth", g.net.depth()}});
    add_check(r, res.name, res.pass, le(res.max_error, res.tolerance));
  }
  r.details = {{"gadgets", table}};
  return r;
}

ExperimentReport convert_transformer(const RunConfig& c) {
  std::ifstream in(c.input);
  if (!in) throw IoError("cannot read " + c.input);
  std::stringstream buf;
  buf << in.rdbuf();
  const MlpNetwork net = network_from_json(buf.str());
  const auto t = mlp_to_transformer(net, c.lambda);
  if (!c.output.empty()) {
    std::ofstream out(c.output);
    if (!(out << transformer_to_json(t) << '\n')) throw IoError("cannot write " + c.output);
  }
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double defect = 0.0;
  for (std::size_t k = 0; k < c.samples; ++k) {
    std::vector<double> x(net.in_dim());
    for (auto& v : x) v = unit(rng);
    const auto a = evaluate(net, x), b = eval_transformer(t, std::span<const double>(x));
    for (std::size_t i = 0; i < a.size(); ++i) defect = std::max(defect, std::abs(a[i] - b[i]));
  }
  std::cout << "max conversion defect over " << c.samples << " inputs: " << format_real(defect) << '\n';
  ExperimentReport r;
  r.experiment = "convert-transformer";
  r.seed = c.seed;
  r.parameters = {{"lambda", c.lambda}, {"samples", c.samples}};
  r.worst_error = defect;
  r.max_weights = count_weights(net);
  add_check(r, "conversion exact", defect <= 1e-12, le(defect, 1e-12));
  add_check(r, "depth preserved, one head per layer",
            t.depth() == net.depth() && std::all_of(t.layers.begin(), t.layers.end(),
                                                    [](const TransformerLayer& l) { return l.heads.size() == 1; }),
            std::to_string(t.depth()) + " layers");
  return r;
}

ExperimentReport witness(const RunConfig& c) {
  ExperimentReport r;
  r.experiment = "witness";
  r.seed = c.seed;
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::optional<WitnessPair> found;
  if (c.family == "path") {
    const std::size_t n = c.N.value_or(((std::size_t{1} << (c.d * (c.L - 1))) - 1));
    std::vector<Point> queries = lattice_queries(c.d, n);
    if (c.random_queries)
      for (auto& q : queries)
        for (auto& v : q) v = unit(rng);
    found = path_witness(queries, c.d, c.L, c.eta);
    r.parameters = {{"family", "path"}, {"d", c.d}, {"L", c.L}, {"N", n}, {"eta", c.eta}};
    const auto grid_ic = make_grid_ic_learner(c.d, queries);
    const auto ra = run_in_context(grid_ic, found->task_a), rb = run_in_context(grid_ic, found->task_b);
    const double ea = std::abs(ra.predict(found->witness_point) - evaluate_task(found->task_a, found->witness_point));
    const double eb = std::abs(rb.predict(found->witness_point) - evaluate_task(found->task_b, found->witness_point));
    r.worst_error = std::max(ea, eb);
    add_check(r, "grid in-context learner error >= 1/2", r.worst_error >= 0.5 - 1e-9, format_real(r.worst_error));
  } else {
    const std::size_t n = budget_N(c);
    const auto g = std::make_shared<const HardFunction>(HardFunction::invertible_address(n - 1));
    std::vector<double> queries;
    for (const auto& q : lattice_queries(1, n)) queries.push_back(c.random_queries ? unit(rng) : q[0]);
    found = address_witness(queries, n, delta_for(c), g);
    r.parameters = {{"family", "address"}, {"N", n}, {"delta", delta_for(c)}};
  }
  const WitnessPair& w = *found;
  const WitnessPair replay = witness_from_json(to_json(w));
  const double gap = context_gap(context_of(replay.task_a, replay.shared_queries),
                                 context_of(replay.task_b, replay.shared_queries));
  add_check(r, "contexts equal (replayed from JSON)", gap <= 1e-12, le(gap, 1e-12));
  add_check(r, "separation = 1", w.separation == 1.0, format_real(w.separation));
  r.n_queries = w.shared_queries.size();
  r.witnesses.push_back(to_json(w));
  return r;
}

// ---------------------------------------------------------------------------

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text) || !out.flush()) throw IoError("cannot write " + path);
}

int run(const RunConfig& c) {
  validate(c);
  ExperimentReport r;
  if (c.experiment == "path-exp") r = path_exp(c);
  else if (c.experiment == "value-exp") r = value_exp(c);
  else if (c.experiment == "addr-exp") r = addr_exp(c);
  else if (c.experiment == "gadget-test") r = gadget_test(c);
  else if (c.experiment == "convert-transformer") r = convert_transformer(c);
  else r = witness(c);
  r.seed = c.seed;
  if (!c.timing) r.wall_time_ms.reset();

  const std::string base = c.out_dir + "/" + c.experiment;
  write_file(c.json_path.empty() ? base + ".json" : c.json_path, to_json(r).dump(2) + "\n");
  write_file(c.csv_path.empty() ? base + ".csv" : c.csv_path, to_csv(r));
  for (const auto& ch : r.checks)
    std::cout << (ch.pass ? "PASS " : "FAIL ") << ch.name << (ch.detail.empty() ? "" : " (" + ch.detail + ")") << '\n';
  return r.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixed-query versus adaptive-query learning laboratory"};
  app.require_subcommand(1);
  RunConfig c;

  auto* path = app.add_subcommand("path-exp", "cubical-path agent exactness sweep");
  opt(path, "d", c.d, "dimension");
  opt(path, "L", c.L, "path depth");
  opt(path, "eta", c.eta, "bump plateau parameter");
  opt(path, "N", c.N, "query budget (default 2^d L)");
  opt(path, "m", c.m, "weight budget for the realizable agent");
  opt(path, "grid", c.grid, "grid points per axis");
  opt(path, "n-tasks", c.n_tasks, "sampled tasks");
  opt(path, "threads", c.threads, "worker threads (0: all cores)");
  add_output(path, c);

  auto* value = app.add_subcommand("value-exp", "pointed-value agent and affine-context checks");
  opt(value, "N", c.N, "query budget");
  opt(value, "delta", c.delta, "hat half-width (default 1/(12N))");
  opt(value, "eps", c.eps, "multiplication accuracy");
  opt(value, "m", c.m, "weight budget");
  opt(value, "grid", c.grid, "grid points");
  opt(value, "n-tasks", c.n_tasks, "sampled tasks");
  opt(value, "threads", c.threads, "worker threads (0: all cores)");
  add_output(value, c);

  auto* addr = app.add_subcommand("addr-exp", "address-spike agent, witnesses and support audit");
  opt(addr, "N", c.N, "query budget");
  opt(addr, "delta", c.delta, "hat half-width (default 1/(12N))");
  opt(addr, "eps", c.eps, "multiplication accuracy of the realizable audit agent");
  opt(addr, "grid", c.grid, "grid points");
  opt(addr, "n-tasks", c.n_tasks, "sampled tasks");
  opt(addr, "threads", c.threads, "worker threads (0: all cores)");
  add_output(addr, c);

  auto* gadgets = app.add_subcommand("gadget-test", "compare every catalog gadget with its reference");
  opt(gadgets, "n-tasks", c.n_tasks, "inputs per gadget (default 10000)");
  add_output(gadgets, c);

  auto* convert = app.add_subcommand("convert-transformer", "convert an MLP JSON file into a transformer");
  opt(convert, "input", c.input, "MLP JSON file")->required();
  opt(convert, "output", c.output, "transformer JSON file");
  opt(convert, "lambda", c.lambda, "attention temperature");
  opt(convert, "samples", c.samples, "random inputs for the defect check");
  add_output(convert, c);

  auto* wit = app.add_subcommand("witness", "construct an indistinguishable task pair");
  opt(wit, "family", c.family, "path or address");
  opt(wit, "d", c.d, "dimension (path)");
  opt(wit, "L", c.L, "depth (path)");
  opt(wit, "eta", c.eta, "bump plateau parameter (path)");
  opt(wit, "N", c.N, "number of fixed queries");
  opt(wit, "delta", c.delta, "hat half-width (address)");
  flag(wit, "random-queries", c.random_queries, "draw the fixed queries uniformly instead of a lattice");
  add_output(wit, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  c.experiment = app.get_subcommands().front()->get_name();

  try {
    return run(c);
  } catch (const PreconditionError& e) {
    std::cerr << "invalid config: violated constraint " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "I/O failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
