// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "adaptlab/descriptors.hpp"
#include "adaptlab/harness.hpp"
#include "adaptlab/transformer.hpp"

using namespace adaptlab;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Verdict()>& body, double budget_s) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v.expect(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (budget_s > 0) v.expect(secs < budget_s, "runtime " + format_real(secs) + " s over " + format_real(budget_s) + " s");
  if (!v.pass) ++failures;
  std::printf("%s criterion %d: %s [%.1f s]%s%s\n", v.pass ? "PASS" : "FAIL", id, title.c_str(), secs,
              v.detail.empty() ? "" : " -- ", v.detail.c_str());
  std::fflush(stdout);
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

HardFunctionPtr invertible(std::size_t dim) {
  return std::make_shared<const HardFunction>(HardFunction::invertible_address(dim));
}

// Prediction array on a dense grid plus the task's breakpoints.
std::vector<double> predictions(const Task& task, const RunResult& run, std::size_t grid) {
  std::vector<double> out;
  for_each_evaluation_point(task, run.context, grid, [&](std::span<const double> x) { out.push_back(run.predict(x)); });
  return out;
}

Verdict gadget_suite() {
  Verdict v;
  std::size_t cases = 0;
  double worst = 0.0;
  for (const auto& g : gadget_catalog()) {
    if (g.tolerance > 1e-9) continue;  // the approximate multiplier has its own criterion
    const auto r = gadget_sweep(g, 10000, 1);
    ++cases;
    worst = std::max(worst, r.max_error);
    v.expect(r.n_inputs >= 10000, g.name + " checked on too few inputs");
    v.expect(r.max_error <= 1e-9, g.name + " error " + sci(r.max_error));
  }
  v.expect(cases >= 15, "catalog too small");
  if (v.pass) v.detail = std::to_string(cases) + " gadgets, worst error " + sci(worst);
  return v;
}

Verdict mult_contract() {
  Verdict v;
  // Fixed from the measured counts at eps = 1e-1 (156) and eps = 1e-4 (396).
  const double c0 = 76.0, c1 = 24.09;
  v.expect(count_weights(mult_eps(1e-1)) == 156 && count_weights(mult_eps(1e-4)) == 396,
           "calibration counts changed");
  std::string summary;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const auto m = mult_eps(eps);
    double worst = 0.0;
    for (int i = 0; i <= 200; ++i)
      for (int j = 0; j <= 200; ++j) {
        const double a = i / 200.0, b = j / 200.0;
        worst = std::max(worst, std::abs(evaluate_scalar(m, std::vector<double>{a, b}) - a * b));
      }
    const double bound = c0 + c1 * std::log2(1.0 / eps);
    const auto w = count_weights(m);
    v.expect(worst <= eps, "eps " + sci(eps) + " error " + sci(worst));
    v.expect(static_cast<double>(w) <= bound, "eps " + sci(eps) + " uses " + std::to_string(w) + " weights");
    summary += (summary.empty() ? "" : ", ") + sci(eps) + ": err " + sci(worst) + ", " + std::to_string(w) +
               " <= " + sci(bound) + " weights";
  }
  if (v.pass) v.detail = summary;
  return v;
}

Verdict path_agent_exactness() {
  Verdict v;
  double worst_g = 0.0, worst_r = 0.0, worst_gap = 0.0;
  std::size_t configs = 0;
  for (std::size_t d = 1; d <= 3; ++d)
    for (std::size_t depth = 1; depth <= 4; ++depth) {
      if ((std::size_t{1} << d) * depth > 64) continue;
      ++configs;
      const auto general = make_path_agent(d, depth, 0.25, false);
      const auto realizable = make_path_agent(d, depth, 0.25, true);
      const std::size_t expected = (std::size_t{1} << d) * depth;
      const auto sampler = path_sampler(d, depth, 0.25);
      std::mt19937_64 rng(1000 * d + depth);
      std::vector<Task> tasks;
      for (int k = 0; k < 100; ++k) tasks.push_back(sampler(rng));
      std::vector<double> eg(tasks.size()), er(tasks.size()), gap(tasks.size());
      std::vector<std::size_t> nq(tasks.size()), nr(tasks.size());
      // One pass over the evaluation points serves all three comparisons.
      parallel_for(tasks.size(), 0, [&](std::size_t i) {
        const auto a = run_agentic(general, tasks[i]), b = run_agentic(realizable, tasks[i]);
        nq[i] = a.context.size();
        nr[i] = b.context.size();
        for_each_evaluation_point(tasks[i], a.context, default_grid(d), [&](std::span<const double> x) {
          const double f = evaluate_task(tasks[i], x), pa = a.predict(x), pb = b.predict(x);
          eg[i] = std::max(eg[i], std::abs(pa - f));
          er[i] = std::max(er[i], std::abs(pb - f));
          gap[i] = std::max(gap[i], std::abs(pa - pb));
        });
      });
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        worst_g = std::max(worst_g, eg[i]);
        worst_r = std::max(worst_r, er[i]);
        worst_gap = std::max(worst_gap, gap[i]);
        if (nq[i] != expected || nr[i] != expected) {
          v.expect(false, "d=" + std::to_string(d) + " L=" + std::to_string(depth) + " issued " +
                              std::to_string(nq[i]) + "/" + std::to_string(nr[i]) + " queries");
          break;
        }
      }
    }
  v.expect(worst_g <= 1e-9, "general error " + sci(worst_g));
  v.expect(worst_r <= 1e-9, "realizable error " + sci(worst_r));
  v.expect(worst_gap <= 1e-9, "realizable vs general " + sci(worst_gap));
  if (v.pass)
    v.detail = std::to_string(configs) + " (d, L) configs x 100 tasks; errors " + sci(worst_g) + " / " +
               sci(worst_r) + ", gap " + sci(worst_gap);
  return v;
}

Verdict path_witness_criterion() {
  Verdict v;
  for (auto [d, depth, n] : {std::tuple{1u, 4u, 7u}, std::tuple{2u, 2u, 3u}}) {
    const std::string tag = "d=" + std::to_string(d) + " L=" + std::to_string(depth) + " N=" + std::to_string(n);
    const auto queries = lattice_queries(d, n);
    const auto w = path_witness(queries, d, depth, 0.25);
    v.expect(context_of(w.task_a, queries) == context_of(w.task_b, queries), tag + ": contexts differ");
    v.expect(w.separation == 1.0, tag + ": separation " + sci(w.separation));
    const auto learner = make_grid_ic_learner(d, queries);
    const auto ra = run_in_context(learner, w.task_a), rb = run_in_context(learner, w.task_b);
    const double err = std::max(sup_error(w.task_a, ra, default_grid(d)), sup_error(w.task_b, rb, default_grid(d)));
    v.expect(err >= 0.5 - 1e-9, tag + ": grid learner error " + sci(err));
  }
  if (v.pass) v.detail = "two configurations, separation 1, grid learner error >= 1/2";
  return v;
}

Verdict monotonicity() {
  Verdict v;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto random_queries = [&](std::size_t n) {
    std::vector<Point> q(n);
    for (auto& p : q) p = {unit(rng)};
    return q;
  };
  auto custom = [](std::string kind, std::vector<Point> queries, Predictor p) {
    InContextLearner l;
    l.kind = std::move(kind);
    l.dim = 1;
    l.queries = std::move(queries);
    l.budget = {l.queries.size()};
    l.predictor = std::move(p);
    return l;
  };

  std::vector<InContextLearner> learners;
  learners.push_back(make_grid_ic_learner(1, lattice_queries(1, 8)));
  learners.push_back(make_grid_ic_learner(1, random_queries(5)));
  learners.push_back(make_grid_ic_learner(1, random_queries(12)));
  learners.push_back(make_zero_ic_learner(1, random_queries(6)));
  learners.push_back(custom("mean", random_queries(7), [](const Context& c) -> PointFunction {
    double m = 0.0;
    for (const auto& o : c) m += o.response / static_cast<double>(c.size());
    return [m](std::span<const double>) { return m; };
  }));
  learners.push_back(custom("piecewise-linear", random_queries(9), [](const Context& c) -> PointFunction {
    auto sorted = c;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.query < b.query; });
    return [sorted](std::span<const double> x) {
      if (x[0] <= sorted.front().query[0]) return sorted.front().response;
      for (std::size_t i = 1; i < sorted.size(); ++i)
        if (x[0] <= sorted[i].query[0]) {
          const double x0 = sorted[i - 1].query[0], x1 = sorted[i].query[0];
          const double t = x1 > x0 ? (x[0] - x0) / (x1 - x0) : 1.0;
          return (1 - t) * sorted[i - 1].response + t * sorted[i].response;
        }
      return sorted.back().response;
    };
  }));
  learners.push_back(custom("scaled-max", random_queries(4), [](const Context& c) -> PointFunction {
    double m = 0.0;
    for (const auto& o : c) m = std::max(m, o.response);
    return [m](std::span<const double> x) { return m * x[0]; };
  }));
  {
    std::vector<double> coef(10);
    for (auto& a : coef) a = unit(rng);
    learners.push_back(custom("random-hats", random_queries(10), [coef](const Context& c) -> PointFunction {
      return [coef, c](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) s += coef[i] * c[i].response * hat_reference({c[i].query[0], 0.1}, x[0]);
        return s;
      };
    }));
  }
  learners.push_back(
      make_value_ic_learner(5, default_delta(5), std::make_shared<const HardFunction>(HardFunction::seeded(8, 3))));
  {
    // Random one-hidden-layer ReLU network on (transcript, x).
    const std::size_t n = 6, in = 2 * n + 1, hidden = 8;
    std::uniform_real_distribution<double> w(-1.0, 1.0);
    Matrix a(hidden, in), b(1, hidden);
    std::vector<double> ba(hidden);
    for (auto& x : a.data) x = w(rng);
    for (auto& x : b.data) x = w(rng);
    for (auto& x : ba) x = w(rng);
    const MlpNetwork net({AffineLayer{a, ba}, AffineLayer{b, {w(rng)}}});
    learners.push_back(make_realizable_in_context("random-relu", 1, random_queries(n), net, {n}));
  }

  const auto value_g = std::make_shared<const HardFunction>(HardFunction::seeded(2, 3));
  const std::vector<TaskSampler> families{path_sampler(1, 3, 0.25), value_sampler(5, default_delta(5), value_g),
                                          address_sampler(5, default_delta(5), invertible(4))};
  std::size_t comparisons = 0;
  for (const auto& ic : learners) {
    const auto agent = embed_ic_as_agent(ic);
    v.expect(agent.realizable() == ic.realizable() && agent.weight_count() == ic.weight_count(),
             ic.kind + ": realizability not preserved");
    for (const auto& family : families) {
      std::mt19937_64 trng(17);
      for (int k = 0; k < 20; ++k) {
        const Task t = family(trng);
        const auto a = run_in_context(ic, t), b = run_agentic(agent, t);
        ++comparisons;
        if (a.context != b.context || predictions(t, a, 2000) != predictions(t, b, 2000)) {
          v.expect(false, ic.kind + " on " + family_name(t) + " task " + std::to_string(k));
          break;
        }
      }
    }
  }
  if (v.pass)
    v.detail = std::to_string(learners.size()) + " learners, " + std::to_string(comparisons) +
               " task runs, prediction arrays identical";
  return v;
}

Verdict value_agent_bound() {
  Verdict v;
  std::string summary;
  for (std::size_t n : {3, 5, 8}) {
    const double eps = 0.01, delta = default_delta(n);
    const auto g = std::make_shared<const HardFunction>(HardFunction::seeded(n, n - 2));
    const SweepOptions opt{200, 0, 40 + n, 0};
    const auto mult = sweep_worst_case(make_value_agent(n, eps, true), value_sampler(n, delta, g), opt);
    const auto exact = sweep_worst_case(make_value_agent(n, eps, false), value_sampler(n, delta, g), opt);
    v.expect(mult.worst_error <= n * eps, "N=" + std::to_string(n) + " Mult error " + sci(mult.worst_error));
    v.expect(exact.worst_error <= 1e-9, "N=" + std::to_string(n) + " exact error " + sci(exact.worst_error));
    summary += (summary.empty() ? "N=" : ", N=") + std::to_string(n) + ": " + sci(mult.worst_error) + " / " +
               sci(exact.worst_error);
  }
  if (v.pass) v.detail = "Mult / exact worst error " + summary;
  return v;
}

Verdict affine_context() {
  Verdict v;
  const auto r = affine_context_check(5, default_delta(5), 1000, 7);
  const auto control = affine_context_check(5, default_delta(5), 1000, 7, true);
  v.expect(r.max_defect <= 1e-12, "defect " + sci(r.max_defect));
  v.expect(r.endpoint_defect == 0.0, "endpoint defect " + sci(r.endpoint_defect));
  v.expect(control.max_defect > 1e-6, "negative control defect " + sci(control.max_defect));
  if (v.pass) v.detail = "defect " + sci(r.max_defect) + ", negative control " + sci(control.max_defect);
  return v;
}

Verdict address_agent_exactness() {
  Verdict v;
  double worst = 0.0;
  for (std::size_t n : {3, 5}) {
    const auto g = invertible(n - 1);
    const auto agent = make_address_agent(n, {g, std::nullopt});
    const auto r = sweep_worst_case(agent, address_sampler(n, default_delta(n), g), {100, 0, 60 + n, 0});
    worst = std::max(worst, r.worst_error);
    std::mt19937_64 rng(60 + n);
    for (int k = 0; k < 100; ++k) {
      const auto t = std::get<AddressTask>(address_sampler(n, default_delta(n), g)(rng));
      const auto run = run_agentic(agent, t);
      if (run.context.back().response != static_cast<double>(t.beta)) {
        v.expect(false, "N=" + std::to_string(n) + " task " + std::to_string(k) + ": final response is not beta");
        break;
      }
    }
  }
  v.expect(worst <= 1e-9, "worst error " + sci(worst));
  if (v.pass) v.detail = "N in {3,5} x 100 tasks, worst error " + sci(worst) + ", final response = beta";
  return v;
}

Verdict address_witness_criterion() {
  Verdict v;
  const std::size_t n = 5;
  const double delta = 1.0 / 60.0;
  const auto g = invertible(n - 1);
  const auto seeded_g = HardFunction::seeded(12, n - 1, 2.0 / 3.0, 1.0);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    std::vector<double> xi(n);
    for (auto& x : xi) x = unit(rng);
    const auto w = address_witness(xi, n, delta, g);
    const auto& a = std::get<AddressTask>(w.task_a);
    const double gap = context_gap(context_of(w.task_a, w.shared_queries), context_of(w.task_b, w.shared_queries));
    v.expect(gap <= 1e-12, "set " + std::to_string(k) + ": context gap " + sci(gap));
    v.expect(w.separation == 1.0, "set " + std::to_string(k) + ": separation " + sci(w.separation));
    for (std::size_t i = 0; i < n - 1; ++i) {
      auto s0 = a.s, s1 = a.s;
      s0[i] = 0.0;
      s1[i] = 1.0;
      v.expect(address_of(*g, s0) == address_of(*g, s1) && address_of(seeded_g, s0) == address_of(seeded_g, s1),
               "collision pair differs at coordinate " + std::to_string(i));
    }
  }
  if (v.pass) v.detail = "20 random query sets: contexts equal, separation 1, collisions exact";
  return v;
}

Verdict support_hit() {
  Verdict v;
  const std::size_t n = 5;
  const double delta = default_delta(n);
  const auto g = invertible(n - 1);
  const MlpNetwork address_net = constant_network(n - 1, {2.0 / 3.0});
  const auto blind = make_address_agent(n, {nullptr, address_net, 1e-3});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> target(2.0 / 3.0 + 2 * delta, 1.0);
  std::size_t audited = 0;
  for (int k = 0; k < 20; ++k) {
    const double y = k == 0 ? 0.9 : target(rng);
    for (int beta : {0, 1}) {
      const auto t = make_address_task(n, invert_address(*g, y), beta, delta, g);
      const double miss = std::abs(evaluate(address_net, t.s)[0] - t.q_star);
      v.expect(miss > delta, "address network within delta");
      const auto audit = support_hit_audit(blind, t);
      ++audited;
      v.expect(!audit.moving_hit && !audit.beta_observable,
               "q*=" + sci(t.q_star) + ": beta observable despite a missed spike");
    }
  }
  if (v.pass) v.detail = std::to_string(audited) + " audited tasks, predictions identical for beta = 0 and 1";
  return v;
}

Verdict transformerification() {
  Verdict v;
  double worst = 0.0;
  std::size_t cases = 0;
  for (const auto& g : gadget_catalog()) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(g.lo, g.hi);
    std::vector<Point> inputs(1000, Point(g.net.in_dim()));
    for (auto& p : inputs)
      for (auto& x : p) x = u(rng);
    for (double lambda : {0.1, 1.0, 10.0}) {
      const auto t = mlp_to_transformer(g.net, lambda);
      ++cases;
      v.expect(t.depth() == g.net.depth(), g.name + ": depth changed");
      bool one_head = t.output.heads.size() == 1;
      for (const auto& l : t.layers) one_head = one_head && l.heads.size() == 1;
      v.expect(one_head, g.name + ": more than one head per layer");
      for (const auto& x : inputs)
        worst = std::max(worst, std::abs(eval_transformer(t, std::span<const double>(x))[0] - evaluate_scalar(g.net, x)));
    }
  }
  v.expect(worst <= 1e-12, "conversion defect " + sci(worst));
  if (v.pass) v.detail = std::to_string(cases) + " conversions, max defect " + sci(worst);
  return v;
}

}  // namespace

int main() {
  report(1, "exact gadget suite", gadget_suite, 10);
  report(2, "Mult_eps error and logarithmic weight count", mult_contract, 30);
  report(3, "path agent exactness, general and realizable", path_agent_exactness, 120);
  report(4, "path in-context witness", path_witness_criterion, 0);
  report(5, "embedding in-context learners as agents", monotonicity, 0);
  report(6, "value agent error bound", value_agent_bound, 60);
  report(7, "affine context", affine_context, 0);
  report(8, "address agent exactness", address_agent_exactness, 0);
  report(9, "address witness and fold collisions", address_witness_criterion, 0);
  report(10, "support-hit audit", support_hit, 0);
  report(11, "transformer conversion", transformerification, 0);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
