#pragma once

// In-context and agentic learners, general and ReLU-realizable, plus the
// concrete learners used to witness the separations.
//
// A predictor is curried: given the final context it returns the function
// x -> F(context, x). Realizable learners derive both their query maps and
// their predictor from stored networks whose input is the flattened
// transcript (x_1, y_1, x_2, y_2, ...), followed by x for the predictor.

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "adaptlab/errors.hpp"
#include "adaptlab/gadgets.hpp"
#include "adaptlab/mlp.hpp"
#include "adaptlab/tasks.hpp"

namespace adaptlab {

struct Observation {
  Point query;
  double response = 0.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Ordered transcript of query/response pairs.
using Context = std::vector<Observation>;

using PointFunction = std::function<double(std::span<const double>)>;
using Predictor = std::function<PointFunction(const Context&)>;
using QueryMap = std::function<Point(const Context&)>;

inline std::vector<double> flatten(const Context& ctx) {
  std::vector<double> out;
  for (const auto& o : ctx) {
    out.insert(out.end(), o.query.begin(), o.query.end());
    out.push_back(o.response);
  }
  return out;
}

/// Query budget N and weight budget m. m is unbounded for general learners.
struct Budget {
  std::size_t queries = 0;
  std::size_t weights = std::numeric_limits<std::size_t>::max();
};

/// Networks behind a realizable agent: one per adaptive query map q_2..q_N
/// (query_nets[n-2] reads a transcript of length n-1) plus the predictor.
struct AgentRealization {
  std::vector<MlpNetwork> query_nets;
  MlpNetwork predictor_net;
};

struct InContextLearner {
  std::string kind;
  std::size_t dim = 1;
  std::vector<Point> queries;
  Predictor predictor;
  std::optional<MlpNetwork> predictor_net;  // set iff realizable
  Budget budget;
  nlohmann::json params = nlohmann::json::object();

  bool realizable() const { return predictor_net.has_value(); }
  std::size_t weight_count() const { return predictor_net ? count_weights(*predictor_net) : 0; }
};

struct AgenticLearner {
  std::string kind;
  std::size_t dim = 1;
  Point initial_query;
  std::vector<QueryMap> query_maps;  // q_2 .. q_N
  Predictor predictor;
  std::optional<AgentRealization> realization;  // set iff realizable
  Budget budget;
  nlohmann::json params = nlohmann::json::object();

  std::size_t n_queries() const { return 1 + query_maps.size(); }
  bool realizable() const { return realization.has_value(); }
  std::size_t weight_count() const {
    if (!realization) return 0;
    std::size_t m = count_weights(realization->predictor_net);
    for (const auto& q : realization->query_nets) m = std::max(m, count_weights(q));
    return m;
  }
};

struct RunResult {
  Context context;
  PointFunction predict;
};

// ---------------------------------------------------------------------------
// Realizable wrappers

/// Predictor that evaluates `net` on (flatten(context), x). The transcript
/// part is folded into the network once per context.
inline Predictor network_predictor(MlpNetwork net) {
  auto shared = std::make_shared<const MlpNetwork>(std::move(net));
  return [shared](const Context& ctx) -> PointFunction {
    const auto prefix = flatten(ctx);
    auto bound = std::make_shared<const MlpNetwork>(partial_evaluate(*shared, prefix));
    return [bound](std::span<const double> x) { return evaluate_scalar(*bound, x); };
  };
}

inline QueryMap network_query_map(MlpNetwork net) {
  auto shared = std::make_shared<const MlpNetwork>(std::move(net));
  return [shared](const Context& ctx) { return evaluate(*shared, flatten(ctx)); };
}

inline void check_budget(std::size_t queries, std::size_t weights, const Budget& b) {
  require(queries <= b.queries, "query budget N",
          std::to_string(queries) + " queries exceed N = " + std::to_string(b.queries));
  require(weights <= b.weights, "weight budget m",
          std::to_string(weights) + " weights exceed m = " + std::to_string(b.weights));
}

inline InContextLearner make_realizable_in_context(std::string kind, std::size_t dim, std::vector<Point> queries,
                                                   MlpNetwork net, Budget budget) {
  const std::size_t expected = queries.size() * (dim + 1) + dim;
  if (net.in_dim() != expected || net.out_dim() != 1)
    throw DimensionError("in-context predictor network must map " + std::to_string(expected) + " inputs to 1");
  check_budget(queries.size(), count_weights(net), budget);
  InContextLearner l{std::move(kind), dim, std::move(queries), network_predictor(net), net, budget};
  return l;
}

inline AgenticLearner make_realizable_agent(std::string kind, std::size_t dim, Point initial,
                                            AgentRealization nets, Budget budget) {
  AgenticLearner l;
  l.kind = std::move(kind);
  l.dim = dim;
  l.initial_query = std::move(initial);
  for (std::size_t k = 0; k < nets.query_nets.size(); ++k) {
    const auto& q = nets.query_nets[k];
    if (q.in_dim() != (k + 1) * (dim + 1) || q.out_dim() != dim)
      throw DimensionError("query network " + std::to_string(k + 2) + " has the wrong shape");
    l.query_maps.push_back(network_query_map(q));
  }
  l.predictor = network_predictor(nets.predictor_net);
  l.realization = std::move(nets);
  l.budget = budget;
  check_budget(l.n_queries(), l.weight_count(), budget);
  return l;
}

// ---------------------------------------------------------------------------
// Running learners

namespace learner_detail {

inline void check_query(const Point& x, std::size_t dim, std::size_t n) {
  if (x.size() != dim)
    throw DimensionError("query " + std::to_string(n) + " has dimension " + std::to_string(x.size()) +
                         ", domain has " + std::to_string(dim));
  for (double v : x)
    require(v >= 0.0 && v <= 1.0, "query inside the domain [0,1]^d",
            "query " + std::to_string(n) + " has coordinate " + format_real(v));
}

}  // namespace learner_detail

inline RunResult run_in_context(const InContextLearner& l, const Task& task) {
  require(l.dim == task_dim(task), "learner/task dimension match", "");
  check_budget(l.queries.size(), l.weight_count(), l.budget);
  RunResult r;
  for (std::size_t n = 0; n < l.queries.size(); ++n) {
    learner_detail::check_query(l.queries[n], l.dim, n + 1);
    r.context.push_back({l.queries[n], evaluate_task(task, l.queries[n])});
  }
  r.predict = l.predictor(r.context);
  return r;
}

/// x_1 fixed, x_n = q_n(C_{n-1}); exactly n_queries() queries are issued.
inline RunResult run_agentic(const AgenticLearner& l, const Task& task) {
  require(l.dim == task_dim(task), "learner/task dimension match", "");
  check_budget(l.n_queries(), l.weight_count(), l.budget);
  RunResult r;
  Point x = l.initial_query;
  for (std::size_t n = 1; n <= l.n_queries(); ++n) {
    learner_detail::check_query(x, l.dim, n);
    const double y = evaluate_task(task, x);
    r.context.push_back({x, y});
    if (n < l.n_queries()) x = l.query_maps[n - 1](r.context);
  }
  r.predict = l.predictor(r.context);
  return r;
}

/// Agent with constant query maps reproducing the in-context learner's
/// queries and reusing its predictor (and predictor network).
inline AgenticLearner embed_ic_as_agent(const InContextLearner& l) {
  require(!l.queries.empty(), "in-context learner has at least one query", "");
  AgenticLearner a;
  a.kind = "embedded:" + l.kind;
  a.dim = l.dim;
  a.initial_query = l.queries.front();
  for (std::size_t n = 1; n < l.queries.size(); ++n) {
    Point q = l.queries[n];
    a.query_maps.push_back([q](const Context&) { return q; });
  }
  a.predictor = l.predictor;
  if (l.predictor_net) {
    AgentRealization nets{{}, *l.predictor_net};
    for (std::size_t n = 1; n < l.queries.size(); ++n)
      nets.query_nets.push_back(constant_network(n * (l.dim + 1), l.queries[n]));
    a.realization = std::move(nets);
  }
  a.budget = l.budget;
  a.params = {{"embedded", l.kind}, {"inner", l.params}};
  return a;
}

// ---------------------------------------------------------------------------
// Baseline in-context learners

inline InContextLearner make_zero_ic_learner(std::size_t dim, std::vector<Point> queries) {
  InContextLearner l;
  l.kind = "zero-ic";
  l.dim = dim;
  l.queries = std::move(queries);
  l.budget = {l.queries.size()};
  l.predictor = [](const Context&) -> PointFunction { return [](std::span<const double>) { return 0.0; }; };
  return l;
}

/// Points of a k^d lattice with cell centres (i + 1/2)/k, k = ceil(N^{1/d}),
/// truncated to the first N in lexicographic order.
inline std::vector<Point> lattice_queries(std::size_t dim, std::size_t n) {
  std::size_t k = 1;
  auto pow_k = [&](std::size_t base) {
    std::size_t p = 1;
    for (std::size_t i = 0; i < dim; ++i) p *= base;
    return p;
  };
  while (pow_k(k) < n) ++k;
  std::vector<Point> out;
  for (std::size_t idx = 0; idx < n; ++idx) {
    Point p(dim);
    std::size_t rem = idx;
    for (std::size_t i = dim; i-- > 0;) {
      p[i] = (static_cast<double>(rem % k) + 0.5) / static_cast<double>(k);
      rem /= k;
    }
    out.push_back(std::move(p));
  }
  return out;
}

/// Nearest-query (sup-norm) predictor over fixed queries; ties go to the
/// earliest query.
inline InContextLearner make_grid_ic_learner(std::size_t dim, std::vector<Point> queries) {
  InContextLearner l;
  l.kind = "grid-ic";
  l.dim = dim;
  l.queries = std::move(queries);
  l.budget = {l.queries.size()};
  l.params = {{"queries", l.queries}};
  l.predictor = [](const Context& ctx) -> PointFunction {
    return [ctx](std::span<const double> x) {
      double best = std::numeric_limits<double>::infinity(), value = 0.0;
      for (const auto& o : ctx) {
        double dist = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) dist = std::max(dist, std::abs(x[i] - o.query[i]));
        if (dist < best) {
          best = dist;
          value = o.response;
        }
      }
      return value;
    };
  };
  return l;
}

/// Unrestricted in-context learner for the pointed-value family: reads q* and
/// s off the static points and evaluates g itself.
inline InContextLearner make_value_ic_learner(std::size_t n_budget, double delta, HardFunctionPtr hard_fn) {
  validate_hat_family(n_budget, delta);
  InContextLearner l;
  l.kind = "value-ic";
  l.dim = 1;
  for (double q : static_points(n_budget)) l.queries.push_back({q});
  l.budget = {n_budget};
  l.params = {{"N", n_budget}, {"delta", delta}};
  l.predictor = [n_budget, delta, hard_fn](const Context& ctx) -> PointFunction {
    const double q_star = ctx[0].response;
    std::vector<double> s;
    for (std::size_t i = 1; i + 1 < n_budget; ++i) s.push_back(ctx[i].response);
    const double g = (*hard_fn)(s);
    const auto q = static_points(n_budget);
    return [=](std::span<const double> x) {
      double v = q_star * hat_reference({q[0], delta}, x[0]);
      for (std::size_t i = 1; i + 1 < n_budget; ++i) v += s[i - 1] * hat_reference({q[i], delta}, x[0]);
      return v + g * hat_reference({q_star, delta}, x[0]);
    };
  };
  return l;
}

// ---------------------------------------------------------------------------
// Network assembly helpers

namespace learner_detail {

/// Row-by-row builder for a single affine layer.
class AffineMap {
 public:
  explicit AffineMap(std::size_t in_dim) : in_(in_dim) {}

  std::size_t row(double bias = 0.0) {
    weights_.emplace_back(in_, 0.0);
    bias_.push_back(bias);
    return bias_.size() - 1;
  }
  void add(std::size_t r, std::size_t c, double w) { weights_[r][c] += w; }
  std::size_t rows() const { return bias_.size(); }

  MlpNetwork network() const {
    Matrix m(bias_.size(), in_);
    for (std::size_t r = 0; r < bias_.size(); ++r)
      for (std::size_t c = 0; c < in_; ++c) m(r, c) = weights_[r][c];
    return affine_network(std::move(m), bias_);
  }

 private:
  std::size_t in_;
  std::vector<std::vector<double>> weights_;
  std::vector<double> bias_;
};

/// Parallel components laid out left to right over consecutive slices.
inline MlpNetwork stack(const std::vector<MlpNetwork>& parts) { return parallel(parts, InputMode::disjoint); }

}  // namespace learner_detail

// ---------------------------------------------------------------------------
// Cubical-path agent

/// Binary-search style reconstruction: on level n it queries the 2^d children
/// of the recovered level-(n-1) cube, subtracts the already recovered ancestor
/// bumps, and keeps the unique child whose residual is 1.
class PathProtocol {
 public:
  PathProtocol(std::size_t d, std::size_t depth, double eta) : d_(d), depth_(depth), eta_(eta) {
    require(d >= 1, "d >= 1", "d = 0");
    require(depth >= 1, "L >= 1", "L = 0");
    require(eta > 0.0 && eta < 0.5, "0 < eta < 1/2", "eta = " + format_real(eta));
  }

  std::size_t children() const { return std::size_t{1} << d_; }
  std::size_t n_queries() const { return children() * depth_; }
  std::size_t stride() const { return d_ + 1; }

  /// Centre of the level-(n-1) cube plus 2^-(n+1) eps^j.
  Point child_query(const Point& parent_center, std::size_t level, std::size_t j) const {
    const auto eps = child_sign(d_, j);
    Point q(d_);
    for (std::size_t i = 0; i < d_; ++i) q[i] = parent_center[i] + std::ldexp(eps[i], -static_cast<int>(level) - 1);
    return q;
  }

  /// Centres c^(1..k) of every completed level in the transcript.
  std::vector<Point> recover_centers(const Context& ctx) const {
    const std::size_t k = children();
    std::vector<Point> centers;
    for (std::size_t level = 1; level * k <= ctx.size() && level <= depth_; ++level) {
      std::size_t winner = k;
      for (std::size_t j = 0; j < k; ++j) {
        const auto& o = ctx[(level - 1) * k + j];
        double rho = o.response;
        for (std::size_t l = 0; l < centers.size(); ++l)
          rho -= bump_reference(centers[l], std::ldexp(1.0, -static_cast<int>(l) - 1), eta_, o.query);
        const bool high = rho > 0.5;
        if (rho < -1e-9 || rho > 1.0 + 1e-9)
          throw InvariantError("level " + std::to_string(level) + " residual " + format_real(rho) + " outside [0,1]");
        if (high) {
          if (winner != k) throw InvariantError("level " + std::to_string(level) + ": two residuals above 1/2");
          winner = j;
        }
      }
      if (winner == k) throw InvariantError("level " + std::to_string(level) + ": no residual above 1/2");
      centers.push_back(ctx[(level - 1) * k + winner].query);
    }
    return centers;
  }

  Point next_query(const Context& ctx) const {
    const std::size_t t = ctx.size();
    const std::size_t level = t / children() + 1, j = t % children();
    const auto centers = recover_centers(ctx);
    const Point parent = level == 1 ? Point(d_, 0.5) : centers[level - 2];
    return child_query(parent, level, j);
  }

  double predict(const std::vector<Point>& centers, std::span<const double> x) const {
    double v = 0.0;
    for (std::size_t l = 0; l < centers.size(); ++l)
      v += bump_reference(centers[l], std::ldexp(1.0, -static_cast<int>(l) - 1), eta_, x);
    return v;
  }

  // -- network realizations ------------------------------------------------

  /// Transcript of length t -> c^(level), for a transcript containing every
  /// query of levels 1..level. The parent centre and each ancestor centre
  /// c^(l) are read affinely from the first query of level l+1; residuals go
  /// through bump networks, chi selects, and the selected displacement is
  /// added to the parent centre.
  MlpNetwork center_net(std::size_t level, std::size_t t) const {
    using learner_detail::AffineMap;
    const std::size_t k = children(), in = t * stride();
    const std::size_t base = (level - 1) * k;  // first query of `level`
    const auto eps0 = child_sign(d_, 0);

    // c^(l) = x_{first of level l+1} - 2^-(l+2) eps^0 ; c^(0) = 1/2.
    auto add_center = [&](AffineMap& a, std::size_t l) {
      for (std::size_t i = 0; i < d_; ++i) {
        if (l == 0) {
          a.row(0.5);
        } else {
          const std::size_t r = a.row(-std::ldexp(eps0[i], -static_cast<int>(l) - 2));
          a.add(r, l * k * stride() + i, 1.0);
        }
      }
    };

    // A: [c^(level-1), y_0..y_{k-1}, (c^(l), x_j) for j, l=1..level-1]
    AffineMap a(in);
    add_center(a, level - 1);
    for (std::size_t j = 0; j < k; ++j) a.add(a.row(), (base + j) * stride() + d_, 1.0);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = 1; l < level; ++l) {
        add_center(a, l);
        for (std::size_t i = 0; i < d_; ++i) a.add(a.row(), (base + j) * stride() + i, 1.0);
      }

    // B: pass c and y through, bump networks on each (c^(l), x_j).
    std::vector<MlpNetwork> parts{identity_network(d_ + k)};
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = 1; l < level; ++l)
        parts.push_back(bump_at_gadget(d_, std::ldexp(1.0, -static_cast<int>(l)), eta_));
    const MlpNetwork bumps = learner_detail::stack(parts);

    // C: [c, rho_j = y_j - sum_l theta_{j,l}]
    AffineMap residual(d_ + k + k * (level - 1));
    for (std::size_t i = 0; i < d_; ++i) residual.add(residual.row(), i, 1.0);
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t r = residual.row();
      residual.add(r, d_ + j, 1.0);
      for (std::size_t l = 1; l < level; ++l) residual.add(r, d_ + k + j * (level - 1) + (l - 1), -1.0);
    }

    // D: chi on every residual.
    std::vector<MlpNetwork> select{identity_network(d_)};
    for (std::size_t j = 0; j < k; ++j) select.push_back(selector_gadget());

    // E: c^(level) = c^(level-1) + 2^-(level+1) sum_j chi(rho_j) eps^j
    AffineMap combine(d_ + k);
    for (std::size_t i = 0; i < d_; ++i) {
      const std::size_t r = combine.row();
      combine.add(r, i, 1.0);
      for (std::size_t j = 0; j < k; ++j)
        combine.add(r, d_ + j, std::ldexp(child_sign(d_, j)[i], -static_cast<int>(level) - 1));
    }

    return compose_all({combine.network(), learner_detail::stack(select), residual.network(), bumps, a.network()});
  }

  /// Query map for query index t (0-based, t >= 1) reading a transcript of
  /// length t.
  MlpNetwork query_net(std::size_t t) const {
    using learner_detail::AffineMap;
    const std::size_t k = children(), level = t / k + 1, j = t % k;
    const auto eps0 = child_sign(d_, 0), epsj = child_sign(d_, j);
    if (j != 0) {
      // Same parent as the first query of this level.
      AffineMap a(t * stride());
      for (std::size_t i = 0; i < d_; ++i) {
        const std::size_t r = a.row(std::ldexp(epsj[i] - eps0[i], -static_cast<int>(level) - 1));
        a.add(r, (level - 1) * k * stride() + i, 1.0);
      }
      return a.network();
    }
    AffineMap shift(d_);
    for (std::size_t i = 0; i < d_; ++i) shift.add(shift.row(std::ldexp(eps0[i], -static_cast<int>(level) - 1)), i, 1.0);
    return compose(shift.network(), center_net(level - 1, t));
  }

  /// (transcript, x) -> sum_n Theta_n(c^(n), x).
  MlpNetwork predictor_net() const {
    using learner_detail::AffineMap;
    const std::size_t k = children(), t = n_queries(), tin = t * stride();
    const auto eps0 = child_sign(d_, 0);

    std::vector<MlpNetwork> parts{center_net(depth_, t)};
    std::vector<InputSlice> slices{{0, tin}};
    if (depth_ > 1) {
      AffineMap earlier(tin);
      for (std::size_t l = 1; l < depth_; ++l)
        for (std::size_t i = 0; i < d_; ++i)
          earlier.add(earlier.row(-std::ldexp(eps0[i], -static_cast<int>(l) - 2)), l * k * stride() + i, 1.0);
      parts.push_back(earlier.network());
      slices.push_back({0, tin});
    }
    parts.push_back(identity_network(d_));
    slices.push_back({tin, d_});
    const MlpNetwork gather = parallel(parts, slices, tin + d_);
    // gather output: [c^(L), c^(1..L-1), x]

    AffineMap pairs(d_ * (depth_ + 1));
    const std::size_t xoff = d_ * depth_;
    for (std::size_t l = 1; l <= depth_; ++l) {
      const std::size_t coff = l == depth_ ? 0 : d_ * l;
      for (std::size_t i = 0; i < d_; ++i) pairs.add(pairs.row(), coff + i, 1.0);
      for (std::size_t i = 0; i < d_; ++i) pairs.add(pairs.row(), xoff + i, 1.0);
    }
    std::vector<MlpNetwork> bumps;
    for (std::size_t l = 1; l <= depth_; ++l)
      bumps.push_back(bump_at_gadget(d_, std::ldexp(1.0, -static_cast<int>(l)), eta_));
    AffineMap sum(depth_);
    const std::size_t r = sum.row();
    for (std::size_t l = 0; l < depth_; ++l) sum.add(r, l, 1.0);
    return compose_all({sum.network(), learner_detail::stack(bumps), pairs.network(), gather});
  }

  std::size_t dim() const { return d_; }
  std::size_t depth() const { return depth_; }
  double eta() const { return eta_; }

 private:
  std::size_t d_, depth_;
  double eta_;
};

/// Agent for the cubical-path family issuing exactly 2^d L queries. With
/// `realizable`, every query map and the predictor are networks assembled
/// from gadgets. Refuses budgets that cannot hold the protocol.
inline AgenticLearner make_path_agent(std::size_t d, std::size_t depth, double eta, bool realizable,
                                      Budget budget = {}) {
  auto proto = std::make_shared<const PathProtocol>(d, depth, eta);
  if (budget.queries == 0) budget.queries = proto->n_queries();
  require(budget.queries >= proto->n_queries(), "N >= 2^d L",
          "N = " + std::to_string(budget.queries) + " < " + std::to_string(proto->n_queries()));
  const Point initial = proto->child_query(Point(d, 0.5), 1, 0);
  const nlohmann::json params = {{"d", d}, {"L", depth}, {"eta", eta}, {"realizable", realizable}};
  if (realizable) {
    AgentRealization nets{{}, proto->predictor_net()};
    for (std::size_t t = 1; t < proto->n_queries(); ++t) nets.query_nets.push_back(proto->query_net(t));
    auto l = make_realizable_agent("path-agent", d, initial, std::move(nets), budget);
    l.params = params;
    return l;
  }
  AgenticLearner l;
  l.kind = "path-agent";
  l.dim = d;
  l.initial_query = initial;
  for (std::size_t t = 1; t < proto->n_queries(); ++t)
    l.query_maps.push_back([proto](const Context& ctx) { return proto->next_query(ctx); });
  l.predictor = [proto](const Context& ctx) -> PointFunction {
    auto centers = proto->recover_centers(ctx);
    return [proto, centers = std::move(centers)](std::span<const double> x) { return proto->predict(centers, x); };
  };
  l.budget = budget;
  l.params = params;
  return l;
}

// ---------------------------------------------------------------------------
// Hat-family agents

namespace learner_detail {

/// Network for sum_k Mult_eps(coef_k, h_{center_k}(x)) where term k reads its
/// coefficient and centre from affine expressions in (transcript, x).
/// `terms[k] = {coef column, centre column or -1, fixed centre}`.
struct HatTerm {
  std::size_t coef_col;
  long center_col;  // -1: use `center`
  double center;
};

inline MlpNetwork hat_sum_net(std::size_t in_dim, std::size_t x_col, const std::vector<HatTerm>& terms,
                              double delta, double eps) {
  AffineMap a(in_dim);
  for (const auto& t : terms) {
    a.add(a.row(), t.coef_col, 1.0);
    const std::size_t r = a.row(t.center_col < 0 ? -t.center : 0.0);
    a.add(r, x_col, 1.0);
    if (t.center_col >= 0) a.add(r, static_cast<std::size_t>(t.center_col), -1.0);
  }
  const MlpNetwork hat = hat_gadget({0.0, delta});
  const MlpNetwork mult = mult_eps(eps);
  std::vector<MlpNetwork> inner, products;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    inner.push_back(identity_network(1));
    inner.push_back(hat);
    products.push_back(mult);
  }
  AffineMap sum(terms.size());
  const std::size_t r = sum.row();
  for (std::size_t k = 0; k < terms.size(); ++k) sum.add(r, k, 1.0);
  return compose_all({sum.network(), stack(products), stack(inner), a.network()});
}

inline std::vector<MlpNetwork> constant_query_nets(const std::vector<double>& points, std::size_t count) {
  std::vector<MlpNetwork> nets;
  for (std::size_t n = 1; n < count; ++n) nets.push_back(constant_network(2 * n, {points[n]}));
  return nets;
}

}  // namespace learner_detail

/// Pointed-value agent: q_1..q_{N-1} then one adaptive query at y_1 = q*.
/// General mode predicts with exact products; realizable mode replaces every
/// product by Mult_eps, for a sup error of at most N eps.
inline AgenticLearner make_value_agent(std::size_t n_budget, double eps, bool realizable, double delta = 0.0,
                                       Budget budget = {}) {
  if (delta == 0.0) delta = default_delta(n_budget);
  validate_hat_family(n_budget, delta);
  if (realizable) require(eps > 0.0 && eps < 1.0, "0 < eps < 1", "eps = " + format_real(eps));
  if (budget.queries == 0) budget.queries = n_budget;
  const auto q = static_points(n_budget);
  const Point initial{q[0]};
  const nlohmann::json params = {{"N", n_budget}, {"eps", eps}, {"delta", delta}, {"realizable", realizable}};

  if (realizable) {
    using learner_detail::HatTerm;
    AgentRealization nets{learner_detail::constant_query_nets(q, n_budget - 1), constant_network(1, {0.0})};
    Matrix pick(1, 2 * (n_budget - 1));
    pick(0, 1) = 1.0;  // y_1
    nets.query_nets.push_back(affine_network(pick, {0.0}));
    std::vector<HatTerm> terms;
    for (std::size_t i = 0; i + 1 < n_budget; ++i) terms.push_back({2 * i + 1, -1, q[i]});
    terms.push_back({2 * (n_budget - 1) + 1, 1, 0.0});  // (y_*, h_{y_1})
    nets.predictor_net = learner_detail::hat_sum_net(2 * n_budget + 1, 2 * n_budget, terms, delta, eps);
    auto l = make_realizable_agent("value-agent", 1, initial, std::move(nets), budget);
    l.params = params;
    return l;
  }

  AgenticLearner l;
  l.kind = "value-agent";
  l.dim = 1;
  l.initial_query = initial;
  for (std::size_t n = 1; n + 1 < n_budget; ++n) {
    const double qn = q[n];
    l.query_maps.push_back([qn](const Context&) { return Point{qn}; });
  }
  l.query_maps.push_back([](const Context& ctx) { return Point{ctx[0].response}; });
  l.predictor = [n_budget, delta, q](const Context& ctx) -> PointFunction {
    std::vector<double> y;
    for (const auto& o : ctx) y.push_back(o.response);
    return [n_budget, delta, q, y](std::span<const double> x) {
      double v = 0.0;
      for (std::size_t i = 0; i + 1 < n_budget; ++i) v += y[i] * hat_reference({q[i], delta}, x[0]);
      return v + y[n_budget - 1] * hat_reference({y[0], delta}, x[0]);
    };
  };
  l.budget = budget;
  l.params = params;
  return l;
}

/// How the address agent chooses its final query.
struct AddressMode {
  /// General: evaluate the address function on fold_tau(s) directly.
  HardFunctionPtr address_fn;
  /// Realizable: final query = address_net(s); predictor uses Mult_eps.
  std::optional<MlpNetwork> address_net;
  double eps = 1e-3;
};

/// Address-spike agent: q_1..q_{N-1}, then one query at the (computed or
/// network-predicted) address, then predicts sum s_i h_{q_i} + y_N h_{x_N}.
inline AgenticLearner make_address_agent(std::size_t n_budget, const AddressMode& mode, double delta = 0.0,
                                         Budget budget = {}) {
  if (delta == 0.0) delta = default_delta(n_budget);
  validate_hat_family(n_budget, delta);
  if (budget.queries == 0) budget.queries = n_budget;
  const auto q = static_points(n_budget);
  const Point initial{q[0]};
  const std::size_t last_in = 2 * (n_budget - 1);

  if (mode.address_net) {
    const auto& an = *mode.address_net;
    if (an.in_dim() != n_budget - 1 || an.out_dim() != 1)
      throw DimensionError("address network must map N-1 inputs to 1");
    using learner_detail::HatTerm;
    AgentRealization nets{learner_detail::constant_query_nets(q, n_budget - 1), constant_network(1, {0.0})};
    Matrix pick(n_budget - 1, last_in);
    for (std::size_t i = 0; i + 1 < n_budget; ++i) pick(i, 2 * i + 1) = 1.0;
    nets.query_nets.push_back(compose(an, affine_network(pick, std::vector<double>(n_budget - 1, 0.0))));
    std::vector<HatTerm> terms;
    for (std::size_t i = 0; i + 1 < n_budget; ++i) terms.push_back({2 * i + 1, -1, q[i]});
    terms.push_back({last_in + 1, static_cast<long>(last_in), 0.0});
    nets.predictor_net = learner_detail::hat_sum_net(2 * n_budget + 1, 2 * n_budget, terms, delta, mode.eps);
    auto l = make_realizable_agent("address-agent", 1, initial, std::move(nets), budget);
    l.params = {{"N", n_budget}, {"delta", delta}, {"eps", mode.eps}, {"realizable", true}};
    return l;
  }

  require(mode.address_fn != nullptr && mode.address_fn->input_dim() == n_budget - 1,
          "address function input_dim = N-1", "");
  AgenticLearner l;
  l.kind = "address-agent";
  l.dim = 1;
  l.initial_query = initial;
  for (std::size_t n = 1; n + 1 < n_budget; ++n) {
    const double qn = q[n];
    l.query_maps.push_back([qn](const Context&) { return Point{qn}; });
  }
  auto g = mode.address_fn;
  l.query_maps.push_back([g](const Context& ctx) {
    std::vector<double> s;
    for (const auto& o : ctx) s.push_back(o.response);
    return Point{address_of(*g, s)};
  });
  l.predictor = [n_budget, delta, q](const Context& ctx) -> PointFunction {
    std::vector<double> y;
    for (const auto& o : ctx) y.push_back(o.response);
    const double spike = ctx.back().query[0];
    return [n_budget, delta, q, y, spike](std::span<const double> x) {
      double v = 0.0;
      for (std::size_t i = 0; i + 1 < n_budget; ++i) v += y[i] * hat_reference({q[i], delta}, x[0]);
      return v + y[n_budget - 1] * hat_reference({spike, delta}, x[0]);
    };
  };
  l.budget = budget;
  l.params = {{"N", n_budget}, {"delta", delta}, {"realizable", false}};
  if (g->kind() != HardKind::custom) l.params["address_fn"] = to_json(*g);
  return l;
}

}  // namespace adaptlab
