#pragma once

// The three task families (cubical path, pointed value, address spike),
// dyadic cube indexing, and the pluggable stand-in for the hard function.
// Tasks evaluate through closed-form reference formulas and serve as ground
// truth for the network-built learners.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "adaptlab/errors.hpp"
#include "adaptlab/format.hpp"
#include "adaptlab/gadgets.hpp"

namespace adaptlab {

using Point = std::vector<double>;

// ---------------------------------------------------------------------------
// Dyadic cubes

/// Cube prod_i [k_i 2^-n, (k_i+1) 2^-n] of the level-n dyadic partition.
struct CubeIndex {
  int level = 0;
  std::vector<std::int64_t> index;

  std::size_t dim() const { return index.size(); }
  double side_length() const { return std::ldexp(1.0, -level); }

  Point center() const {
    Point c(index.size());
    for (std::size_t i = 0; i < index.size(); ++i)
      c[i] = (static_cast<double>(index[i]) + 0.5) * side_length();
    return c;
  }

  bool valid() const {
    if (level < 0 || level > 60 || index.empty()) return false;
    const std::int64_t cells = std::int64_t{1} << level;
    for (auto k : index)
      if (k < 0 || k >= cells) return false;
    return true;
  }

  CubeIndex parent() const {
    CubeIndex p{level - 1, index};
    for (auto& k : p.index) k >>= 1;
    return p;
  }

  /// The 2^d children. Child j displaces the centre by 2^-(n+1) eps^j where
  /// eps^j_i = +1 if bit i of j is set and -1 otherwise.
  std::vector<CubeIndex> children() const {
    const std::size_t d = index.size();
    std::vector<CubeIndex> out;
    out.reserve(std::size_t{1} << d);
    for (std::size_t j = 0; j < (std::size_t{1} << d); ++j) {
      CubeIndex c{level + 1, index};
      for (std::size_t i = 0; i < d; ++i) c.index[i] = 2 * index[i] + static_cast<std::int64_t>((j >> i) & 1U);
      out.push_back(std::move(c));
    }
    return out;
  }

  BumpSpec bump(double eta) const { return BumpSpec{center(), side_length(), eta}; }

  friend bool operator==(const CubeIndex&, const CubeIndex&) = default;
};

struct CubeGeometry {
  Point center;
  double side_length;
};

inline CubeGeometry cube_geometry(const CubeIndex& c) { return {c.center(), c.side_length()}; }

/// Sign vector eps^j used by CubeIndex::children.
inline std::vector<double> child_sign(std::size_t d, std::size_t j) {
  std::vector<double> e(d);
  for (std::size_t i = 0; i < d; ++i) e[i] = ((j >> i) & 1U) ? 1.0 : -1.0;
  return e;
}

/// Level-n cell containing x. Cells are half-open [k 2^-n, (k+1) 2^-n) except
/// the last cell on each axis, which also contains the coordinate 1.
inline CubeIndex cell_of(std::span<const double> x, int level) {
  const std::int64_t cells = std::int64_t{1} << level;
  CubeIndex c{level, std::vector<std::int64_t>(x.size())};
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto k = static_cast<std::int64_t>(std::floor(std::ldexp(x[i], level)));
    c.index[i] = std::clamp<std::int64_t>(k, 0, cells - 1);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Cubical paths

class CubicalPath {
 public:
  /// cubes[n-1] must sit at level n and be a dyadic child of cubes[n-2].
  CubicalPath(std::vector<CubeIndex> cubes) : cubes_(std::move(cubes)) {
    require(!cubes_.empty(), "path depth L >= 1", "empty path");
    const std::size_t d = cubes_.front().dim();
    for (std::size_t n = 0; n < cubes_.size(); ++n) {
      const auto& c = cubes_[n];
      require(c.valid() && c.dim() == d, "valid cube index", "level " + std::to_string(n + 1));
      require(c.level == static_cast<int>(n) + 1, "path cube n has level n",
              "cube " + std::to_string(n + 1) + " has level " + std::to_string(c.level));
      if (n > 0)
        require(c.parent() == cubes_[n - 1], "strict nesting",
                "cube at level " + std::to_string(n + 1) + " is not a child of its predecessor");
    }
  }

  std::size_t dim() const { return cubes_.front().dim(); }
  std::size_t depth() const { return cubes_.size(); }
  const std::vector<CubeIndex>& cubes() const { return cubes_; }

  friend bool operator==(const CubicalPath&, const CubicalPath&) = default;

 private:
  std::vector<CubeIndex> cubes_;
};

/// Ancestor chain (levels 1..level) of a cube.
inline CubicalPath path_to(const CubeIndex& cube) {
  std::vector<CubeIndex> chain;
  for (CubeIndex c = cube; c.level >= 1; c = c.parent()) chain.push_back(c);
  std::reverse(chain.begin(), chain.end());
  return CubicalPath(std::move(chain));
}

struct PathTask {
  CubicalPath path;
  double eta = 0.25;

  std::size_t dim() const { return path.dim(); }
};

inline PathTask make_path_task(CubicalPath path, double eta) {
  require(eta > 0.0 && eta < 0.5, "0 < eta < 1/2", "eta = " + format_real(eta));
  return PathTask{std::move(path), eta};
}

inline double eval_path_task(const PathTask& t, std::span<const double> x) {
  if (x.size() != t.dim())
    throw DimensionError("path task expects dimension " + std::to_string(t.dim()) + ", got " +
                         std::to_string(x.size()));
  thread_local std::vector<double> center;
  center.resize(x.size());
  double sum = 0.0;
  for (const auto& c : t.path.cubes()) {
    const double l = c.side_length();
    for (std::size_t i = 0; i < x.size(); ++i) center[i] = (static_cast<double>(c.index[i]) + 0.5) * l;
    sum += bump_reference(center, l, t.eta, x);
  }
  return sum;
}

/// Independent uniform child choices below a uniform level-1 cube.
template <class Rng>
CubicalPath random_path(std::size_t d, std::size_t depth, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, (std::size_t{1} << d) - 1);
  std::vector<CubeIndex> cubes;
  CubeIndex c{0, std::vector<std::int64_t>(d, 0)};
  for (std::size_t n = 0; n < depth; ++n) {
    c = c.children()[pick(rng)];
    cubes.push_back(c);
  }
  return CubicalPath(std::move(cubes));
}

// ---------------------------------------------------------------------------
// Hard-function stand-ins

enum class HardKind { seeded_piecewise_linear, invertible_address, custom };

inline const char* to_string(HardKind k) {
  switch (k) {
    case HardKind::seeded_piecewise_linear: return "seeded-piecewise-linear";
    case HardKind::invertible_address: return "invertible-address";
    case HardKind::custom: return "custom";
  }
  return "?";
}

/// Continuous, deterministic map [0,1]^input_dim -> [lo, hi]. No hardness is
/// claimed for any mode; these only fill the role the families reserve for
/// a function no small network can approximate.
class HardFunction {
 public:
  using Fn = std::function<double(std::span<const double>)>;

  /// Multilinear interpolation of pseudorandom node values on a uniform grid
  /// with `resolution` cells per axis.
  static HardFunction seeded(std::uint64_t seed, std::size_t input_dim, double lo = 0.0, double hi = 1.0,
                             int resolution = 8) {
    require(input_dim >= 1, "hard function input_dim >= 1", "0");
    require(resolution >= 1, "resolution >= 1", std::to_string(resolution));
    require(lo <= hi, "codomain lo <= hi", "");
    HardFunction h(HardKind::seeded_piecewise_linear, seed, input_dim, lo, hi);
    h.resolution_ = resolution;
    return h;
  }

  /// g(u) = lo + (hi - lo) u_1: surjective onto [lo, hi], invertible in u_1.
  static HardFunction invertible_address(std::size_t input_dim, double lo = 2.0 / 3.0, double hi = 1.0) {
    require(input_dim >= 1, "hard function input_dim >= 1", "0");
    require(lo < hi, "codomain lo < hi", "");
    return HardFunction(HardKind::invertible_address, 0, input_dim, lo, hi);
  }

  /// Caller-supplied map; values are clamped into the codomain.
  static HardFunction custom(std::size_t input_dim, double lo, double hi, Fn fn) {
    require(input_dim >= 1, "hard function input_dim >= 1", "0");
    HardFunction h(HardKind::custom, 0, input_dim, lo, hi);
    h.fn_ = std::move(fn);
    return h;
  }

  HardKind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t input_dim() const { return input_dim_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  int resolution() const { return resolution_; }

  double operator()(std::span<const double> u) const {
    if (u.size() != input_dim_)
      throw DimensionError("hard function expects dimension " + std::to_string(input_dim_) + ", got " +
                           std::to_string(u.size()));
    switch (kind_) {
      case HardKind::invertible_address: return lo_ + (hi_ - lo_) * u[0];
      case HardKind::custom: return std::clamp(fn_(u), lo_, hi_);
      case HardKind::seeded_piecewise_linear: return interpolate(u);
    }
    return 0.0;
  }

  /// Seeded node value, exposed for tests.
  double node_value(std::span<const std::int64_t> node) const {
    std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
    for (auto k : node) words.push_back(static_cast<std::uint32_t>(k));
    std::seed_seq seq(words.begin(), words.end());
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    const std::uint64_t bits = (std::uint64_t{out[0]} << 32 | out[1]) >> 11;
    return lo_ + (hi_ - lo_) * std::ldexp(static_cast<double>(bits), -53);
  }

 private:
  HardFunction(HardKind k, std::uint64_t seed, std::size_t dim, double lo, double hi)
      : kind_(k), seed_(seed), input_dim_(dim), lo_(lo), hi_(hi) {}

  double interpolate(std::span<const double> u) const {
    const std::size_t d = input_dim_;
    std::vector<std::int64_t> base(d);
    std::vector<double> frac(d);
    for (std::size_t i = 0; i < d; ++i) {
      const double x = std::clamp(u[i], 0.0, 1.0) * resolution_;
      const auto k = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(x)), resolution_ - 1);
      base[i] = k;
      frac[i] = x - static_cast<double>(k);
    }
    double acc = 0.0;
    std::vector<std::int64_t> node(d);
    for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
      double w = 1.0;
      for (std::size_t i = 0; i < d; ++i) {
        const bool up = (corner >> i) & 1U;
        node[i] = base[i] + (up ? 1 : 0);
        w *= up ? frac[i] : 1.0 - frac[i];
      }
      if (w != 0.0) acc += w * node_value(node);
    }
    return std::clamp(acc, lo_, hi_);
  }

  HardKind kind_;
  std::uint64_t seed_;
  std::size_t input_dim_;
  double lo_, hi_;
  int resolution_ = 8;
  Fn fn_;
};

using HardFunctionPtr = std::shared_ptr<const HardFunction>;

inline nlohmann::json to_json(const HardFunction& g) {
  switch (g.kind()) {
    case HardKind::seeded_piecewise_linear:
      return {{"kind", to_string(g.kind())}, {"seed", g.seed()}, {"input_dim", g.input_dim()},
              {"lo", g.lo()}, {"hi", g.hi()}, {"resolution", g.resolution()}};
    case HardKind::invertible_address:
      return {{"kind", to_string(g.kind())}, {"input_dim", g.input_dim()}, {"lo", g.lo()}, {"hi", g.hi()}};
    case HardKind::custom: break;
  }
  throw Error("custom hard functions are not serializable");
}

inline HardFunctionPtr hard_function_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  const auto dim = j.at("input_dim").get<std::size_t>();
  const auto lo = j.at("lo").get<double>(), hi = j.at("hi").get<double>();
  if (kind == to_string(HardKind::seeded_piecewise_linear))
    return std::make_shared<const HardFunction>(
        HardFunction::seeded(j.at("seed").get<std::uint64_t>(), dim, lo, hi, j.at("resolution").get<int>()));
  if (kind == to_string(HardKind::invertible_address))
    return std::make_shared<const HardFunction>(HardFunction::invertible_address(dim, lo, hi));
  throw ParseError("unknown hard function kind \"" + kind + "\"");
}

// ---------------------------------------------------------------------------
// Shared hat-family geometry

/// Static hat centres q_i = (i-1) / (2(N-1)), i = 1..N (returned 0-based).
inline std::vector<double> static_points(std::size_t n_budget) {
  std::vector<double> q(n_budget);
  for (std::size_t i = 0; i < n_budget; ++i)
    q[i] = static_cast<double>(i) / (2.0 * static_cast<double>(n_budget - 1));
  return q;
}

inline double default_delta(std::size_t n_budget) { return 1.0 / (12.0 * static_cast<double>(n_budget)); }

inline void validate_hat_family(std::size_t n_budget, double delta) {
  require(n_budget >= 3, "N >= 3", "N = " + std::to_string(n_budget));
  require(delta > 0.0 && delta < 1.0 / (6.0 * static_cast<double>(n_budget)), "delta < 1/(6N)",
          "delta = " + format_real(delta) + ", N = " + std::to_string(n_budget));
}

inline double tau(double t) { return 2.0 * std::min(t, 1.0 - t); }

/// Componentwise tau(t) = 2 min{t, 1 - t}.
inline std::vector<double> fold_tau(std::span<const double> s) {
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    require(s[i] >= 0.0 && s[i] <= 1.0, "fold_tau entries in [0,1]",
            "entry " + std::to_string(i) + " = " + format_real(s[i]));
    out[i] = tau(s[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pointed-value family

struct ValueTask {
  std::size_t n_budget = 3;
  std::size_t weight_budget = 0;  // metadata; the stand-in g is not tied to it
  std::vector<double> s;          // (s_2, ..., s_{N-1})
  double q_star = 2.0 / 3.0;
  double delta = 0.0;
  HardFunctionPtr hard_fn;
  double hard_value = 0.0;  // g(s), cached at construction
};

inline ValueTask make_value_task(std::size_t n_budget, std::vector<double> s, double q_star, double delta,
                                 HardFunctionPtr hard_fn, std::size_t weight_budget = 0) {
  validate_hat_family(n_budget, delta);
  require(s.size() == n_budget - 2, "value task s has N-2 entries", "got " + std::to_string(s.size()));
  for (double v : s) require(v >= 0.0 && v <= 1.0, "s in [0,1]^{N-2}", format_real(v));
  require(q_star >= 2.0 / 3.0 && q_star <= 1.0, "q* in [2/3,1]", format_real(q_star));
  require(hard_fn != nullptr && hard_fn->input_dim() == n_budget - 2, "hard function input_dim = N-2", "");
  ValueTask t{n_budget, weight_budget, std::move(s), q_star, delta, std::move(hard_fn), 0.0};
  t.hard_value = (*t.hard_fn)(t.s);
  return t;
}

inline double eval_value_task(const ValueTask& t, double x) {
  const auto q = static_points(t.n_budget);
  double v = t.q_star * hat_reference({q[0], t.delta}, x);
  for (std::size_t i = 1; i + 1 < t.n_budget; ++i) v += t.s[i - 1] * hat_reference({q[i], t.delta}, x);
  v += t.hard_value * hat_reference({t.q_star, t.delta}, x);
  return v;
}

template <class Rng>
ValueTask random_value_task(std::size_t n_budget, double delta, HardFunctionPtr hard_fn, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0), star(2.0 / 3.0, 1.0);
  std::vector<double> s(n_budget - 2);
  for (auto& v : s) v = unit(rng);
  const double q_star = star(rng);
  return make_value_task(n_budget, std::move(s), q_star, delta, std::move(hard_fn));
}

// ---------------------------------------------------------------------------
// Address-spike family

struct AddressTask {
  std::size_t n_budget = 3;
  std::vector<double> s;  // (s_1, ..., s_{N-1})
  int beta = 0;
  double delta = 0.0;
  HardFunctionPtr address_fn;
  double q_star = 2.0 / 3.0;  // address_fn(fold_tau(s)), cached
};

inline double address_of(const HardFunction& g, std::span<const double> s) { return g(fold_tau(s)); }

inline AddressTask make_address_task(std::size_t n_budget, std::vector<double> s, int beta, double delta,
                                     HardFunctionPtr address_fn) {
  validate_hat_family(n_budget, delta);
  require(s.size() == n_budget - 1, "address task s has N-1 entries", "got " + std::to_string(s.size()));
  for (double v : s) require(v >= 0.0 && v <= 1.0, "s in [0,1]^{N-1}", format_real(v));
  require(beta == 0 || beta == 1, "beta in {0,1}", std::to_string(beta));
  require(address_fn != nullptr && address_fn->input_dim() == n_budget - 1, "address function input_dim = N-1", "");
  require(address_fn->lo() >= 2.0 / 3.0 && address_fn->hi() <= 1.0, "address codomain within [2/3,1]", "");
  AddressTask t{n_budget, std::move(s), beta, delta, std::move(address_fn), 0.0};
  t.q_star = address_of(*t.address_fn, t.s);
  return t;
}

inline double eval_address_task(const AddressTask& t, double x) {
  const auto q = static_points(t.n_budget);
  double v = 0.0;
  for (std::size_t i = 0; i + 1 < t.n_budget; ++i) v += t.s[i] * hat_reference({q[i], t.delta}, x);
  if (t.beta) v += hat_reference({t.q_star, t.delta}, x);
  return v;
}

/// Some s with address_fn(fold_tau(s)) = y (invertible-address mode only).
inline std::vector<double> invert_address(const HardFunction& g, double y) {
  require(g.kind() == HardKind::invertible_address, "invertible-address mode",
          std::string("got ") + to_string(g.kind()));
  require(y >= g.lo() && y <= g.hi(), "y in address codomain", format_real(y));
  std::vector<double> s(g.input_dim(), 0.0);
  s[0] = 0.5 * (y - g.lo()) / (g.hi() - g.lo());  // tau(s_1) = u_1 on [0, 1/2]
  return s;
}

template <class Rng>
AddressTask random_address_task(std::size_t n_budget, double delta, HardFunctionPtr address_fn, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> s(n_budget - 1);
  for (auto& v : s) v = unit(rng);
  return make_address_task(n_budget, std::move(s), coin(rng) ? 1 : 0, delta, std::move(address_fn));
}

// ---------------------------------------------------------------------------

using Task = std::variant<PathTask, ValueTask, AddressTask>;

inline const char* family_name(const Task& t) {
  static constexpr const char* names[] = {"path", "value", "address"};
  return names[t.index()];
}

inline std::size_t task_dim(const Task& t) {
  if (const auto* p = std::get_if<PathTask>(&t)) return p->dim();
  return 1;
}

inline double evaluate_task(const Task& t, std::span<const double> x) {
  if (const auto* p = std::get_if<PathTask>(&t)) return eval_path_task(*p, x);
  if (x.size() != 1) throw DimensionError("hat-family tasks are univariate");
  if (const auto* v = std::get_if<ValueTask>(&t)) return eval_value_task(*v, x[0]);
  return eval_address_task(std::get<AddressTask>(t), x[0]);
}

}  // namespace adaptlab
