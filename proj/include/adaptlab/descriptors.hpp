#pragma once

// JSON descriptors for tasks and learners. A descriptor holds
// enough to rebuild the object bit-for-bit, so witness pairs and reports can
// be re-verified outside the process that produced them.

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "adaptlab/errors.hpp"
#include "adaptlab/learners.hpp"
#include "adaptlab/mlp_json.hpp"
#include "adaptlab/tasks.hpp"

namespace adaptlab {

using nlohmann::json;

namespace descriptor_detail {

template <class T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("descriptor is missing \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("descriptor field \"") + key + "\": " + e.what());
  }
}

}  // namespace descriptor_detail

inline json to_json(const Task& task) {
  if (const auto* p = std::get_if<PathTask>(&task)) {
    json cubes = json::array();
    for (const auto& c : p->path.cubes()) cubes.push_back({{"level", c.level}, {"index", c.index}});
    return {{"family", "path"}, {"d", p->dim()}, {"eta", p->eta}, {"cubes", cubes}};
  }
  if (const auto* v = std::get_if<ValueTask>(&task))
    return {{"family", "value"}, {"N", v->n_budget}, {"delta", v->delta}, {"q_star", v->q_star},
            {"s", v->s}, {"hard_fn", to_json(*v->hard_fn)}};
  const auto& a = std::get<AddressTask>(task);
  return {{"family", "address"}, {"N", a.n_budget}, {"delta", a.delta}, {"beta", a.beta},
          {"s", a.s}, {"address_fn", to_json(*a.address_fn)}};
}

inline Task task_from_json(const json& j) {
  using descriptor_detail::field;
  const auto family = field<std::string>(j, "family");
  if (family == "path") {
    std::vector<CubeIndex> cubes;
    for (const auto& c : field<json>(j, "cubes"))
      cubes.push_back({field<int>(c, "level"), field<std::vector<std::int64_t>>(c, "index")});
    return make_path_task(CubicalPath(std::move(cubes)), field<double>(j, "eta"));
  }
  if (family == "value")
    return make_value_task(field<std::size_t>(j, "N"), field<std::vector<double>>(j, "s"), field<double>(j, "q_star"),
                           field<double>(j, "delta"), hard_function_from_json(field<json>(j, "hard_fn")));
  if (family == "address")
    return make_address_task(field<std::size_t>(j, "N"), field<std::vector<double>>(j, "s"), field<int>(j, "beta"),
                             field<double>(j, "delta"), hard_function_from_json(field<json>(j, "address_fn")));
  throw ParseError("unknown task family \"" + family + "\"");
}

inline json to_json(const Context& ctx) {
  json out = json::array();
  for (const auto& o : ctx) out.push_back({{"query", o.query}, {"response", o.response}});
  return out;
}

// ---------------------------------------------------------------------------
// Learners

namespace descriptor_detail {

inline json network_json(const MlpNetwork& net) { return json::parse(network_to_json(net)); }

inline json budget_json(const Budget& b) {
  json j = {{"N", b.queries}};
  j["m"] = b.weights == std::numeric_limits<std::size_t>::max() ? json(nullptr) : json(b.weights);
  return j;
}

inline Budget budget_from_json(const json& j) {
  Budget b{field<std::size_t>(j, "N")};
  if (j.contains("m") && !j["m"].is_null()) b.weights = j["m"].get<std::size_t>();
  return b;
}

}  // namespace descriptor_detail

inline json to_json(const InContextLearner& l) {
  json j = {{"type", "in-context"},
            {"kind", l.kind},
            {"dim", l.dim},
            {"queries", l.queries},
            {"params", l.params},
            {"budget", descriptor_detail::budget_json(l.budget)},
            {"realizable", l.realizable()}};
  if (l.predictor_net) j["networks"] = {{"predictor", descriptor_detail::network_json(*l.predictor_net)}};
  return j;
}

inline json to_json(const AgenticLearner& l) {
  json j = {{"type", "agentic"},
            {"kind", l.kind},
            {"dim", l.dim},
            {"initial_query", l.initial_query},
            {"n_queries", l.n_queries()},
            {"params", l.params},
            {"budget", descriptor_detail::budget_json(l.budget)},
            {"realizable", l.realizable()}};
  if (l.realization) {
    json qs = json::array();
    for (const auto& q : l.realization->query_nets) qs.push_back(descriptor_detail::network_json(q));
    j["networks"] = {{"query_maps", qs}, {"predictor", descriptor_detail::network_json(l.realization->predictor_net)}};
  }
  return j;
}

/// Rebuilds a learner from its descriptor. Realizable learners are rebuilt
/// from their embedded networks; general learners from kind + params.
inline InContextLearner in_context_learner_from_json(const json& j) {
  using descriptor_detail::field;
  const auto kind = field<std::string>(j, "kind");
  const auto dim = field<std::size_t>(j, "dim");
  auto queries = field<std::vector<Point>>(j, "queries");
  const Budget budget = descriptor_detail::budget_from_json(field<json>(j, "budget"));
  if (j.contains("networks")) {
    auto l = make_realizable_in_context(kind, dim, std::move(queries),
                                        network_from_json(j["networks"].at("predictor")), budget);
    l.params = field<json>(j, "params");
    return l;
  }
  if (kind == "zero-ic") return make_zero_ic_learner(dim, std::move(queries));
  if (kind == "grid-ic") return make_grid_ic_learner(dim, std::move(queries));
  throw ParseError("in-context learner kind \"" + kind + "\" cannot be replayed from a descriptor");
}

inline AgenticLearner agentic_learner_from_json(const json& j) {
  using descriptor_detail::field;
  const auto kind = field<std::string>(j, "kind");
  const auto dim = field<std::size_t>(j, "dim");
  const auto params = field<json>(j, "params");
  const Budget budget = descriptor_detail::budget_from_json(field<json>(j, "budget"));
  if (j.contains("networks")) {
    AgentRealization nets{{}, network_from_json(j["networks"].at("predictor"))};
    for (const auto& q : j["networks"].at("query_maps")) nets.query_nets.push_back(network_from_json(q));
    auto l = make_realizable_agent(kind, dim, field<Point>(j, "initial_query"), std::move(nets), budget);
    l.params = params;
    return l;
  }
  if (kind == "path-agent")
    return make_path_agent(dim, field<std::size_t>(params, "L"), field<double>(params, "eta"), false, budget);
  if (kind == "value-agent")
    return make_value_agent(field<std::size_t>(params, "N"), field<double>(params, "eps"), false,
                            field<double>(params, "delta"), budget);
  if (kind == "address-agent" && params.contains("address_fn"))
    return make_address_agent(field<std::size_t>(params, "N"),
                              {hard_function_from_json(params["address_fn"]), std::nullopt},
                              field<double>(params, "delta"), budget);
  throw ParseError("agentic learner kind \"" + kind + "\" cannot be replayed from a descriptor");
}

}  // namespace adaptlab
