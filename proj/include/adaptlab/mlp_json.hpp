#pragma once

// JSON format for networks:
//   {"layers":[{"weights":[[...row...],...],"bias":[...]}, ...]}
// Dimensions are implied by the array shapes. Reals are written with 17
// significant digits so a round trip reproduces every parameter bit-exactly.

#include <string>
#include <vector>

#include "json.hpp"

#include "adaptlab/errors.hpp"
#include "adaptlab/format.hpp"
#include "adaptlab/mlp.hpp"

namespace adaptlab {

namespace json_detail {

inline void append_vector(std::string& out, const std::vector<double>& v) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_real(v[i]);
  }
  out += ']';
}

inline void append_matrix(std::string& out, const Matrix& m) {
  out += '[';
  for (std::size_t r = 0; r < m.rows; ++r) {
    if (r) out += ',';
    out += '[';
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (c) out += ',';
      out += format_real(m(r, c));
    }
    out += ']';
  }
  out += ']';
}

inline std::vector<double> read_vector(const nlohmann::json& j, const char* what, int layer) {
  if (!j.is_array()) throw ParseError(std::string(what) + " must be an array", layer);
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_number()) throw ParseError(std::string(what) + " entries must be numbers", layer);
    v.push_back(e.get<double>());
  }
  return v;
}

inline Matrix read_matrix(const nlohmann::json& j, const char* what, int layer) {
  if (!j.is_array() || j.empty()) throw ParseError(std::string(what) + " must be a nonempty array of rows", layer);
  Matrix m;
  m.rows = j.size();
  for (std::size_t r = 0; r < j.size(); ++r) {
    auto row = read_vector(j[r], what, layer);
    if (r == 0) m.cols = row.size();
    if (row.size() != m.cols || m.cols == 0) throw ParseError(std::string(what) + " rows are ragged or empty", layer);
    m.data.insert(m.data.end(), row.begin(), row.end());
  }
  return m;
}

inline nlohmann::json parse_document(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what());
  }
}

}  // namespace json_detail

inline std::string network_to_json(const MlpNetwork& net) {
  std::string out = "{\"layers\":[";
  for (std::size_t j = 0; j < net.depth(); ++j) {
    const auto& l = net.layers()[j];
    if (j) out += ',';
    out += "{\"weights\":";
    json_detail::append_matrix(out, l.weights);
    out += ",\"bias\":";
    json_detail::append_vector(out, l.bias);
    out += '}';
  }
  out += "]}";
  return out;
}

inline MlpNetwork network_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("layers")) throw ParseError("missing \"layers\"");
  const auto& layers = doc["layers"];
  if (!layers.is_array()) throw ParseError("\"layers\" must be an array");
  if (layers.empty()) throw ParseError("empty layer list");
  std::vector<AffineLayer> out;
  for (std::size_t j = 0; j < layers.size(); ++j) {
    const int idx = static_cast<int>(j);
    const auto& l = layers[j];
    if (!l.is_object() || !l.contains("weights") || !l.contains("bias"))
      throw ParseError("layer needs \"weights\" and \"bias\"", idx);
    AffineLayer layer{json_detail::read_matrix(l["weights"], "weights", idx),
                      json_detail::read_vector(l["bias"], "bias", idx)};
    if (layer.bias.size() != layer.weights.rows) throw ParseError("bias length != weight rows", idx);
    if (j > 0 && out.back().out_dim() != layer.in_dim())
      throw ParseError("input dim does not chain with previous layer", idx);
    out.push_back(std::move(layer));
  }
  try {
    return MlpNetwork(std::move(out));
  } catch (const DimensionError& e) {
    throw ParseError(e.what(), e.layer());
  }
}

inline MlpNetwork network_from_json(const std::string& text) {
  return network_from_json(json_detail::parse_document(text));
}

}  // namespace adaptlab
