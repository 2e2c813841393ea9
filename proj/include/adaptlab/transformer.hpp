#pragma once

// Multi-head softmax attention, a transformer built from attention layers
// with a final affine read-out, and the exact embedding of an MLP into such
// a transformer (zero query/key matrices, one head per layer).

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "adaptlab/errors.hpp"
#include "adaptlab/mlp.hpp"
#include "adaptlab/mlp_json.hpp"

namespace adaptlab {

struct AttentionHead {
  Matrix query;  // d_key x d_in
  Matrix key;    // d_key x d_in
  Matrix value;  // d_out x d_in
  double lambda = 1.0;

  std::size_t in_dim() const { return value.cols; }
  std::size_t out_dim() const { return value.rows; }
};

inline void validate(const AttentionHead& h) {
  if (h.query.rows != h.key.rows) throw DimensionError("query and key matrices need the same row count");
  if (h.query.cols != h.value.cols || h.key.cols != h.value.cols)
    throw DimensionError("query, key and value matrices need the same column count");
  if (h.value.rows == 0 || h.value.cols == 0) throw DimensionError("empty value matrix");
  require(h.lambda > 0.0 && std::isfinite(h.lambda), "lambda > 0", format_real(h.lambda));
}

struct TransformerLayer {
  std::vector<AttentionHead> heads;
  std::vector<double> bias;
};

/// Attention layers X_{j+1} = ReLU(concat_h Attn_h(X_j) + b_j) followed by an
/// affine read-out, which is itself a (non-activated) multi-head layer.
struct TransformerNetwork {
  std::vector<TransformerLayer> layers;
  TransformerLayer output;

  std::size_t depth() const { return layers.size() + 1; }
};

namespace transformer_detail {

inline std::size_t layer_out(const TransformerLayer& l) {
  std::size_t w = 0;
  for (const auto& h : l.heads) w += h.out_dim();
  return w;
}

inline void validate_layer(const TransformerLayer& l, std::size_t in, int index) {
  if (l.heads.empty()) throw DimensionError("layer needs at least one head", index);
  for (const auto& h : l.heads) {
    try {
      validate(h);
    } catch (const DimensionError& e) {
      throw DimensionError(e.what(), index);
    }
    if (h.in_dim() != in)
      throw DimensionError("head input width " + std::to_string(h.in_dim()) + " != layer width " + std::to_string(in),
                           index);
  }
  if (l.bias.size() != layer_out(l)) throw DimensionError("bias length != sum of head output widths", index);
}

}  // namespace transformer_detail

/// Checks every layer; returns the input width.
inline std::size_t validate(const TransformerNetwork& t) {
  const TransformerLayer& first = t.layers.empty() ? t.output : t.layers.front();
  if (first.heads.empty()) throw DimensionError("empty transformer");
  std::size_t width = first.heads.front().in_dim();
  const std::size_t in = width;
  for (std::size_t j = 0; j < t.layers.size(); ++j) {
    transformer_detail::validate_layer(t.layers[j], width, static_cast<int>(j));
    width = transformer_detail::layer_out(t.layers[j]);
  }
  transformer_detail::validate_layer(t.output, width, static_cast<int>(t.layers.size()));
  return in;
}

/// Row n of the result is sum_m w(n,m) V X_m with
/// w(n, .) = softmax_m(lambda <Q X_n, K X_m> / sqrt(d_key)).
inline Matrix attention(const AttentionHead& h, const Matrix& x) {
  validate(h);
  if (x.cols != h.in_dim())
    throw DimensionError("attention input has " + std::to_string(x.cols) + " columns, head expects " +
                         std::to_string(h.in_dim()));
  const std::size_t n = x.rows, dk = h.query.rows;
  auto project = [&](const Matrix& m) {  // rows: m X_r
    Matrix out(n, m.rows);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t i = 0; i < m.rows; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) acc += m(i, c) * x(r, c);
        out(r, i) = acc;
      }
    return out;
  };
  const Matrix q = project(h.query), k = project(h.key), v = project(h.value);
  const double scale = dk ? h.lambda / std::sqrt(static_cast<double>(dk)) : 0.0;
  Matrix out(n, h.out_dim());
  std::vector<double> score(n);
  for (std::size_t r = 0; r < n; ++r) {
    double top = -INFINITY;
    for (std::size_t m = 0; m < n; ++m) {
      double dot = 0.0;
      for (std::size_t i = 0; i < dk; ++i) dot += q(r, i) * k(m, i);
      score[m] = scale * dot;
      top = std::max(top, score[m]);
    }
    double total = 0.0;
    for (auto& s : score) total += (s = std::exp(s - top));
    for (std::size_t m = 0; m < n; ++m) {
      const double w = score[m] / total;
      for (std::size_t i = 0; i < h.out_dim(); ++i) out(r, i) += w * v(m, i);
    }
  }
  return out;
}

namespace transformer_detail {

inline Matrix apply_layer(const TransformerLayer& l, const Matrix& x, bool relu) {
  Matrix out(x.rows, l.bias.size());
  std::size_t offset = 0;
  for (const auto& h : l.heads) {
    const Matrix z = attention(h, x);
    for (std::size_t r = 0; r < x.rows; ++r)
      for (std::size_t i = 0; i < z.cols; ++i) out(r, offset + i) = z(r, i);
    offset += z.cols;
  }
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t i = 0; i < out.cols; ++i) {
      const double v = out(r, i) + l.bias[i];
      out(r, i) = relu ? std::max(v, 0.0) : v;
    }
  return out;
}

}  // namespace transformer_detail

inline Matrix eval_transformer(const TransformerNetwork& t, const Matrix& x) {
  const std::size_t in = validate(t);
  if (x.cols != in)
    throw DimensionError("transformer input has " + std::to_string(x.cols) + " columns, expected " + std::to_string(in));
  if (x.rows == 0) throw DimensionError("transformer input has no rows");
  Matrix cur = x;
  for (const auto& l : t.layers) cur = transformer_detail::apply_layer(l, cur, true);
  return transformer_detail::apply_layer(t.output, cur, false);
}

/// Single input vector as a one-row matrix.
inline std::vector<double> eval_transformer(const TransformerNetwork& t, std::span<const double> x) {
  Matrix row(1, x.size());
  std::copy(x.begin(), x.end(), row.data.begin());
  return eval_transformer(t, row).data;
}

/// One zero-Q/K head per layer with V = A_j. With a single row the softmax
/// weight is 1, so each layer reproduces ReLU(A_j x + b_j) exactly.
inline TransformerNetwork mlp_to_transformer(const MlpNetwork& net, double lambda = 1.0) {
  require(lambda > 0.0 && std::isfinite(lambda), "lambda > 0", format_real(lambda));
  auto convert = [lambda](const AffineLayer& l) {
    const std::size_t in = l.in_dim();
    return TransformerLayer{{AttentionHead{Matrix(1, in), Matrix(1, in), l.weights, lambda}}, l.bias};
  };
  TransformerNetwork t;
  for (std::size_t j = 0; j + 1 < net.depth(); ++j) t.layers.push_back(convert(net.layers()[j]));
  t.output = convert(net.layers().back());
  return t;
}

// ---------------------------------------------------------------------------
// JSON: {"layers":[{"heads":[{"query":..,"key":..,"value":..,"lambda":..}],
//        "bias":[..]}, ...]} where the last entry is the affine read-out.

inline std::string transformer_to_json(const TransformerNetwork& t) {
  std::string out = "{\"layers\":[";
  auto layer = [&](const TransformerLayer& l) {
    out += "{\"heads\":[";
    for (std::size_t h = 0; h < l.heads.size(); ++h) {
      if (h) out += ',';
      out += "{\"query\":";
      json_detail::append_matrix(out, l.heads[h].query);
      out += ",\"key\":";
      json_detail::append_matrix(out, l.heads[h].key);
      out += ",\"value\":";
      json_detail::append_matrix(out, l.heads[h].value);
      out += ",\"lambda\":" + format_real(l.heads[h].lambda) + "}";
    }
    out += "],\"bias\":";
    json_detail::append_vector(out, l.bias);
    out += '}';
  };
  for (const auto& l : t.layers) {
    layer(l);
    out += ',';
  }
  layer(t.output);
  out += "]}";
  return out;
}

inline TransformerNetwork transformer_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("layers") || !doc["layers"].is_array())
    throw ParseError("missing \"layers\" array");
  const auto& layers = doc["layers"];
  if (layers.empty()) throw ParseError("empty layer list");
  std::vector<TransformerLayer> parsed;
  for (std::size_t j = 0; j < layers.size(); ++j) {
    const int idx = static_cast<int>(j);
    const auto& l = layers[j];
    if (!l.is_object() || !l.contains("heads") || !l.contains("bias") || !l["heads"].is_array())
      throw ParseError("layer needs \"heads\" and \"bias\"", idx);
    TransformerLayer layer{{}, json_detail::read_vector(l["bias"], "bias", idx)};
    for (const auto& h : l["heads"]) {
      if (!h.is_object() || !h.contains("lambda") || !h["lambda"].is_number())
        throw ParseError("head needs \"query\", \"key\", \"value\" and numeric \"lambda\"", idx);
      layer.heads.push_back({json_detail::read_matrix(h.value("query", nlohmann::json()), "query", idx),
                             json_detail::read_matrix(h.value("key", nlohmann::json()), "key", idx),
                             json_detail::read_matrix(h.value("value", nlohmann::json()), "value", idx),
                             h["lambda"].get<double>()});
    }
    parsed.push_back(std::move(layer));
  }
  TransformerNetwork t;
  t.output = std::move(parsed.back());
  parsed.pop_back();
  t.layers = std::move(parsed);
  try {
    validate(t);
  } catch (const DimensionError& e) {
    throw ParseError(e.what(), e.layer());
  } catch (const PreconditionError& e) {
    throw ParseError(e.what());
  }
  return t;
}

inline TransformerNetwork transformer_from_json(const std::string& text) {
  return transformer_from_json(json_detail::parse_document(text));
}

}  // namespace adaptlab
