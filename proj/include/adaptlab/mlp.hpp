#pragma once

// Fully connected ReLU networks: representation, evaluation and the two
// structural combinators (sequential composition and parallel stacking) the
// gadget constructions are assembled from.
//
// A network with layers (A_0,b_0), ..., (A_{L-1},b_{L-1}) computes
//   X_{j+1} = ReLU(A_j X_j + b_j)   for j < L-1,
//   f(X)    = A_{L-1} X_{L-1} + b_{L-1}.
// Networks are immutable once built; evaluation is pure.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adaptlab/errors.hpp"

namespace adaptlab {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rs) {
    Matrix m(rs.size(), rs.size() ? rs.begin()->size() : 0);
    std::size_t i = 0;
    for (const auto& row : rs) {
      if (row.size() != m.cols) throw DimensionError("ragged matrix literal");
      std::size_t j = 0;
      for (double v : row) m(i, j++) = v;
      ++i;
    }
    return m;
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw DimensionError("matmul shape mismatch");
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

/// One affine map x -> weights * x + bias.
struct AffineLayer {
  Matrix weights;  // d_out x d_in
  std::vector<double> bias;

  std::size_t in_dim() const { return weights.cols; }
  std::size_t out_dim() const { return weights.rows; }

  friend bool operator==(const AffineLayer&, const AffineLayer&) = default;
};

class MlpNetwork {
 public:
  /// Validates shapes, finiteness and chaining. An empty layer list is
  /// rejected: every network has at least its output affine map.
  explicit MlpNetwork(std::vector<AffineLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw DimensionError("network must have at least one layer");
    for (std::size_t j = 0; j < layers_.size(); ++j) {
      const auto& l = layers_[j];
      const int idx = static_cast<int>(j);
      if (l.weights.data.size() != l.weights.rows * l.weights.cols)
        throw DimensionError("weight storage does not match its shape", idx);
      if (l.weights.rows != l.bias.size())
        throw DimensionError("weight rows (" + std::to_string(l.weights.rows) +
                                 ") != bias length (" + std::to_string(l.bias.size()) + ")",
                             idx);
      if (l.weights.cols == 0 || l.weights.rows == 0)
        throw DimensionError("layer has an empty dimension", idx);
      for (double v : l.weights.data)
        if (!std::isfinite(v)) throw DimensionError("non-finite weight", idx);
      for (double v : l.bias)
        if (!std::isfinite(v)) throw DimensionError("non-finite bias", idx);
      if (j > 0 && layers_[j - 1].out_dim() != l.in_dim())
        throw DimensionError("input dim " + std::to_string(l.in_dim()) +
                                 " does not chain with previous output dim " +
                                 std::to_string(layers_[j - 1].out_dim()),
                             idx);
    }
    build_sparse();
  }

  const std::vector<AffineLayer>& layers() const { return layers_; }
  std::size_t depth() const { return layers_.size(); }
  std::size_t in_dim() const { return layers_.front().in_dim(); }
  std::size_t out_dim() const { return layers_.back().out_dim(); }

  /// Forward pass into `out` (resized to out_dim()). Zero weights are skipped;
  /// the summation order is row-wise, ascending column, then bias.
  /// Forward pass into a thread-local buffer, valid until the next call on
  /// this thread.
  const std::vector<double>& forward(std::span<const double> x) const {
    if (x.size() != in_dim())
      throw DimensionError("input has dimension " + std::to_string(x.size()) + ", expected " +
                               std::to_string(in_dim()),
                           0);
    thread_local std::vector<double> a, b;
    a.assign(x.begin(), x.end());
    for (std::size_t j = 0; j < sparse_.size(); ++j) {
      const auto& s = sparse_[j];
      const bool last = j + 1 == sparse_.size();
      b.resize(s.bias.size());
      for (std::size_t r = 0; r < s.bias.size(); ++r) {
        double acc = 0.0;
        for (std::size_t p = s.row_ptr[r]; p < s.row_ptr[r + 1]; ++p) acc += s.val[p] * a[s.col[p]];
        acc += s.bias[r];
        b[r] = last ? acc : (acc > 0.0 ? acc : 0.0);
      }
      std::swap(a, b);
    }
    return a;
  }

  void evaluate_into(std::span<const double> x, std::vector<double>& out) const {
    const auto& y = forward(x);
    out.assign(y.begin(), y.end());
  }

  friend bool operator==(const MlpNetwork& x, const MlpNetwork& y) { return x.layers_ == y.layers_; }

 private:
  struct SparseLayer {
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> col;
    std::vector<double> val;
    std::vector<double> bias;
  };

  void build_sparse() {
    sparse_.clear();
    sparse_.reserve(layers_.size());
    for (const auto& l : layers_) {
      SparseLayer s;
      s.row_ptr.push_back(0);
      for (std::size_t r = 0; r < l.weights.rows; ++r) {
        for (std::size_t c = 0; c < l.weights.cols; ++c) {
          const double w = l.weights(r, c);
          if (w != 0.0) {
            s.col.push_back(c);
            s.val.push_back(w);
          }
        }
        s.row_ptr.push_back(s.col.size());
      }
      s.bias = l.bias;
      sparse_.push_back(std::move(s));
    }
  }

  std::vector<AffineLayer> layers_;
  std::vector<SparseLayer> sparse_;
};

inline std::vector<double> evaluate(const MlpNetwork& net, std::span<const double> x) {
  std::vector<double> out;
  net.evaluate_into(x, out);
  return out;
}

inline std::vector<double> evaluate(const MlpNetwork& net, std::initializer_list<double> x) {
  return evaluate(net, std::span<const double>(x.begin(), x.size()));
}

/// Convenience for scalar-output networks.
inline double evaluate_scalar(const MlpNetwork& net, std::span<const double> x) {
  const auto& out = net.forward(x);
  if (out.size() != 1) throw DimensionError("network output is not scalar");
  return out[0];
}

inline double evaluate_scalar(const MlpNetwork& net, double x) {
  return evaluate_scalar(net, std::span<const double>(&x, 1));
}

/// Number of nonzero entries across all weight matrices and bias vectors.
inline std::size_t count_weights(const MlpNetwork& net) {
  std::size_t n = 0;
  for (const auto& l : net.layers()) {
    n += static_cast<std::size_t>(std::count_if(l.weights.data.begin(), l.weights.data.end(),
                                                [](double v) { return v != 0.0; }));
    n += static_cast<std::size_t>(
        std::count_if(l.bias.begin(), l.bias.end(), [](double v) { return v != 0.0; }));
  }
  return n;
}

// ---------------------------------------------------------------------------
// Elementary networks

inline MlpNetwork affine_network(Matrix weights, std::vector<double> bias) {
  return MlpNetwork({AffineLayer{std::move(weights), std::move(bias)}});
}

inline MlpNetwork identity_network(std::size_t dim) {
  return affine_network(Matrix::identity(dim), std::vector<double>(dim, 0.0));
}

/// Ignores its input and returns `value`.
inline MlpNetwork constant_network(std::size_t in_dim, std::vector<double> value) {
  const std::size_t out = value.size();
  return affine_network(Matrix(out, in_dim), std::move(value));
}

/// Exact identity of the given depth. Depth 1 is the plain affine identity;
/// deeper versions route x through ReLU(x) - ReLU(-x) so negative values
/// survive every activation.
inline MlpNetwork passthrough_network(std::size_t dim, std::size_t depth) {
  if (depth == 0) throw DimensionError("passthrough depth must be >= 1");
  if (depth == 1) return identity_network(dim);
  std::vector<AffineLayer> layers;
  Matrix split(2 * dim, dim);
  for (std::size_t i = 0; i < dim; ++i) {
    split(i, i) = 1.0;
    split(dim + i, i) = -1.0;
  }
  layers.push_back({split, std::vector<double>(2 * dim, 0.0)});
  for (std::size_t k = 2; k < depth; ++k)
    layers.push_back({Matrix::identity(2 * dim), std::vector<double>(2 * dim, 0.0)});
  Matrix merge(dim, 2 * dim);
  for (std::size_t i = 0; i < dim; ++i) {
    merge(i, i) = 1.0;
    merge(i, dim + i) = -1.0;
  }
  layers.push_back({merge, std::vector<double>(dim, 0.0)});
  return MlpNetwork(std::move(layers));
}

// ---------------------------------------------------------------------------
// Combinators

/// Upper bound on count_weights(compose(outer, inner)). Only the merged seam
/// layer can gain entries: at most rows(outer first) * (cols(inner last) + 1).
inline std::size_t compose_weight_bound(const MlpNetwork& outer, const MlpNetwork& inner) {
  const auto& seam_out = outer.layers().front();
  const auto& seam_in = inner.layers().back();
  return count_weights(outer) + count_weights(inner) + seam_out.out_dim() * (seam_in.in_dim() + 1);
}

/// outer o inner. The last affine map of `inner` is multiplied into the first
/// affine map of `outer`, so depth(result) = depth(outer) + depth(inner) - 1.
inline MlpNetwork compose(const MlpNetwork& outer, const MlpNetwork& inner) {
  if (inner.out_dim() != outer.in_dim())
    throw DimensionError("compose: inner output dim " + std::to_string(inner.out_dim()) +
                             " != outer input dim " + std::to_string(outer.in_dim()),
                         static_cast<int>(inner.depth()) - 1);
  std::vector<AffineLayer> layers(inner.layers().begin(), inner.layers().end() - 1);
  const auto& a = outer.layers().front();
  const auto& b = inner.layers().back();
  AffineLayer merged{matmul(a.weights, b.weights), std::vector<double>(a.out_dim(), 0.0)};
  for (std::size_t i = 0; i < a.out_dim(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.in_dim(); ++k) acc += a.weights(i, k) * b.bias[k];
    merged.bias[i] = acc + a.bias[i];
  }
  layers.push_back(std::move(merged));
  layers.insert(layers.end(), outer.layers().begin() + 1, outer.layers().end());
  return MlpNetwork(std::move(layers));
}

/// Left-to-right chain: compose_all({f, g, h}) = f o g o h.
inline MlpNetwork compose_all(const std::vector<MlpNetwork>& chain) {
  if (chain.empty()) throw DimensionError("compose_all: empty chain");
  MlpNetwork acc = chain.back();
  for (std::size_t i = chain.size() - 1; i-- > 0;) acc = compose(chain[i], acc);
  return acc;
}

inline MlpNetwork pad_to_depth(const MlpNetwork& net, std::size_t depth) {
  if (depth < net.depth()) throw DimensionError("pad_to_depth: target shallower than network");
  if (depth == net.depth()) return net;
  return compose(passthrough_network(net.out_dim(), depth - net.depth() + 1), net);
}

/// Which coordinates of the stacked input a component network reads.
struct InputSlice {
  std::size_t offset = 0;
  std::size_t length = 0;
};

/// Stacks networks side by side: component k reads `slices[k]` of an input of
/// dimension `total_in` and the outputs are concatenated in order. Shallower
/// components are padded with exact passthrough layers.
inline MlpNetwork parallel(const std::vector<MlpNetwork>& nets, const std::vector<InputSlice>& slices,
                           std::size_t total_in) {
  if (nets.empty()) throw DimensionError("parallel: empty network sequence");
  if (slices.size() != nets.size())
    throw DimensionError("parallel: " + std::to_string(slices.size()) + " slices for " +
                         std::to_string(nets.size()) + " networks");
  for (std::size_t k = 0; k < nets.size(); ++k) {
    if (slices[k].length != nets[k].in_dim() || slices[k].offset + slices[k].length > total_in)
      throw DimensionError("parallel: slice " + std::to_string(k) + " [" +
                           std::to_string(slices[k].offset) + ", +" +
                           std::to_string(slices[k].length) + ") inconsistent with input dim " +
                           std::to_string(nets[k].in_dim()) + " / total " +
                           std::to_string(total_in));
  }
  std::size_t depth = 0;
  for (const auto& n : nets) depth = std::max(depth, n.depth());
  std::vector<MlpNetwork> padded;
  padded.reserve(nets.size());
  for (const auto& n : nets) padded.push_back(pad_to_depth(n, depth));

  std::vector<AffineLayer> layers;
  for (std::size_t j = 0; j < depth; ++j) {
    std::size_t rows = 0, cols = 0;
    for (const auto& n : padded) {
      rows += n.layers()[j].out_dim();
      cols += n.layers()[j].in_dim();
    }
    if (j == 0) cols = total_in;
    AffineLayer layer{Matrix(rows, cols), std::vector<double>(rows, 0.0)};
    std::size_t r0 = 0, c0 = 0;
    for (std::size_t k = 0; k < padded.size(); ++k) {
      const auto& src = padded[k].layers()[j];
      const std::size_t cbase = j == 0 ? slices[k].offset : c0;
      for (std::size_t r = 0; r < src.out_dim(); ++r) {
        for (std::size_t c = 0; c < src.in_dim(); ++c) layer.weights(r0 + r, cbase + c) = src.weights(r, c);
        layer.bias[r0 + r] = src.bias[r];
      }
      r0 += src.out_dim();
      c0 += src.in_dim();
    }
    layers.push_back(std::move(layer));
  }
  return MlpNetwork(std::move(layers));
}

enum class InputMode { shared, disjoint };

/// `shared`: every component reads the whole input (all must agree on its
/// dimension). `disjoint`: component k reads the k-th consecutive block.
inline MlpNetwork parallel(const std::vector<MlpNetwork>& nets, InputMode mode) {
  if (nets.empty()) throw DimensionError("parallel: empty network sequence");
  std::vector<InputSlice> slices;
  std::size_t total = 0;
  if (mode == InputMode::shared) {
    total = nets.front().in_dim();
    for (const auto& n : nets) {
      if (n.in_dim() != total) throw DimensionError("parallel(shared): input dimensions differ");
      slices.push_back({0, total});
    }
  } else {
    for (const auto& n : nets) {
      slices.push_back({total, n.in_dim()});
      total += n.in_dim();
    }
  }
  return parallel(nets, slices, total);
}

/// Fixes the first `prefix.size()` inputs to the given values and folds every
/// neuron whose value no longer depends on the remaining inputs into the next
/// layer's bias. Output coordinates are preserved. Rounding may differ from
/// the unfolded network (constant contributions are pre-summed).
inline MlpNetwork partial_evaluate(const MlpNetwork& net, std::span<const double> prefix) {
  if (prefix.size() >= net.in_dim())
    throw DimensionError("partial_evaluate: prefix must leave at least one free input");
  const std::size_t free_in = net.in_dim() - prefix.size();
  // Per current-layer input: nullopt = free, value = folded constant.
  std::vector<std::optional<double>> inputs(net.in_dim());
  for (std::size_t i = 0; i < prefix.size(); ++i) inputs[i] = prefix[i];

  std::vector<AffineLayer> out;
  for (std::size_t j = 0; j < net.depth(); ++j) {
    const auto& l = net.layers()[j];
    const bool last = j + 1 == net.depth();
    std::vector<std::size_t> free_cols;
    for (std::size_t c = 0; c < inputs.size(); ++c)
      if (!inputs[c]) free_cols.push_back(c);

    std::vector<std::optional<double>> next(l.out_dim());
    std::vector<std::size_t> kept;
    std::vector<double> folded_bias(l.out_dim());
    for (std::size_t r = 0; r < l.out_dim(); ++r) {
      double b = 0.0;
      bool depends = false;
      for (std::size_t c = 0; c < inputs.size(); ++c) {
        const double w = l.weights(r, c);
        if (w == 0.0) continue;
        if (inputs[c])
          b += w * *inputs[c];
        else
          depends = true;
      }
      b += l.bias[r];
      folded_bias[r] = b;
      if (depends || last)
        kept.push_back(r);
      else
        next[r] = b > 0.0 ? b : 0.0;
    }
    if (kept.empty()) {
      // Nothing downstream depends on the free inputs any more.
      std::vector<double> full(prefix.begin(), prefix.end());
      full.resize(net.in_dim(), 0.0);
      return constant_network(free_in, evaluate(net, full));
    }
    AffineLayer nl{Matrix(kept.size(), free_cols.size()), std::vector<double>(kept.size())};
    for (std::size_t r = 0; r < kept.size(); ++r) {
      for (std::size_t c = 0; c < free_cols.size(); ++c) nl.weights(r, c) = l.weights(kept[r], free_cols[c]);
      nl.bias[r] = folded_bias[kept[r]];
    }
    out.push_back(std::move(nl));
    inputs = std::move(next);  // kept neurons are exactly the nullopt entries
  }
  return MlpNetwork(std::move(out));
}

}  // namespace adaptlab
