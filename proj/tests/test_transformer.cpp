#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "adaptlab/harness.hpp"
#include "adaptlab/transformer.hpp"

using namespace adaptlab;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(r, c);
  for (auto& v : m.data) v = u(rng);
  return m;
}

}  // namespace

TEST(Attention, ZeroQueryKeyAveragesRows) {
  std::mt19937_64 rng(1);
  const Matrix v = random_matrix(2, 3, rng);
  const AttentionHead h{Matrix(1, 3), Matrix(1, 3), v, 2.0};
  const Matrix x = random_matrix(4, 3, rng);
  const Matrix out = attention(h, x);
  for (std::size_t i = 0; i < 2; ++i) {
    double mean = 0.0;
    for (std::size_t m = 0; m < 4; ++m)
      for (std::size_t c = 0; c < 3; ++c) mean += v(i, c) * x(m, c) / 4.0;
    for (std::size_t r = 0; r < 4; ++r) EXPECT_NEAR(out(r, i), mean, 1e-14);
  }
}

TEST(Attention, SingleRowIsValueProjection) {
  std::mt19937_64 rng(2);
  const AttentionHead h{random_matrix(2, 3, rng), random_matrix(2, 3, rng), random_matrix(2, 3, rng), 5.0};
  const Matrix x = random_matrix(1, 3, rng);
  const Matrix out = attention(h, x);
  for (std::size_t i = 0; i < 2; ++i) {
    double want = 0.0;
    for (std::size_t c = 0; c < 3; ++c) want += h.value(i, c) * x(0, c);
    EXPECT_NEAR(out(0, i), want, 1e-15);
  }
}

TEST(Attention, HandComputedTwoRows) {
  // Q = K = V = 1, lambda = 1, rows x = 1 and x = 2.
  // Row 1 scores (1, 2): weights (1, e)/(1 + e), output (1 + 2e)/(1 + e).
  // Row 2 scores (2, 4): weights (1, e^2)/(1 + e^2), output (1 + 2e^2)/(1 + e^2).
  const AttentionHead h{Matrix::from_rows({{1.0}}), Matrix::from_rows({{1.0}}), Matrix::from_rows({{1.0}}), 1.0};
  const Matrix out = attention(h, Matrix::from_rows({{1.0}, {2.0}}));
  EXPECT_NEAR(out(0, 0), 1.7310585786300049, 1e-15);
  EXPECT_NEAR(out(1, 0), 1.8807970779778823, 1e-15);
  const double e = std::exp(1.0);
  EXPECT_NEAR(out(0, 0), (1 + 2 * e) / (1 + e), 1e-15);
  EXPECT_NEAR(out(1, 0), (1 + 2 * e * e) / (1 + e * e), 1e-15);
}

TEST(Attention, SoftmaxRowsSumToOne) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const std::size_t n = 1 + static_cast<std::size_t>(k % 7), d = 1 + static_cast<std::size_t>(k % 4);
    // With V = 0 except a bias-like column of ones, the output is the row sum of the weights.
    Matrix x = random_matrix(n, d + 1, rng, 3.0);
    for (std::size_t r = 0; r < n; ++r) x(r, d) = 1.0;
    Matrix v(1, d + 1);
    v(0, d) = 1.0;
    const AttentionHead h{random_matrix(3, d + 1, rng, 4.0), random_matrix(3, d + 1, rng, 4.0), v, 10.0};
    const Matrix out = attention(h, x);
    for (std::size_t r = 0; r < n; ++r) EXPECT_NEAR(out(r, 0), 1.0, 1e-12);
  }
}

TEST(Attention, ShapeErrors) {
  const AttentionHead h{Matrix(1, 2), Matrix(2, 2), Matrix(1, 2), 1.0};
  EXPECT_THROW(attention(h, Matrix(1, 2)), DimensionError);
  const AttentionHead g{Matrix(1, 2), Matrix(1, 2), Matrix(1, 2), 1.0};
  EXPECT_THROW(attention(g, Matrix(1, 3)), DimensionError);
  const AttentionHead bad{Matrix(1, 2), Matrix(1, 2), Matrix(1, 2), 0.0};
  EXPECT_THROW(attention(bad, Matrix(1, 2)), PreconditionError);
}

TEST(Transformer, EmptyNetworkRejected) {
  TransformerNetwork t;
  EXPECT_THROW(eval_transformer(t, Matrix(1, 1)), DimensionError);
  EXPECT_THROW(transformer_from_json(std::string(R"({"layers":[]})")), ParseError);
}

TEST(Transformer, IdentityConversion) {
  std::mt19937_64 rng(4);
  const auto t = mlp_to_transformer(identity_network(3), 1.0);
  for (int k = 0; k < 100; ++k) {
    const auto x = random_matrix(1, 3, rng, 10.0);
    const auto y = eval_transformer(t, std::span<const double>(x.data));
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(y[i], x.data[i], 1e-12);
  }
}

TEST(Transformer, HatConversion) {
  const auto net = hat_gadget({0.4, 0.1});
  const auto t = mlp_to_transformer(net, 1.0);
  double worst = 0.0;
  for (int k = 0; k <= 1000; ++k) {
    const double x = k / 1000.0;
    worst = std::max(worst, std::abs(eval_transformer(t, std::span<const double>(&x, 1))[0] - evaluate_scalar(net, x)));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Transformer, CatalogConversionExactAndLambdaFree) {
  for (const auto& g : gadget_catalog()) {
    const auto inputs = gadget_inputs(g, 1000, 5);
    std::vector<std::vector<double>> outputs;
    for (double lambda : {0.1, 1.0, 10.0}) {
      const auto t = mlp_to_transformer(g.net, lambda);
      EXPECT_EQ(t.depth(), g.net.depth()) << g.name;
      for (const auto& l : t.layers) EXPECT_EQ(l.heads.size(), 1u);
      EXPECT_EQ(t.output.heads.size(), 1u);
      std::vector<double> out;
      for (const auto& x : inputs) {
        const double y = eval_transformer(t, std::span<const double>(x))[0];
        EXPECT_LE(std::abs(y - evaluate_scalar(g.net, x)), 1e-12) << g.name;
        out.push_back(y);
      }
      outputs.push_back(std::move(out));
    }
    EXPECT_EQ(outputs[0], outputs[1]) << g.name;
    EXPECT_EQ(outputs[1], outputs[2]) << g.name;
  }
}

TEST(Transformer, JsonRoundTrip) {
  const auto net = bump_gadget({{0.375, 0.625}, 0.25, 0.25});
  const auto t = mlp_to_transformer(net, 0.5);
  const auto text = transformer_to_json(t);
  const auto back = transformer_from_json(text);
  EXPECT_EQ(transformer_to_json(back), text);
  const std::vector<double> x{0.4, 0.6};
  EXPECT_EQ(eval_transformer(back, std::span<const double>(x)), eval_transformer(t, std::span<const double>(x)));
  EXPECT_THROW(transformer_from_json(std::string(R"({"layers":[{"heads":[],"bias":[]}]})")), ParseError);
  EXPECT_THROW(transformer_from_json(std::string("not json")), ParseError);
}

TEST(Transformer, RejectsBadLambda) { EXPECT_THROW(mlp_to_transformer(abs_gadget(), -1.0), PreconditionError); }
