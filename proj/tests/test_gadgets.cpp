#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "adaptlab/gadgets.hpp"

using namespace adaptlab;

namespace {

double hat_oracle(double a, double delta, double x) { return std::max(0.0, 1.0 - std::abs(x - a) / delta); }

// Sup-distance form of the bump: (1 - max_i (|x_i - c_i| - eta l)_+ / ((1/2 - eta) l))_+.
double bump_oracle(const std::vector<double>& c, double l, double eta, const std::vector<double>& x) {
  double m = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) m = std::max(m, std::max(0.0, std::abs(x[i] - c[i]) - eta * l));
  return std::max(0.0, 1.0 - m / ((0.5 - eta) * l));
}

double scalar(const MlpNetwork& n, double x) { return evaluate_scalar(n, x); }

}  // namespace

TEST(Abs, Examples) {
  const auto g = abs_gadget();
  EXPECT_EQ(scalar(g, 0.0), 0.0);
  EXPECT_EQ(scalar(g, -3.5), 3.5);
  EXPECT_EQ(scalar(g, std::ldexp(1.0, -30)), std::ldexp(1.0, -30));
}

TEST(Max, Examples) {
  EXPECT_EQ(evaluate_scalar(max_gadget(3), std::vector<double>{1.0, -2.0, 3.0}), 3.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int k = 0; k < 100; ++k) {
    const double x = u(rng);
    EXPECT_EQ(evaluate_scalar(max_gadget(3), std::vector<double>{x, x, x}), x);
  }
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> x(5);
    for (auto& v : x) v = u(rng);
    EXPECT_NEAR(evaluate_scalar(max_gadget(5), x), *std::max_element(x.begin(), x.end()), 1e-12);
  }
}

TEST(Max, BalancedTreeDepth) {
  for (std::size_t d = 1; d <= 9; ++d) {
    const auto expect = d == 1 ? 1u : static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(d)))) + 1;
    EXPECT_EQ(max_gadget(d).depth(), expect) << d;
  }
  EXPECT_THROW(max_gadget(0), PreconditionError);
}

TEST(Hat, Examples) {
  const auto h = hat_gadget({0.3, 0.05});
  EXPECT_EQ(scalar(h, 0.3), 1.0);
  EXPECT_NEAR(scalar(h, 0.25), 0.0, 1e-15);
  EXPECT_NEAR(scalar(h, 0.35), 0.0, 1e-15);
  EXPECT_NEAR(scalar(h, 0.325), 0.5, 1e-15);
  EXPECT_EQ(scalar(h, 0.9), 0.0);
}

TEST(Hat, MatchesFormulaIncludingKinks) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  for (auto [a, d] : {std::pair{0.4, 0.1}, std::pair{0.75, 1.0 / 60.0}, std::pair{0.0, 0.2}}) {
    const auto h = hat_gadget({a, d});
    for (double x : {a - d, a, a + d}) EXPECT_NEAR(scalar(h, x), hat_oracle(a, d, x), 1e-12);
    for (int k = 0; k < 10000; ++k) {
      const double x = u(rng);
      EXPECT_NEAR(scalar(h, x), hat_oracle(a, d, x), 1e-9);
    }
  }
}

TEST(Hat, WeightCountIndependentOfCentreAndWidth) {
  // A zero centre drops the two centre biases, so centres are drawn from (0, 1].
  const std::size_t base = count_weights(hat_gadget({0.5, 0.1}));
  EXPECT_EQ(base, 8u);
  for (double a : {0.01, 0.25, 0.9, 1.0})
    for (double d : {0.001, 0.05, 0.3}) EXPECT_EQ(count_weights(hat_gadget({a, d})), base);
}

TEST(Hat, RejectsNonPositiveWidth) { EXPECT_THROW(hat_gadget({0.5, 0.0}), PreconditionError); }

TEST(Bump, Examples) {
  const BumpSpec q{{0.25, 0.25}, 0.5, 0.25};
  EXPECT_EQ(evaluate_scalar(bump_gadget(q), q.center), 1.0);
  EXPECT_EQ(evaluate_scalar(bump_gadget(q), std::vector<double>{0.25, 0.25}), 1.0);
  // Boundary of Q.
  for (const std::vector<double>& x : {std::vector<double>{0.0, 0.1}, {0.5, 0.3}, {0.2, 0.5}, {0.0, 0.0}})
    EXPECT_NEAR(evaluate_scalar(bump_gadget(q), x), 0.0, 1e-15);
}

TEST(Bump, MatchesFormula) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& spec : {BumpSpec{{0.625}, 0.25, 0.25}, BumpSpec{{0.375, 0.625}, 0.25, 0.1},
                           BumpSpec{{0.25, 0.75, 0.75}, 0.5, 0.4}}) {
    const auto g = bump_gadget(spec);
    for (int k = 0; k < 5000; ++k) {
      std::vector<double> x(spec.center.size());
      for (auto& v : x) v = u(rng);
      const double want = bump_oracle(spec.center, spec.side_length, spec.eta, x);
      EXPECT_NEAR(evaluate_scalar(g, x), want, 1e-9);
      EXPECT_NEAR(bump_reference(spec, x), want, 1e-12);
    }
  }
}

TEST(Bump, PlateauAndSupport) {
  const BumpSpec s{{0.375, 0.125}, 0.25, 0.25};
  const auto g = bump_gadget(s);
  EXPECT_EQ(evaluate_scalar(g, std::vector<double>{0.375 + 0.0625, 0.125 - 0.0625}), 1.0);
  EXPECT_EQ(evaluate_scalar(g, std::vector<double>{0.9, 0.9}), 0.0);
}

TEST(Bump, WeightCountIndependentOfCentreAndLevel) {
  for (std::size_t d = 1; d <= 3; ++d) {
    const std::size_t base = count_weights(bump_gadget({std::vector<double>(d, 0.5), 1.0, 0.25}));
    for (int level = 1; level <= 5; ++level) {
      const double l = std::ldexp(1.0, -level);
      for (double c : {l / 2, 0.5 + l / 2, 1.0 - l / 2})
        EXPECT_EQ(count_weights(bump_gadget({std::vector<double>(d, c), l, 0.25})), base) << d << " " << level;
    }
  }
}

TEST(Bump, RejectsInvalidSpecs) {
  EXPECT_THROW(bump_gadget({{0.5}, 1.0, 0.5}), PreconditionError);
  EXPECT_THROW(bump_gadget({{0.5}, 0.3, 0.25}), PreconditionError);
  EXPECT_THROW(bump_gadget({{0.9}, 0.5, 0.25}), PreconditionError);
  EXPECT_THROW(bump_gadget({{}, 0.5, 0.25}), PreconditionError);
}

TEST(Selector, Examples) {
  const auto chi = selector_gadget();
  EXPECT_EQ(scalar(chi, 0.0), 0.0);
  EXPECT_EQ(scalar(chi, 1.0), 1.0);
  EXPECT_EQ(scalar(chi, 2.7), 1.0);
  EXPECT_EQ(scalar(chi, -0.4), 0.0);
  EXPECT_EQ(scalar(chi, 0.3), 0.3);
}

TEST(Mult, Examples) {
  EXPECT_NEAR(evaluate_scalar(mult_eps(0.01), std::vector<double>{0.5, 0.5}), 0.25, 0.01);
  EXPECT_NEAR(evaluate_scalar(mult_eps(0.01), std::vector<double>{0.0, 0.7}), 0.0, 0.01);
  EXPECT_THROW(mult_eps(0.0), PreconditionError);
  EXPECT_THROW(mult_eps(1.0), PreconditionError);
}

TEST(Mult, GridErrorSymmetryAndRange) {
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const auto m = mult_eps(eps);
    const int s = mult_eps_steps(eps);
    double worst = 0.0, asym = 0.0;
    for (int i = 0; i <= 200; ++i)
      for (int j = 0; j <= 200; ++j) {
        const double a = i / 200.0, b = j / 200.0;
        const double ab = evaluate_scalar(m, std::vector<double>{a, b});
        const double ba = evaluate_scalar(m, std::vector<double>{b, a});
        ASSERT_GE(ab, 0.0);
        ASSERT_LE(ab, 1.0);
        worst = std::max(worst, std::abs(ab - a * b));
        asym = std::max(asym, std::abs(ab - ba));
      }
    EXPECT_LE(worst, eps);
    EXPECT_LE(worst, 3.0 * std::ldexp(1.0, -2 * s - 2));
    EXPECT_LE(asym, 2 * eps);
  }
}

TEST(Mult, WeightCountLogarithmic) {
  // Line through the measured counts at eps = 1e-1 (156) and 1e-4 (396),
  // rounded up: c1 = 240 / log2(1e3) = 24.08..., c0 = 156 - c1 log2(10) = 76.0...
  const double c0 = 76.0, c1 = 24.09;
  EXPECT_EQ(count_weights(mult_eps(1e-1)), 156u);
  EXPECT_EQ(count_weights(mult_eps(1e-4)), 396u);
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4})
    EXPECT_LE(static_cast<double>(count_weights(mult_eps(eps))), c0 + c1 * std::log2(1.0 / eps)) << eps;
}

TEST(BumpAt, TranslatesCentre) {
  const auto g = bump_at_gadget(2, 0.25, 0.25);
  const BumpSpec s{{0.625, 0.375}, 0.25, 0.25};
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const std::vector<double> x{u(rng), u(rng)};
    EXPECT_NEAR(evaluate_scalar(g, std::vector<double>{0.625, 0.375, x[0], x[1]}), bump_reference(s, x), 1e-12);
  }
}
