#pragma once

// Closed-form ReLU constructions: absolute value, maxima, hats, cubical
// bumps, the clamp/selector chi, and the sawtooth approximate multiplier.
// Every gadget except mult_eps is exact in real arithmetic.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "adaptlab/errors.hpp"
#include "adaptlab/format.hpp"
#include "adaptlab/mlp.hpp"

namespace adaptlab {

/// Tent of half-width `half_width` centred at `center`.
struct HatSpec {
  double center = 0.0;
  double half_width = 0.0;
};

/// Bump theta_Q for a cube Q with the given centre and side length 2^-n:
/// equal to 1 on the concentric sub-cube of half-side eta*side, decaying
/// linearly (in the sup-distance) to 0 on the boundary of Q.
struct BumpSpec {
  std::vector<double> center;
  double side_length = 1.0;
  double eta = 0.25;
};

inline void validate(const BumpSpec& s) {
  require(s.eta > 0.0 && s.eta < 0.5, "0 < eta < 1/2", "eta = " + format_real(s.eta));
  require(!s.center.empty(), "bump dimension >= 1", "empty center");
  int exp = 0;
  const double mant = std::frexp(s.side_length, &exp);
  require(s.side_length > 0.0 && s.side_length <= 1.0 && mant == 0.5, "side_length = 2^-n",
          "side_length = " + format_real(s.side_length));
  for (double c : s.center)
    require(c - s.side_length / 2 >= 0.0 && c + s.side_length / 2 <= 1.0, "cube inside [0,1]^d",
            "center coordinate " + format_real(c));
}

// ---------------------------------------------------------------------------

/// |u| = ReLU(u) + ReLU(-u).
inline MlpNetwork abs_gadget() {
  return MlpNetwork({{Matrix::from_rows({{1.0}, {-1.0}}), {0.0, 0.0}},
                     {Matrix::from_rows({{1.0, 1.0}}), {0.0}}});
}

/// chi(t) = ReLU(t) - ReLU(t - 1): identity on [0,1], clamps outside.
inline MlpNetwork selector_gadget() {
  return MlpNetwork({{Matrix::from_rows({{1.0}, {1.0}}), {0.0, -1.0}},
                     {Matrix::from_rows({{1.0, -1.0}}), {0.0}}});
}

namespace gadget_detail {

// One tournament round: width w -> ceil(w/2). Pairs use
// max{a,b} = ReLU(a-b) + ReLU(b) - ReLU(-b); an odd leftover passes through.
inline MlpNetwork max_round(std::size_t w) {
  const std::size_t pairs = w / 2;
  const bool odd = w % 2 == 1;
  const std::size_t hidden = 3 * pairs + (odd ? 2 : 0);
  const std::size_t out = pairs + (odd ? 1 : 0);
  Matrix a(hidden, w), b(out, hidden);
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::size_t h = 3 * p, i = 2 * p;
    a(h, i) = 1.0;
    a(h, i + 1) = -1.0;
    a(h + 1, i + 1) = 1.0;
    a(h + 2, i + 1) = -1.0;
    b(p, h) = 1.0;
    b(p, h + 1) = 1.0;
    b(p, h + 2) = -1.0;
  }
  if (odd) {
    const std::size_t h = 3 * pairs;
    a(h, w - 1) = 1.0;
    a(h + 1, w - 1) = -1.0;
    b(pairs, h) = 1.0;
    b(pairs, h + 1) = -1.0;
  }
  return MlpNetwork({{a, std::vector<double>(hidden, 0.0)}, {b, std::vector<double>(out, 0.0)}});
}

// x -> x^2 on [0,1] via x - sum_{s=1}^{steps} g_s(x) / 4^s, g_s the s-fold
// tent map. Hidden layer k holds ReLU(g_{k-1}), ReLU(g_{k-1} - 1/2) and the
// running approximation (nonnegative on [0,1]). Error <= 2^{-2 steps - 2}.
inline MlpNetwork square_gadget(int steps) {
  std::vector<AffineLayer> layers;
  layers.push_back({Matrix::from_rows({{1.0}, {1.0}, {1.0}}), {0.0, -0.5, 0.0}});
  double scale = 0.25;  // 4^{-k}
  for (int k = 1; k < steps; ++k) {
    // g_k = 2P - 4R ; acc_k = A - g_k * 4^{-k}
    layers.push_back({Matrix::from_rows({{2.0, -4.0, 0.0},
                                         {2.0, -4.0, 0.0},
                                         {-2.0 * scale, 4.0 * scale, 1.0}}),
                      {0.0, -0.5, 0.0}});
    scale *= 0.25;
  }
  layers.push_back({Matrix::from_rows({{-2.0 * scale, 4.0 * scale, 1.0}}), {0.0}});
  return MlpNetwork(std::move(layers));
}

}  // namespace gadget_detail

/// Exact maximum of d reals via a balanced tournament of pairwise maxima.
inline MlpNetwork max_gadget(std::size_t d) {
  require(d >= 1, "max_gadget d >= 1", "d = 0");
  MlpNetwork net = identity_network(d);
  for (std::size_t w = d; w > 1; w = (w + 1) / 2) net = compose(gadget_detail::max_round(w), net);
  return net;
}

/// h_a(x) = (1 - |x - a| / delta)_+.
inline MlpNetwork hat_gadget(const HatSpec& spec) {
  require(std::isfinite(spec.half_width) && spec.half_width > 0.0, "hat half_width > 0",
          "delta = " + format_real(spec.half_width));
  const double k = -1.0 / spec.half_width;
  return MlpNetwork({{Matrix::from_rows({{1.0}, {-1.0}}), {-spec.center, spec.center}},
                     {Matrix::from_rows({{k, k}}), {1.0}},
                     {Matrix::from_rows({{1.0}}), {0.0}}});
}

inline double hat_reference(const HatSpec& spec, double x) {
  return std::max(0.0, 1.0 - std::abs(x - spec.center) / spec.half_width);
}

/// Bump as a function of the displacement z = x - c(Q). The construction
/// does not depend on the centre, so one network serves every cube of a level.
inline MlpNetwork centered_bump_gadget(std::size_t d, double side_length, double eta) {
  require(eta > 0.0 && eta < 0.5, "0 < eta < 1/2", "eta = " + format_real(eta));
  require(d >= 1, "bump dimension >= 1", "d = 0");
  require(side_length > 0.0, "side_length > 0", format_real(side_length));
  Matrix split(2 * d, d);
  for (std::size_t i = 0; i < d; ++i) {
    split(2 * i, i) = 1.0;
    split(2 * i + 1, i) = -1.0;
  }
  Matrix fold(d, 2 * d);
  for (std::size_t i = 0; i < d; ++i) fold(i, 2 * i) = fold(i, 2 * i + 1) = 1.0;
  // (|z_i| - eta*l)_+ for each axis.
  MlpNetwork excess({{split, std::vector<double>(2 * d, 0.0)},
                     {fold, std::vector<double>(d, -eta * side_length)},
                     {Matrix::identity(d), std::vector<double>(d, 0.0)}});
  const double width = (0.5 - eta) * side_length;
  MlpNetwork ramp({{Matrix::from_rows({{-1.0 / width}}), {1.0}}, {Matrix::from_rows({{1.0}}), {0.0}}});
  return compose(ramp, compose(max_gadget(d), excess));
}

/// Theta(c, x): inputs are the concatenation (c, x), 2d coordinates.
inline MlpNetwork bump_at_gadget(std::size_t d, double side_length, double eta) {
  Matrix diff(d, 2 * d);
  for (std::size_t i = 0; i < d; ++i) {
    diff(i, i) = -1.0;
    diff(i, d + i) = 1.0;
  }
  return compose(centered_bump_gadget(d, side_length, eta), affine_network(diff, std::vector<double>(d, 0.0)));
}

inline MlpNetwork bump_gadget(const BumpSpec& spec) {
  validate(spec);
  const std::size_t d = spec.center.size();
  std::vector<double> shift(d);
  for (std::size_t i = 0; i < d; ++i) shift[i] = -spec.center[i];
  return compose(centered_bump_gadget(d, spec.side_length, spec.eta), affine_network(Matrix::identity(d), shift));
}

/// Direct evaluation of the bump through the sup-distance to the central
/// sub-cube (clamp-based projection).
inline double bump_reference(std::span<const double> center, double side_length, double eta,
                             std::span<const double> x) {
  if (x.size() != center.size())
    throw DimensionError("bump_reference: point has dimension " + std::to_string(x.size()) +
                         ", cube has " + std::to_string(center.size()));
  const double half = eta * side_length;
  double dist = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double proj = std::clamp(x[i], center[i] - half, center[i] + half);
    dist = std::max(dist, std::abs(x[i] - proj));
  }
  return std::max(0.0, 1.0 - dist / ((0.5 - eta) * side_length));
}

inline double bump_reference(const BumpSpec& spec, std::span<const double> x) {
  return bump_reference(spec.center, spec.side_length, spec.eta, x);
}

/// Number of tent-map iterations used by mult_eps.
inline int mult_eps_steps(double eps) { return static_cast<int>(std::ceil(std::log2(1.0 / eps))) + 2; }

/// Approximate product on [0,1]^2 with |Mult(a,b) - ab| <= eps, built from
/// ab = 2((a+b)/2)^2 - a^2/2 - b^2/2 and clamped to [0,1] through chi.
inline MlpNetwork mult_eps(double eps) {
  require(eps > 0.0 && eps < 1.0, "0 < eps < 1", "eps = " + format_real(eps));
  const MlpNetwork sq = gadget_detail::square_gadget(mult_eps_steps(eps));
  const MlpNetwork spread = affine_network(Matrix::from_rows({{0.5, 0.5}, {1.0, 0.0}, {0.0, 1.0}}), {0.0, 0.0, 0.0});
  const MlpNetwork combine = affine_network(Matrix::from_rows({{2.0, -0.5, -0.5}}), {0.0});
  return compose_all({selector_gadget(), combine, parallel({sq, sq, sq}, InputMode::disjoint), spread});
}

}  // namespace adaptlab
