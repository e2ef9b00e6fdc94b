#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "medsel/linalg.hpp"
#include "medsel/rng.hpp"

namespace medsel {

// Chosen pool positions with the log-probability of how they were drawn.
struct SelectionOutcome {
  std::vector<std::size_t> indices;
  std::vector<double> per_draw_logp;
  double total_logp = 0.0;
  // Version of the selector parameters that produced the draw; 0 when the
  // selection does not depend on trainable parameters.
  std::uint64_t params_version = 0;
};

// a.b / (|a||b|), clamped to [-1, 1]. Zero-norm inputs give 0.
double cosine(std::span<const double> a, std::span<const double> b);

// Max-subtracted softmax.
Vec64 softmax(std::span<const double> logits);

double log_sum_exp(std::span<const double> values);

// Draws k distinct indices by sequential renormalisation: each draw is taken
// from the current distribution, its log-probability recorded, and its mass
// removed before the next draw.
SelectionOutcome sample_without_replacement(std::span<const double> probs, std::size_t k,
                                            SeededRng& rng);

enum class FiniteDiffScheme {
  central,     // (f(x+h) - f(x-h)) / 2h
  five_point,  // fourth-order central stencil
};

using ScalarFunction = std::function<double(std::span<const double>)>;

Vec64 finite_diff_grad(const ScalarFunction& f, std::span<const double> at, double eps = 1e-5,
                       FiniteDiffScheme scheme = FiniteDiffScheme::central);

// Same differences taken in extended precision, for objectives that can be
// evaluated in long double. Double-precision differences carry roughly
// 1e-12 absolute roundoff, which swamps coordinates with tiny gradients.
using ExtendedScalarFunction = std::function<long double(std::span<const long double>)>;
Vec64 finite_diff_grad(const ExtendedScalarFunction& f, std::span<const double> at, double eps = 1e-5,
                       FiniteDiffScheme scheme = FiniteDiffScheme::central);

}  // namespace medsel
