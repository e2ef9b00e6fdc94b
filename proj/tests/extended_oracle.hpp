#pragma once

// A long double re-implementation of the selector's forward pass and its
// sequential log-probability, written directly from the layout documented
// in selector_params.hpp. Used as the objective for extended-precision
// finite differences.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "medsel/linalg.hpp"
#include "medsel/selector_params.hpp"

namespace testing {

using Real = long double;

inline std::vector<Real> extended_logits(std::span<const Real> w, std::size_t d, std::size_t h,
                                         const medsel::Mat64& x) {
  const auto L = medsel::SelectorParams::layout_for(d, h);
  const std::size_t n = x.rows();
  std::vector<std::vector<Real>> proj(n, std::vector<Real>(h));
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t r = 0; r < h; ++r) {
      Real s = w[L.proj_b + r];
      for (std::size_t c = 0; c < d; ++c) s += w[L.proj_w + r * d + c] * static_cast<Real>(x(t, c));
      proj[t][r] = s;
    }
  auto sig = [](Real v) { return 1 / (1 + std::exp(-v)); };
  auto run = [&](const medsel::SelectorParams::Direction& dir, bool reverse) {
    std::vector<std::vector<Real>> hs(n, std::vector<Real>(h));
    std::vector<Real> hp(h, 0), cp(h, 0), z(4 * h);
    for (std::size_t step = 0; step < n; ++step) {
      const std::size_t t = reverse ? n - 1 - step : step;
      for (std::size_t r = 0; r < 4 * h; ++r) {
        Real s = w[dir.b + r];
        for (std::size_t c = 0; c < h; ++c) s += w[dir.wx + r * h + c] * proj[t][c] + w[dir.wh + r * h + c] * hp[c];
        z[r] = s;
      }
      for (std::size_t j = 0; j < h; ++j) {
        const Real i = sig(z[j]), f = sig(z[h + j]), g = std::tanh(z[2 * h + j]), o = sig(z[3 * h + j]);
        cp[j] = f * cp[j] + i * g;
        hp[j] = o * std::tanh(cp[j]);
      }
      hs[t] = hp;
    }
    return hs;
  };
  const auto hf = run(L.fwd, false);
  const auto hb = run(L.bwd, true);
  std::vector<Real> logits(n);
  for (std::size_t t = 0; t < n; ++t) {
    Real s = w[L.head_b];
    for (std::size_t j = 0; j < h; ++j) s += w[L.head_w + j] * hf[t][j] + w[L.head_w + h + j] * hb[t][j];
    logits[t] = s;
  }
  return logits;
}

inline Real extended_sequence_logp(std::vector<Real> logits, std::span<const std::size_t> picks) {
  Real total = 0;
  std::vector<bool> removed(logits.size(), false);
  for (std::size_t a : picks) {
    Real mx = -INFINITY;
    for (std::size_t i = 0; i < logits.size(); ++i)
      if (!removed[i]) mx = std::max(mx, logits[i]);
    Real z = 0;
    for (std::size_t i = 0; i < logits.size(); ++i)
      if (!removed[i]) z += std::exp(logits[i] - mx);
    total += logits[a] - mx - std::log(z);
    removed[a] = true;
  }
  return total;
}

}  // namespace testing
