#include "medsel/selector_params.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace medsel {
namespace {

std::uint64_t next_version() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

SelectorParams::Layout SelectorParams::layout_for(std::size_t d, std::size_t h) {
  Layout l{};
  std::size_t off = 0;
  l.proj_w = off;
  off += h * d;
  l.proj_b = off;
  off += h;
  for (Direction* dir : {&l.fwd, &l.bwd}) {
    dir->wx = off;
    off += 4 * h * h;
    dir->wh = off;
    off += 4 * h * h;
    dir->b = off;
    off += 4 * h;
  }
  l.head_w = off;
  off += 2 * h;
  l.head_b = off;
  off += 1;
  l.total = off;
  return l;
}

SelectorParams::SelectorParams(std::size_t input_dim, std::size_t hidden)
    : input_dim_(input_dim), hidden_(hidden), layout_(layout_for(input_dim, hidden)), version_(next_version()) {
  if (input_dim == 0 || hidden == 0) throw std::invalid_argument("SelectorParams: dimensions must be positive");
  values_.assign(layout_.total, 0.0);
}

SelectorParams SelectorParams::initialized(std::size_t input_dim, std::size_t hidden, SeededRng& rng) {
  SelectorParams p(input_dim, hidden);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (double& v : p.values_) v = (2.0 * rng.uniform() - 1.0) * bound;
  for (const Direction& dir : {p.layout_.fwd, p.layout_.bwd})
    for (std::size_t j = 0; j < hidden; ++j) p.values_[dir.b + hidden + j] = 1.0;
  p.version_ = next_version();
  return p;
}

std::span<double> SelectorParams::mutable_values() {
  version_ = next_version();
  return values_;
}

}  // namespace medsel
