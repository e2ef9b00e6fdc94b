#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "medsel/rng.hpp"

namespace medsel {

// Trainable weights of the bidirectional LSTM selector, held in one flat
// buffer so the optimiser and gradient checks can treat them as a vector.
//
// Block order (also the checkpoint order):
//   proj_w  [H x D]     input projection
//   proj_b  [H]
//   fwd.wx  [4H x H]    gates i, f, g, o stacked by rows
//   fwd.wh  [4H x H]
//   fwd.b   [4H]
//   bwd.wx, bwd.wh, bwd.b
//   head_w  [2H]        over [h_fwd ; h_bwd]
//   head_b  [1]
class SelectorParams {
 public:
  struct Direction {
    std::size_t wx, wh, b;
  };
  struct Layout {
    std::size_t proj_w, proj_b;
    Direction fwd, bwd;
    std::size_t head_w, head_b;
    std::size_t total;
  };

  SelectorParams(std::size_t input_dim, std::size_t hidden);

  // Uniform(-1/sqrt(H), 1/sqrt(H)) weights with forget-gate biases at 1.
  static SelectorParams initialized(std::size_t input_dim, std::size_t hidden, SeededRng& rng);
  static SelectorParams zeros(std::size_t input_dim, std::size_t hidden) { return {input_dim, hidden}; }

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden() const { return hidden_; }
  std::size_t size() const { return values_.size(); }
  const Layout& layout() const { return layout_; }
  static Layout layout_for(std::size_t input_dim, std::size_t hidden);

  std::span<const double> values() const { return values_; }
  // Any mutable access assigns a fresh version, invalidating outcomes and
  // tapes produced under the previous weights.
  std::span<double> mutable_values();
  std::uint64_t version() const { return version_; }

  const double* block(std::size_t offset) const { return values_.data() + offset; }

  friend bool operator==(const SelectorParams& a, const SelectorParams& b) {
    return a.input_dim_ == b.input_dim_ && a.hidden_ == b.hidden_ && a.values_ == b.values_;
  }

 private:
  std::size_t input_dim_;
  std::size_t hidden_;
  Layout layout_;
  std::vector<double> values_;
  std::uint64_t version_;
};

// Little-endian "SELW1" checkpoint.
void save_checkpoint(const SelectorParams& params, const std::filesystem::path& path);
SelectorParams load_checkpoint(const std::filesystem::path& path);

}  // namespace medsel
