#pragma once

#include <cstdint>
#include <span>

#include "medsel/linalg.hpp"
#include "medsel/selector_params.hpp"

namespace medsel {

// Activations of one direction, indexed by sequence position.
struct DirectionTape {
  Mat64 gates;      // N x 4H, post-nonlinearity (i, f, g, o)
  Mat64 cell;       // N x H
  Mat64 cell_tanh;  // N x H
  Mat64 hidden;     // N x H
};

// Everything the backward pass needs from a forward pass.
struct ForwardTape {
  std::uint64_t params_version = 0;
  Mat64 projected;  // N x H
  DirectionTape fwd, bwd;
  Vec64 logits;
};

// One logit per row of `inputs` (N x D). The forward direction reads rows
// 0..N-1, the backward direction N-1..0, and each position is scored from
// its concatenated hidden states.
Vec64 bilstm_forward(const SelectorParams& params, const Mat64& inputs, ForwardTape* tape = nullptr);

// Accumulates d(sum_t dlogits[t] * logit_t)/d(params) into `grad`.
// Throws std::logic_error if `tape` was recorded under other weights.
void bilstm_backward(const SelectorParams& params, const Mat64& inputs, const ForwardTape& tape,
                     std::span<const double> dlogits, std::span<double> grad);

}  // namespace medsel
