#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "medsel/linalg.hpp"

namespace medsel {

// Labelled examples the predictor is fitted on.
struct SupportSet {
  Mat64 embeddings;
  std::vector<std::uint8_t> labels;
};

// Class means of the support set. A class absent from the support has its
// flag cleared and a zero vector, so its cosine term contributes 0.
struct Prototypes {
  Vec64 positive;
  Vec64 negative;
  bool has_positive = false;
  bool has_negative = false;
};

struct ScoredQuery {
  Vec64 scores;
  std::vector<std::uint8_t> labels;
};

SupportSet make_support(const Mat64& pool, std::span<const std::size_t> indices,
                        std::span<const std::uint8_t> labels);

Prototypes fit(const SupportSet& support);

// cos(x, p) - cos(x, n).
double score(const Prototypes& protos, std::span<const double> x);

ScoredQuery score_query(const Prototypes& protos, const Mat64& query, std::span<const std::uint8_t> labels);

}  // namespace medsel
