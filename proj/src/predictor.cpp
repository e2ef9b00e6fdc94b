#include "medsel/predictor.hpp"

#include <stdexcept>
#include <string>

#include "medsel/numerics.hpp"

namespace medsel {

SupportSet make_support(const Mat64& pool, std::span<const std::size_t> indices,
                        std::span<const std::uint8_t> labels) {
  if (indices.size() != labels.size()) throw std::invalid_argument("make_support: indices/labels length mismatch");
  SupportSet s;
  for (std::size_t i : indices) s.embeddings.append_row(pool.row(i));
  s.labels.assign(labels.begin(), labels.end());
  return s;
}

Prototypes fit(const SupportSet& support) {
  const std::size_t k = support.embeddings.rows();
  if (k == 0) throw std::invalid_argument("fit: empty support set");
  if (support.labels.size() != k) throw std::invalid_argument("fit: labels do not match support size");
  const std::size_t d = support.embeddings.cols();
  std::vector<KahanSum> pos(d), neg(d);
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t r = 0; r < k; ++r) {
    auto& acc = support.labels[r] ? pos : neg;
    (support.labels[r] ? n_pos : n_neg) += 1;
    const auto row = support.embeddings.row(r);
    for (std::size_t j = 0; j < d; ++j) acc[j].add(row[j]);
  }
  Prototypes p;
  p.positive.assign(d, 0.0);
  p.negative.assign(d, 0.0);
  p.has_positive = n_pos > 0;
  p.has_negative = n_neg > 0;
  for (std::size_t j = 0; j < d; ++j) {
    if (n_pos) p.positive[j] = pos[j].value() / static_cast<double>(n_pos);
    if (n_neg) p.negative[j] = neg[j].value() / static_cast<double>(n_neg);
  }
  return p;
}

double score(const Prototypes& protos, std::span<const double> x) {
  if (x.size() != protos.positive.size())
    throw std::invalid_argument("score: dimension " + std::to_string(x.size()) + " does not match prototypes (" +
                                std::to_string(protos.positive.size()) + ")");
  const double pos = protos.has_positive ? cosine(x, protos.positive) : 0.0;
  const double neg = protos.has_negative ? cosine(x, protos.negative) : 0.0;
  return pos - neg;
}

ScoredQuery score_query(const Prototypes& protos, const Mat64& query, std::span<const std::uint8_t> labels) {
  if (labels.size() != query.rows()) throw std::invalid_argument("score_query: labels do not match query size");
  ScoredQuery sq;
  sq.scores.reserve(query.rows());
  for (std::size_t r = 0; r < query.rows(); ++r) sq.scores.push_back(score(protos, query.row(r)));
  sq.labels.assign(labels.begin(), labels.end());
  return sq;
}

}  // namespace medsel
