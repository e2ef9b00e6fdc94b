#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "medsel/linalg.hpp"
#include "medsel/predictor.hpp"

namespace medsel {

// Area under the ROC curve in its Mann-Whitney form: concordant pairs plus
// half the tied pairs, over P*N. Throws if either class is missing.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);
inline double auroc(const ScoredQuery& sq) { return auroc(sq.scores, sq.labels); }

// W1 between two empirical distributions: the L1 distance between their
// quantile functions, integrated exactly over the merged step points.
double wasserstein1(std::span<const double> a, std::span<const double> b);

struct WelchResult {
  double t = 0.0;
  double p = 1.0;    // two-sided
  double dof = 0.0;  // Welch-Satterthwaite
};

WelchResult welch_ttest(std::span<const double> a, std::span<const double> b);

struct PairwiseL2 {
  double mean = 0.0;
  double max = 0.0;
  std::vector<double> distances;  // all i < j pairs in row-major pair order
};

PairwiseL2 pairwise_l2_stats(const Mat64& points);

double mean(std::span<const double> values);
// Unbiased sample variance.
double sample_variance(std::span<const double> values);
// Linear-interpolation quantile (type 7) of already sorted values.
double sorted_quantile(std::span<const double> sorted, double q);

}  // namespace medsel
