#pragma once

#include <span>
#include <vector>

namespace diacdm {

/// Mann-Whitney AUC: the fraction of (positive, negative) pairs in which the
/// positive scores higher, ties counting one half. O(n log n) via ranks.
/// Throws DegenerateLabels unless both classes occur, InvalidLabel for
/// labels other than 0/1.
double auc(std::span<const double> scores, std::span<const int> labels);

/// Fraction of items where (score >= threshold) matches the label.
double acc(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

/// Ranks starting at 1, ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks. 0 when either side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> values);
/// Population standard deviation.
double stddev(std::span<const double> values);

}  // namespace diacdm
