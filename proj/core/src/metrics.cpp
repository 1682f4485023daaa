#include "diacdm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "diacdm/error.hpp"

namespace diacdm {

namespace {

void check_lengths(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw Error(Errc::ShapeMismatch, std::to_string(scores.size()) + " scores vs " +
                                             std::to_string(labels.size()) + " labels");
    }
    for (int y : labels) {
        if (y != 0 && y != 1) throw Error(Errc::InvalidLabel, "label " + std::to_string(y));
    }
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    check_lengths(scores, labels);
    const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw Error(Errc::DegenerateLabels, "AUC needs both classes (" + std::to_string(n_pos) +
                                                " positive, " + std::to_string(n_neg) + " negative)");
    }
    const auto ranks = average_ranks(scores);
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == 1) rank_sum += ranks[i];
    // U counts half-integers exactly in binary, so this is exact for any
    // realistic n; the division is the only rounding step.
    const double u = rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double acc(std::span<const double> scores, std::span<const int> labels, double threshold) {
    check_lengths(scores, labels);
    if (scores.empty()) throw Error(Errc::EmptySplit, "accuracy of an empty set");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) hits += (scores[i] >= threshold) == (labels[i] == 1);
    return static_cast<double>(hits) / static_cast<double>(scores.size());
}

double mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
    if (values.empty()) return 0.0;
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size()));
}

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(Errc::ShapeMismatch, "spearman: " + std::to_string(a.size()) + " vs " +
                                             std::to_string(b.size()) + " values");
    }
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double ma = mean(ra), mb = mean(rb);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

}  // namespace diacdm
