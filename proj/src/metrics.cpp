#include "supt/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace supt {

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw ContractError("roc_auc: length mismatch");
    const std::size_t n = scores.size();
    std::size_t pos = 0;
    for (auto l : labels) pos += l ? 1 : 0;
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) throw MetricError("roc_auc: only one class present");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks over tie groups, accumulate the positive rank sum.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t t = i; t <= j; ++t) {
            if (labels[order[t]]) rank_sum_pos += avg_rank;
        }
        i = j + 1;
    }
    const double p = static_cast<double>(pos);
    return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

}  // namespace supt
