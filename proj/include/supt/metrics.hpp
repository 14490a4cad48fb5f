#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "supt/errors.hpp"

namespace supt {

// Probability that a random positive outranks a random negative; ties credited
// 0.5. Rank-sum (Mann-Whitney) computation. Throws MetricError when only one
// class is present.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

}  // namespace supt
