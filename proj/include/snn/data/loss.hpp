#pragma once

#include <span>

#include "snn/tensor/tensor.hpp"

namespace snn::data {

/// Mean over the batch of -[w*y*ln p + (1-y)*ln(1-p)], p = logistic(logit),
/// computed through softplus. NaN logits raise DomainError.
Tensor weighted_bce(const Tensor& logits, std::span<const float> labels, double pos_weight);

/// N_neg / N_pos. Throws UsageError when there are no positives.
double ratio_pos_weight(std::span<const std::uint8_t> labels);

}  // namespace snn::data
