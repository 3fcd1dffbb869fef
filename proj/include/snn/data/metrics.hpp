#pragma once

#include <span>
#include <stdexcept>

namespace snn::data {

/// Raised when a metric has no meaning for the given labels.
class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Needs both classes.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// F1 of the positive class in percent; scores >= threshold predict 1.
double f_score(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);
/// From confusion counts; 0 when tp == 0.
double f_score_counts(std::size_t tp, std::size_t fp, std::size_t fn);

}  // namespace snn::data
