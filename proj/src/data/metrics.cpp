#include "snn/data/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

namespace snn::data {

double auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw MetricError("auroc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the average rank keeps every value an integer.
  double pos_rank2 = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double rank2 = static_cast<double>(i + 1 + j);  // (i+1 + j) = 2 * mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        pos_rank2 += rank2;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw MetricError("auroc undefined: labels contain a single class");
  const double u = (pos_rank2 - static_cast<double>(n_pos) * (n_pos + 1)) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double f_score_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  if (tp == 0) return 0.0;
  return 100.0 * 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
}

double f_score(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.size() != labels.size()) throw MetricError("f_score: scores and labels differ in length");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    const bool pos = labels[i] == 1;
    tp += pred && pos;
    fp += pred && !pos;
    fn += !pred && pos;
  }
  return f_score_counts(tp, fp, fn);
}

}  // namespace snn::data
