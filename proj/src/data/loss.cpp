#include "snn/data/loss.hpp"

#include <cmath>
#include <string>

namespace snn::data {
namespace {

// ln(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

Tensor weighted_bce(const Tensor& logits, std::span<const float> labels, double pos_weight) {
  if (logits.numel() != labels.size()) {
    throw ShapeError("weighted_bce: " + std::to_string(logits.numel()) + " logits but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw UsageError("weighted_bce: empty batch");
  if (!(pos_weight > 0.0)) throw UsageError("weighted_bce: pos_weight must be > 0");
  const std::size_t n = labels.size();
  double total = 0.0;
  std::vector<float> dz(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = logits[i];
    if (std::isnan(z)) throw DomainError("weighted_bce: NaN logit at index " + std::to_string(i));
    const double y = labels[i];
    // -ln p = softplus(-z), -ln(1-p) = softplus(z)
    total += pos_weight * y * softplus(-z) + (1.0 - y) * softplus(z);
    const double p = logistic(z);
    dz[i] = static_cast<float>((pos_weight * y * (p - 1.0) + (1.0 - y) * p) / n);
  }
  return make_result<float>({1}, {static_cast<float>(total / n)}, {logits},
                            [dz = std::move(dz)](detail::Node<float>& self) {
                              auto& g = self.inputs[0]->ensure_grad();
                              for (std::size_t i = 0; i < dz.size(); ++i) g[i] += self.grad[0] * dz[i];
                            });
}

double ratio_pos_weight(std::span<const std::uint8_t> labels) {
  std::size_t pos = 0;
  for (auto l : labels) pos += l ? 1 : 0;
  if (pos == 0) throw UsageError("cannot derive a class weight: no positive samples in the training split");
  return static_cast<double>(labels.size() - pos) / static_cast<double>(pos);
}

}  // namespace snn::data
