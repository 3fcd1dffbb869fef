#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "snn/layers/network.hpp"

namespace snn::energy {

/// Per-operation energies in picojoules.
struct EnergyModel {
  double e_mac_pj = 4.6;
  double e_ac_pj = 0.9;
  void validate() const;
};

struct LayerOps {
  std::string name;
  std::uint64_t macs = 0;
  std::uint64_t acs = 0;
};

struct EnergyReport {
  std::vector<LayerOps> layers;  // in execution order
  std::uint64_t total_macs = 0;
  std::uint64_t total_acs = 0;
  double energy_mj = 0.0;
  std::size_t samples_averaged = 1;
  EnergyModel model;

  /// One "name macs acs" line per layer, then a totals footer.
  std::string to_text() const;
  /// key=value lines: model.*, totals.*, layer.<name>.macs / .acs.
  std::string to_kv() const;
  static EnergyReport from_kv(const std::string& text);
};

/// (macs * e_mac + acs * e_ac) picojoules, in millijoules.
double energy_estimate(std::uint64_t macs, std::uint64_t acs, const EnergyModel& model = {});

/// Kh*Kw*Cin*Cout*Hout*Wout for one image.
std::uint64_t conv_macs(const Conv2dGeometry& g);
std::uint64_t linear_macs(std::size_t in_features, std::size_t out_features);

/// Number of output positions along one axis that read input index `i`.
std::size_t conv_axis_fanout(std::size_t i, std::size_t kernel, std::size_t stride, std::size_t padding,
                             std::size_t out_size);
/// Synapses driven by one input value at (y, x): Cout times the number of
/// output positions whose window covers it. Smaller near padded borders.
std::uint64_t conv_position_fanout(const Conv2dGeometry& g, std::size_t y, std::size_t x);

/// Accumulates per-layer counts from OpCounter callbacks. Analog inputs count
/// MACs; spike-fed layers count one AC per unit of input per synapse, so an
/// input of value k (summed spikes) costs k times its fanout.
class OpProfiler : public layers::OpCounter {
 public:
  void on_conv(const std::string& layer, const Tensor& input, const Conv2dGeometry& g,
               bool spike_input) override;
  void on_linear(const std::string& layer, const Tensor& input, std::size_t out_features,
                 bool spike_input) override;

  const std::vector<LayerOps>& layers() const { return layers_; }
  void clear() { layers_.clear(); index_.clear(); }

 private:
  LayerOps& slot(const std::string& name);
  std::vector<LayerOps> layers_;
  std::map<std::string, std::size_t> index_;
};

/// Constant-cost count for an analog model, by running one zero clip of
/// shape [T, B, C, H, W]. Counts are per clip (divided by B).
EnergyReport count_ops_analog(layers::Model& model, const Shape& clip_shape, const EnergyModel& em = {});

/// Activity-dependent count for a spiking model, averaged over clips. Each
/// element of `clips` is [T, B, C, H, W]; every batch entry is one sample.
EnergyReport count_ops_snn(layers::Model& model, const std::vector<Tensor>& clips, const EnergyModel& em = {});
/// Same, pulling `count` clips from a callback.
EnergyReport count_ops_snn(layers::Model& model, std::size_t count,
                           const std::function<Tensor(std::size_t)>& clip_at, const EnergyModel& em = {});

}  // namespace snn::energy
