#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "snn/layers/modules.hpp"

namespace snn::layers {

/// The three residual-network configurations of the ablation:
///   sp_r18   plain ADD residual + BN
///   sps_r18  SEW IAND residual + BN
///   sps_r18t SEW IAND residual + TEBN
enum class Variant { sp_r18, sps_r18, sps_r18t };

std::string to_string(Variant v);
Variant parse_variant(std::string_view name);
ConnectMode connect_mode_for(Variant v);
bool uses_tebn(Variant v);

struct NetworkConfig {
  Variant variant = Variant::sps_r18t;
  // ReLU instead of spiking neurons; per-frame logits are averaged by the
  // same readout ("pseudotemporal" ANN baseline).
  bool analog_mode = false;
  std::vector<std::size_t> stage_widths{16, 32, 64, 128};
  std::vector<std::size_t> blocks_per_stage{1, 1, 1, 1};
  std::size_t timesteps = 9;
  std::size_t in_channels = 2;
  std::size_t input_h = 64;
  std::size_t input_w = 64;
  std::size_t stem_kernel = 7;
  // 3x3 stride-2 max-pool after the stem neuron, as in ImageNet ResNets.
  bool stem_pool = false;
  double initial_tau = 2.0;
  double v_threshold = 1.0;
  double v_reset = 0.0;
  double alpha = 4.0;
  bool surrogate_alpha_scaling = true;
  std::uint64_t seed = 0;

  /// Desk-scale default: one block per stage, widths 16..128, 64x64 input,
  /// the ResNet18 7x7 stem without its max-pool.
  static NetworkConfig mini();
  /// Full 18-layer topology (7x7 stem and max-pool, widths 64..512) at 450x256.
  static NetworkConfig resnet18();

  void validate() const;
  std::map<std::string, std::string> to_kv() const;
  static NetworkConfig from_kv(const std::map<std::string, std::string>& kv);
};

struct ForwardHooks {
  OpCounter* counter = nullptr;
  // Receives the tensor leaving the stem and every residual block.
  std::vector<Tensor>* block_outputs = nullptr;
};

/// Anything that maps a clip batch [T, B, C, H, W] to logits [B].
class Model {
 public:
  virtual ~Model() = default;
  virtual Tensor forward(const Tensor& clips, const ForwardHooks& hooks = {}) = 0;
  /// Trainable tensors, in a fixed order.
  virtual std::vector<NamedTensor> parameters() = 0;
  /// Parameters plus non-trainable buffers (running statistics).
  virtual std::vector<NamedTensor> state() = 0;
  virtual void set_training(bool on) = 0;
  virtual bool training() const = 0;
  virtual bool analog() const = 0;
  virtual std::size_t timesteps() const = 0;
};

/// Residual network: stem conv -> norm -> neuron [-> max-pool], four stages of
/// basic blocks, global average pool, single-logit linear head, readout.
class Network final : public Model {
 public:
  explicit Network(const NetworkConfig& cfg);

  Tensor forward(const Tensor& clips, const ForwardHooks& hooks = {}) override;
  /// Per-timestep head outputs [T, B, 1], before readout.
  Tensor forward_steps(const Tensor& clips, const ForwardHooks& hooks = {});

  std::vector<NamedTensor> parameters() override;
  std::vector<NamedTensor> state() override;
  void set_training(bool on) override { training_ = on; }
  bool training() const override { return training_; }
  bool analog() const override { return cfg_.analog_mode; }
  std::size_t timesteps() const override { return cfg_.timesteps; }
  const NetworkConfig& config() const { return cfg_; }

 private:
  struct Unit {
    Conv2d conv;
    Norm norm;
    Activation act;
  };
  struct Block {
    Unit first;
    Unit second;  // second.act unused in analog mode (ReLU applied after the sum)
    std::optional<Unit> down;
  };

  Unit make_unit(const std::string& prefix, std::size_t in_ch, std::size_t out_ch,
                 std::size_t kernel, std::size_t stride, std::size_t padding, bool spike_input,
                 std::mt19937_64& rng) const;
  Tensor run_unit(Unit& u, const Tensor& x, OpCounter* counter, bool activate);
  Tensor run_block(Block& b, const Tensor& x, OpCounter* counter);
  void collect(std::vector<NamedTensor>& out, Unit& u, bool buffers);

  NetworkConfig cfg_;
  bool training_ = true;
  std::size_t current_batch_ = 1;
  Unit stem_;
  std::vector<Block> blocks_;
  Linear fc_;
};

std::unique_ptr<Network> build_network(const NetworkConfig& cfg);

}  // namespace snn::layers
