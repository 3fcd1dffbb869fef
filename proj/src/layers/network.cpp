#include "snn/layers/network.hpp"

#include <sstream>

namespace snn::layers {
namespace {

std::string join(const std::vector<std::size_t>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::vector<std::size_t> split_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoul(item));
  }
  return out;
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::sp_r18: return "sp_r18";
    case Variant::sps_r18: return "sps_r18";
    case Variant::sps_r18t: return "sps_r18t";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  if (name == "sp_r18") return Variant::sp_r18;
  if (name == "sps_r18") return Variant::sps_r18;
  if (name == "sps_r18t") return Variant::sps_r18t;
  throw ConfigError("unknown network variant '" + std::string(name) +
                    "' (expected sp_r18, sps_r18 or sps_r18t)");
}

ConnectMode connect_mode_for(Variant v) {
  return v == Variant::sp_r18 ? ConnectMode::add : ConnectMode::iand;
}

bool uses_tebn(Variant v) { return v == Variant::sps_r18t; }

NetworkConfig NetworkConfig::mini() { return NetworkConfig{}; }

NetworkConfig NetworkConfig::resnet18() {
  NetworkConfig cfg;
  cfg.stage_widths = {64, 128, 256, 512};
  cfg.blocks_per_stage = {2, 2, 2, 2};
  cfg.stem_kernel = 7;
  cfg.stem_pool = true;
  cfg.in_channels = 3;
  cfg.input_h = 256;
  cfg.input_w = 450;
  return cfg;
}

void NetworkConfig::validate() const {
  if (stage_widths.empty() || stage_widths.size() != blocks_per_stage.size()) {
    throw ConfigError("network: " + std::to_string(stage_widths.size()) + " stage widths but " +
                      std::to_string(blocks_per_stage.size()) + " block counts");
  }
  for (std::size_t i = 0; i < stage_widths.size(); ++i) {
    if (stage_widths[i] == 0 || blocks_per_stage[i] == 0) {
      throw ConfigError("network: stage " + std::to_string(i) + " has zero width or no blocks");
    }
  }
  if (in_channels == 0) throw ConfigError("network: in_channels must be positive");
  if (timesteps == 0) throw ConfigError("network: timesteps must be positive");
  if (stem_kernel == 0 || stem_kernel % 2 == 0) throw ConfigError("network: stem kernel must be odd");
  if (input_h == 0 || input_w == 0) throw ConfigError("network: input size must be positive");
  if (!(initial_tau > 1.0)) throw ConfigError("network: initial tau must exceed 1");
  if (!(alpha > 0.0)) throw ConfigError("network: surrogate alpha must be positive");
}

std::map<std::string, std::string> NetworkConfig::to_kv() const {
  std::map<std::string, std::string> kv;
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  kv["variant"] = to_string(variant);
  kv["analog_mode"] = analog_mode ? "true" : "false";
  kv["stage_widths"] = join(stage_widths);
  kv["blocks_per_stage"] = join(blocks_per_stage);
  kv["timesteps"] = std::to_string(timesteps);
  kv["in_channels"] = std::to_string(in_channels);
  kv["input_h"] = std::to_string(input_h);
  kv["input_w"] = std::to_string(input_w);
  kv["stem_kernel"] = std::to_string(stem_kernel);
  kv["stem_pool"] = stem_pool ? "on" : "off";
  kv["initial_tau"] = num(initial_tau);
  kv["v_threshold"] = num(v_threshold);
  kv["v_reset"] = num(v_reset);
  kv["alpha"] = num(alpha);
  kv["surrogate_alpha_scaling"] = surrogate_alpha_scaling ? "on" : "off";
  kv["seed"] = std::to_string(seed);
  return kv;
}

NetworkConfig NetworkConfig::from_kv(const std::map<std::string, std::string>& kv) {
  NetworkConfig cfg;
  auto get = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  try {
    if (auto v = get("variant")) cfg.variant = parse_variant(*v);
    if (auto v = get("analog_mode")) cfg.analog_mode = (*v == "true" || *v == "1" || *v == "on");
    if (auto v = get("stage_widths")) cfg.stage_widths = split_sizes(*v);
    if (auto v = get("blocks_per_stage")) cfg.blocks_per_stage = split_sizes(*v);
    if (auto v = get("timesteps")) cfg.timesteps = std::stoul(*v);
    if (auto v = get("in_channels")) cfg.in_channels = std::stoul(*v);
    if (auto v = get("input_h")) cfg.input_h = std::stoul(*v);
    if (auto v = get("input_w")) cfg.input_w = std::stoul(*v);
    if (auto v = get("stem_kernel")) cfg.stem_kernel = std::stoul(*v);
    if (auto v = get("stem_pool")) cfg.stem_pool = (*v == "on" || *v == "true" || *v == "1");
    if (auto v = get("initial_tau")) cfg.initial_tau = std::stod(*v);
    if (auto v = get("v_threshold")) cfg.v_threshold = std::stod(*v);
    if (auto v = get("v_reset")) cfg.v_reset = std::stod(*v);
    if (auto v = get("alpha")) cfg.alpha = std::stod(*v);
    if (auto v = get("surrogate_alpha_scaling")) cfg.surrogate_alpha_scaling = (*v != "off");
    if (auto v = get("seed")) cfg.seed = std::stoull(*v);
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const ConfigError*>(&e)) throw;
    throw ConfigError(std::string("network config: bad numeric value (") + e.what() + ")");
  }
  cfg.validate();
  return cfg;
}

Network::Unit Network::make_unit(const std::string& prefix, std::size_t in_ch, std::size_t out_ch,
                                 std::size_t kernel, std::size_t stride, std::size_t padding,
                                 bool spike_input, std::mt19937_64& rng) const {
  Unit u;
  u.conv = Conv2d::make(prefix + ".conv", in_ch, out_ch, kernel, stride, padding, rng);
  u.conv.spike_input = spike_input;
  const bool temporal = !cfg_.analog_mode && uses_tebn(cfg_.variant);
  u.norm.name = prefix + ".norm";
  u.norm.layer = TEBNLayer<float>::make(out_ch, cfg_.timesteps, temporal);
  u.act.name = prefix + ".sn";
  u.act.analog = cfg_.analog_mode;
  u.act.params = neuron::PLIFParams<float>::with_tau(cfg_.initial_tau);
  u.act.params.v_threshold = cfg_.v_threshold;
  u.act.params.v_reset = cfg_.v_reset;
  u.act.params.alpha = cfg_.alpha;
  u.act.params.surrogate_alpha_scaling = cfg_.surrogate_alpha_scaling;
  return u;
}

Network::Network(const NetworkConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(cfg_.seed);
  const bool spiking = !cfg_.analog_mode;
  const std::size_t w0 = cfg_.stage_widths.front();
  stem_ = make_unit("stem", cfg_.in_channels, w0, cfg_.stem_kernel, 2, cfg_.stem_kernel / 2,
                    /*spike_input=*/false, rng);
  std::size_t in_ch = w0;
  for (std::size_t s = 0; s < cfg_.stage_widths.size(); ++s) {
    const std::size_t width = cfg_.stage_widths[s];
    for (std::size_t b = 0; b < cfg_.blocks_per_stage[s]; ++b) {
      const std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
      const std::string prefix = "layer" + std::to_string(s + 1) + "." + std::to_string(b);
      Block block;
      block.first = make_unit(prefix + ".conv1", in_ch, width, 3, stride, 1, spiking, rng);
      block.second = make_unit(prefix + ".conv2", width, width, 3, 1, 1, spiking, rng);
      if (stride != 1 || in_ch != width) {
        block.down = make_unit(prefix + ".down", in_ch, width, 1, stride, 0, spiking, rng);
      }
      blocks_.push_back(std::move(block));
      in_ch = width;
    }
  }
  fc_ = Linear::make("fc", in_ch, 1, rng);
}

Tensor Network::run_unit(Unit& u, const Tensor& x, OpCounter* counter, bool activate) {
  const std::size_t steps = x.dim(0) / current_batch_;
  Tensor y = u.norm.forward(u.conv.forward(x, counter), steps, training_);
  return activate ? u.act.forward(y, steps) : y;
}

Tensor Network::run_block(Block& b, const Tensor& x, OpCounter* counter) {
  if (cfg_.analog_mode) {
    Tensor a = run_unit(b.first, x, counter, true);
    a = run_unit(b.second, a, counter, false);
    Tensor identity = b.down ? run_unit(*b.down, x, counter, false) : x;
    return relu(add(a, identity));
  }
  Tensor a = run_unit(b.first, x, counter, true);
  a = run_unit(b.second, a, counter, true);
  Tensor identity = b.down ? run_unit(*b.down, x, counter, true) : x;
  return sew_connect(a, identity, connect_mode_for(cfg_.variant));
}

Tensor Network::forward_steps(const Tensor& clips, const ForwardHooks& hooks) {
  if (clips.rank() != 5 || clips.dim(2) != cfg_.in_channels) {
    throw ShapeError("network: expected clips [T,B," + std::to_string(cfg_.in_channels) +
                     ",H,W], got " + shape_str(clips.shape()));
  }
  const std::size_t steps = clips.dim(0);
  current_batch_ = clips.dim(1);
  Tensor x = reshape(clips, {steps * current_batch_, clips.dim(2), clips.dim(3), clips.dim(4)});
  x = run_unit(stem_, x, hooks.counter, true);
  if (cfg_.stem_pool) x = max_pool2d(x, 3, 2, 1);
  if (hooks.block_outputs) hooks.block_outputs->push_back(x);
  for (auto& b : blocks_) {
    x = run_block(b, x, hooks.counter);
    if (hooks.block_outputs) hooks.block_outputs->push_back(x);
  }
  Tensor pooled = global_avg_pool(x);
  Tensor y = fc_.forward(pooled, hooks.counter);
  return reshape(y, {steps, current_batch_, 1});
}

Tensor Network::forward(const Tensor& clips, const ForwardHooks& hooks) {
  Tensor y = readout(forward_steps(clips, hooks));
  return reshape(y, {y.dim(0)});
}

void Network::collect(std::vector<NamedTensor>& out, Unit& u, bool buffers) {
  out.push_back({u.conv.name + ".weight", u.conv.weight});
  out.push_back({u.norm.name + ".gamma", u.norm.layer.gamma});
  out.push_back({u.norm.name + ".beta", u.norm.layer.beta});
  if (u.norm.layer.temporal) out.push_back({u.norm.name + ".p", u.norm.layer.p});
  if (buffers) {
    out.push_back({u.norm.name + ".running_mean", u.norm.layer.running_mean});
    out.push_back({u.norm.name + ".running_var", u.norm.layer.running_var});
  }
  if (!cfg_.analog_mode) out.push_back({u.act.name + ".a", u.act.params.a});
}

std::vector<NamedTensor> Network::parameters() {
  std::vector<NamedTensor> out;
  collect(out, stem_, false);
  for (auto& b : blocks_) {
    collect(out, b.first, false);
    collect(out, b.second, false);
    if (b.down) collect(out, *b.down, false);
  }
  out.push_back({"fc.weight", fc_.weight});
  out.push_back({"fc.bias", fc_.bias});
  return out;
}

std::vector<NamedTensor> Network::state() {
  std::vector<NamedTensor> out;
  collect(out, stem_, true);
  for (auto& b : blocks_) {
    collect(out, b.first, true);
    collect(out, b.second, true);
    if (b.down) collect(out, *b.down, true);
  }
  out.push_back({"fc.weight", fc_.weight});
  out.push_back({"fc.bias", fc_.bias});
  return out;
}

std::unique_ptr<Network> build_network(const NetworkConfig& cfg) {
  return std::make_unique<Network>(cfg);
}

}  // namespace snn::layers
