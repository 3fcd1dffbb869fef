#include "snn/energy/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace snn::energy {
namespace {

std::uint64_t spike_units(float v, const std::string& layer) {
  const double r = std::nearbyint(static_cast<double>(v));
  if (v < 0.0f || std::fabs(v - r) > 1e-6) {
    throw DomainError("layer " + layer + " is marked spike-fed but received non-count value " + std::to_string(v));
  }
  return static_cast<std::uint64_t>(r);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

EnergyReport finish(const std::vector<LayerOps>& sums, std::size_t samples, const EnergyModel& em) {
  EnergyReport r;
  r.model = em;
  r.samples_averaged = samples;
  for (const auto& l : sums) {
    // Round-half-up integer mean.
    LayerOps avg{l.name, (l.macs + samples / 2) / samples, (l.acs + samples / 2) / samples};
    r.total_macs += avg.macs;
    r.total_acs += avg.acs;
    r.layers.push_back(std::move(avg));
  }
  r.energy_mj = energy_estimate(r.total_macs, r.total_acs, em);
  return r;
}

}  // namespace

void EnergyModel::validate() const {
  if (!(e_mac_pj > 0.0) || !(e_ac_pj > 0.0)) throw UsageError("energy model constants must be > 0");
}

double energy_estimate(std::uint64_t macs, std::uint64_t acs, const EnergyModel& model) {
  return (static_cast<double>(macs) * model.e_mac_pj + static_cast<double>(acs) * model.e_ac_pj) * 1e-9;
}

std::uint64_t conv_macs(const Conv2dGeometry& g) {
  return static_cast<std::uint64_t>(g.kernel_h) * g.kernel_w * g.in_channels * g.out_channels * g.out_h() *
         g.out_w();
}

std::uint64_t linear_macs(std::size_t in_features, std::size_t out_features) {
  return static_cast<std::uint64_t>(in_features) * out_features;
}

std::size_t conv_axis_fanout(std::size_t i, std::size_t kernel, std::size_t stride, std::size_t padding,
                             std::size_t out_size) {
  // Output o reads inputs [o*stride - padding, o*stride - padding + kernel).
  const std::size_t hi_num = i + padding;
  const std::size_t lo_num = hi_num + 1 >= kernel ? hi_num + 1 - kernel : 0;
  const std::size_t lo = (lo_num + stride - 1) / stride;
  if (out_size == 0) return 0;
  const std::size_t hi = std::min(out_size - 1, hi_num / stride);
  return hi >= lo ? hi - lo + 1 : 0;
}

std::uint64_t conv_position_fanout(const Conv2dGeometry& g, std::size_t y, std::size_t x) {
  return static_cast<std::uint64_t>(g.out_channels) *
         conv_axis_fanout(y, g.kernel_h, g.stride, g.padding, g.out_h()) *
         conv_axis_fanout(x, g.kernel_w, g.stride, g.padding, g.out_w());
}

LayerOps& OpProfiler::slot(const std::string& name) {
  auto it = index_.find(name);
  if (it != index_.end()) return layers_[it->second];
  index_[name] = layers_.size();
  layers_.push_back({name, 0, 0});
  return layers_.back();
}

void OpProfiler::on_conv(const std::string& layer, const Tensor& input, const Conv2dGeometry& g,
                         bool spike_input) {
  LayerOps& ops = slot(layer);
  const std::size_t n = input.dim(0);
  if (!spike_input) {
    ops.macs += conv_macs(g) * n;
    return;
  }
  std::vector<std::uint64_t> fy(g.in_h), fx(g.in_w);
  for (std::size_t y = 0; y < g.in_h; ++y) fy[y] = conv_axis_fanout(y, g.kernel_h, g.stride, g.padding, g.out_h());
  for (std::size_t x = 0; x < g.in_w; ++x) fx[x] = conv_axis_fanout(x, g.kernel_w, g.stride, g.padding, g.out_w());
  const auto data = input.data();
  std::size_t i = 0;
  std::uint64_t acs = 0;
  for (std::size_t b = 0; b < n * g.in_channels; ++b)
    for (std::size_t y = 0; y < g.in_h; ++y)
      for (std::size_t x = 0; x < g.in_w; ++x, ++i) {
        if (data[i] != 0.0f) acs += spike_units(data[i], layer) * fy[y] * fx[x];
      }
  ops.acs += acs * g.out_channels;
}

void OpProfiler::on_linear(const std::string& layer, const Tensor& input, std::size_t out_features,
                           bool spike_input) {
  LayerOps& ops = slot(layer);
  const std::size_t in_features = input.shape().back();
  const std::size_t rows = input.numel() / in_features;
  if (!spike_input) {
    ops.macs += linear_macs(in_features, out_features) * rows;
    return;
  }
  std::uint64_t units = 0;
  for (float v : input.data()) {
    if (v != 0.0f) units += spike_units(v, layer);
  }
  ops.acs += units * out_features;
}

EnergyReport count_ops_analog(layers::Model& model, const Shape& clip_shape, const EnergyModel& em) {
  em.validate();
  if (!model.analog()) {
    throw UsageError("count_ops_analog: network is spiking; its cost depends on activity, use count_ops_snn");
  }
  if (clip_shape.size() != 5) throw ShapeError("count_ops_analog: clip shape must be [T,B,C,H,W]");
  const bool was_training = model.training();
  model.set_training(false);
  OpProfiler prof;
  {
    NoGradGuard guard;
    model.forward(Tensor(clip_shape, 0.0f), {&prof, nullptr});
  }
  model.set_training(was_training);
  return finish(prof.layers(), clip_shape[1], em);
}

EnergyReport count_ops_snn(layers::Model& model, std::size_t count, const std::function<Tensor(std::size_t)>& clip_at,
                           const EnergyModel& em) {
  em.validate();
  if (model.analog()) throw UsageError("count_ops_snn: network is analog, use count_ops_analog");
  if (count == 0) throw UsageError("count_ops_snn: dataset is empty");
  const bool was_training = model.training();
  model.set_training(false);
  OpProfiler prof;
  std::size_t samples = 0;
  {
    NoGradGuard guard;
    for (std::size_t i = 0; i < count; ++i) {
      const Tensor clip = clip_at(i);
      if (clip.rank() != 5) throw ShapeError("count_ops_snn: clips must be [T,B,C,H,W]");
      samples += clip.dim(1);
      model.forward(clip, {&prof, nullptr});
    }
  }
  model.set_training(was_training);
  return finish(prof.layers(), samples, em);
}

EnergyReport count_ops_snn(layers::Model& model, const std::vector<Tensor>& clips, const EnergyModel& em) {
  return count_ops_snn(model, clips.size(), [&](std::size_t i) { return clips[i]; }, em);
}

std::string EnergyReport::to_text() const {
  std::ostringstream os;
  std::size_t w = 5;
  for (const auto& l : layers) w = std::max(w, l.name.size());
  os << std::left << std::setw(static_cast<int>(w)) << "layer" << "  " << std::right << std::setw(16) << "macs"
     << "  " << std::setw(16) << "acs" << "\n";
  for (const auto& l : layers) {
    os << std::left << std::setw(static_cast<int>(w)) << l.name << "  " << std::right << std::setw(16) << l.macs
       << "  " << std::setw(16) << l.acs << "\n";
  }
  os << std::left << std::setw(static_cast<int>(w)) << "total" << "  " << std::right << std::setw(16) << total_macs
     << "  " << std::setw(16) << total_acs << "\n";
  os << "energy_mj " << fmt(energy_mj) << "\n";
  os << "e_mac_pj " << fmt(model.e_mac_pj) << "  e_ac_pj " << fmt(model.e_ac_pj) << "\n";
  os << "samples_averaged " << samples_averaged << "\n";
  return os.str();
}

std::string EnergyReport::to_kv() const {
  std::ostringstream os;
  os << "model.e_mac_pj=" << fmt(model.e_mac_pj) << "\n";
  os << "model.e_ac_pj=" << fmt(model.e_ac_pj) << "\n";
  os << "samples_averaged=" << samples_averaged << "\n";
  os << "totals.macs=" << total_macs << "\n";
  os << "totals.acs=" << total_acs << "\n";
  os << "totals.energy_mj=" << fmt(energy_mj) << "\n";
  for (const auto& l : layers) {
    os << "layer." << l.name << ".macs=" << l.macs << "\n";
    os << "layer." << l.name << ".acs=" << l.acs << "\n";
  }
  return os.str();
}

EnergyReport EnergyReport::from_kv(const std::string& text) {
  EnergyReport r;
  std::istringstream is(text);
  std::string line;
  std::map<std::string, std::size_t> idx;
  try {
    while (std::getline(is, line)) {
      const auto eq = line.find('=');
      if (line.empty() || eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
      if (key == "model.e_mac_pj") r.model.e_mac_pj = std::stod(val);
      else if (key == "model.e_ac_pj") r.model.e_ac_pj = std::stod(val);
      else if (key == "samples_averaged") r.samples_averaged = std::stoul(val);
      else if (key == "totals.macs") r.total_macs = std::stoull(val);
      else if (key == "totals.acs") r.total_acs = std::stoull(val);
      else if (key == "totals.energy_mj") r.energy_mj = std::stod(val);
      else if (key.rfind("layer.", 0) == 0) {
        const auto dot = key.rfind('.');
        const std::string name = key.substr(6, dot - 6), field = key.substr(dot + 1);
        auto [it, fresh] = idx.try_emplace(name, r.layers.size());
        if (fresh) r.layers.push_back({name, 0, 0});
        if (field == "macs") r.layers[it->second].macs = std::stoull(val);
        else if (field == "acs") r.layers[it->second].acs = std::stoull(val);
      }
    }
  } catch (const std::logic_error&) {
    throw UsageError("malformed energy report line: " + line);
  }
  return r;
}

}  // namespace snn::energy
