#include "snn/data/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "snn/data/loss.hpp"
#include "snn/data/metrics.hpp"

namespace snn::data {
namespace {

double to_double(const KeyValues& kv, const std::string& key, double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::logic_error&) {
    throw UsageError("config: '" + key + "' is not a number: " + it->second);
  }
}

std::size_t to_size(const KeyValues& kv, const std::string& key, std::size_t fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(it->second, &used);
    if (used != it->second.size() || it->second.front() == '-') throw std::invalid_argument(key);
    return static_cast<std::size_t>(v);
  } catch (const std::logic_error&) {
    throw UsageError("config: '" + key + "' is not a non-negative integer: " + it->second);
  }
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<float> labels_of(std::span<const ClipRef> clips) {
  std::vector<float> out;
  out.reserve(clips.size());
  for (const auto& c : clips) out.push_back(static_cast<float>(c.label));
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw UsageError("train: lr must be > 0");
  if (weight_decay < 0.0) throw UsageError("train: weight decay must be >= 0");
  if (batch_size == 0) throw UsageError("train: batch size must be >= 1");
  if (max_epochs == 0) throw UsageError("train: max epochs must be >= 1");
  if (early_stop_patience == 0) throw UsageError("train: patience must be >= 1");
  if (pos_weight_mode == PosWeightMode::fixed && !(pos_weight > 0.0)) throw UsageError("train: pos_weight must be > 0");
}

KeyValues TrainConfig::to_kv() const {
  return {
      {"initial_learning_rate", num(lr)},
      {"weight_decay_factor", num(weight_decay)},
      {"batch_size", std::to_string(batch_size)},
      {"maximum_epochs", std::to_string(max_epochs)},
      {"early_stopping", std::to_string(early_stop_patience)},
      {"pos_weight_mode", pos_weight_mode == PosWeightMode::auto_ratio ? "auto_ratio" : "fixed"},
      {"pos_weight", num(pos_weight)},
      {"seed", std::to_string(seed)},
  };
}

TrainConfig TrainConfig::from_kv(const KeyValues& kv) {
  TrainConfig c;
  c.lr = to_double(kv, "initial_learning_rate", c.lr);
  c.weight_decay = to_double(kv, "weight_decay_factor", c.weight_decay);
  c.batch_size = to_size(kv, "batch_size", c.batch_size);
  c.max_epochs = to_size(kv, "maximum_epochs", c.max_epochs);
  c.early_stop_patience = to_size(kv, "early_stopping", c.early_stop_patience);
  if (auto it = kv.find("pos_weight_mode"); it != kv.end()) {
    if (it->second == "auto_ratio") c.pos_weight_mode = PosWeightMode::auto_ratio;
    else if (it->second == "fixed") c.pos_weight_mode = PosWeightMode::fixed;
    else throw UsageError("config: pos_weight_mode must be auto_ratio or fixed");
  }
  c.pos_weight = to_double(kv, "pos_weight", c.pos_weight);
  c.seed = to_size(kv, "seed", c.seed);
  c.validate();
  return c;
}

bool EarlyStopping::update(double value) {
  improved_ = !has_best_ || value < best_;
  if (improved_) {
    best_ = value;
    has_best_ = true;
    stale_ = 0;
  } else {
    ++stale_;
  }
  return stale_ >= patience_;
}

EvalMetrics evaluate(layers::Model& model, const ClipSource& source, const std::vector<ClipRef>& clips,
                     double pos_weight, std::size_t batch_size) {
  if (clips.empty()) throw UsageError("evaluate: no clips");
  const bool was_training = model.training();
  model.set_training(false);
  NoGradGuard guard;
  EvalMetrics m;
  std::vector<int> labels;
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < clips.size(); i += batch_size) {
    const std::span<const ClipRef> part(clips.data() + i, std::min(batch_size, clips.size() - i));
    const Tensor logits = model.forward(source.batch(part));
    const auto y = labels_of(part);
    loss_sum += weighted_bce(logits, y, pos_weight).item() * static_cast<double>(part.size());
    for (std::size_t b = 0; b < part.size(); ++b) {
      m.scores.push_back(1.0 / (1.0 + std::exp(-static_cast<double>(logits[b]))));
      labels.push_back(part[b].label);
    }
  }
  model.set_training(was_training);
  m.clips = clips.size();
  m.loss = loss_sum / static_cast<double>(clips.size());
  try {
    m.auroc = auroc(m.scores, labels);
  } catch (const MetricError&) {
    m.auroc = std::numeric_limits<double>::quiet_NaN();
  }
  m.f_score = f_score(m.scores, labels);
  return m;
}

TrainResult train(layers::Model& model, const ClipSource& source, const std::vector<ClipRef>& train_clips,
                  const std::vector<ClipRef>& val_clips, const std::vector<ClipRef>& test_clips,
                  const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  if (train_clips.empty() || val_clips.empty() || test_clips.empty()) {
    throw UsageError("train: train, validation and test splits must all contain clips");
  }
  TrainResult result;
  if (cfg.pos_weight_mode == PosWeightMode::auto_ratio) {
    std::vector<std::uint8_t> y;
    for (const auto& c : train_clips) y.push_back(c.label);
    result.pos_weight = ratio_pos_weight(y);
  } else {
    result.pos_weight = cfg.pos_weight;
  }

  std::vector<Tensor> params;
  for (auto& nt : model.parameters()) params.push_back(nt.tensor);
  AdamW opt(params, {cfg.lr, cfg.weight_decay});
  std::mt19937_64 rng(cfg.seed);
  std::vector<ClipRef> order = train_clips;
  EarlyStopping stopper(cfg.early_stop_patience);
  std::vector<std::vector<float>> best_state;
  auto snapshot = [&] {
    best_state.clear();
    for (auto& nt : model.state()) best_state.emplace_back(nt.tensor.data().begin(), nt.tensor.data().end());
  };

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    model.set_training(true);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < order.size(); i += cfg.batch_size) {
      const std::span<const ClipRef> part(order.data() + i, std::min(cfg.batch_size, order.size() - i));
      const Tensor logits = model.forward(source.batch(part));
      const Tensor loss = weighted_bce(logits, labels_of(part), result.pos_weight);
      const double l = loss.item();
      if (!std::isfinite(l)) {
        throw DomainError("training diverged: loss " + std::to_string(l) + " at epoch " + std::to_string(epoch) +
                          ", batch starting at clip " + std::to_string(i));
      }
      opt.zero_grad();
      loss.backward();
      opt.step();
      loss_sum += l * static_cast<double>(part.size());
    }
    const EvalMetrics val = evaluate(model, source, val_clips, result.pos_weight, cfg.batch_size);
    EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()), val.loss, val.auroc};
    result.curve.push_back(rec);
    if (cfg.verbose) {
      std::cerr << "epoch " << epoch << " train_loss " << rec.train_loss << " val_loss " << rec.val_loss
                << " val_auroc " << rec.val_auroc << "\n";
    }
    if (on_epoch) on_epoch(rec);
    const bool stop = stopper.update(val.loss);
    if (stopper.improved()) {
      snapshot();
      result.best_epoch = epoch;
      result.best_val_loss = val.loss;
    }
    if (stop) {
      result.stopped_early = epoch < cfg.max_epochs;
      break;
    }
  }

  auto state = model.state();
  for (std::size_t i = 0; i < state.size(); ++i) {
    std::copy(best_state[i].begin(), best_state[i].end(), state[i].tensor.data().begin());
  }
  result.test = evaluate(model, source, test_clips, result.pos_weight, cfg.batch_size);
  return result;
}

}  // namespace snn::data
