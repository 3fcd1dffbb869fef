#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "snn/data/adamw.hpp"
#include "snn/data/clips.hpp"
#include "snn/data/kv_config.hpp"
#include "snn/layers/network.hpp"

namespace snn::data {

enum class PosWeightMode { auto_ratio, fixed };

/// Defaults follow the training protocol table.
struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-1;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 100;
  std::size_t early_stop_patience = 8;
  PosWeightMode pos_weight_mode = PosWeightMode::auto_ratio;
  double pos_weight = 1.0;  // used when fixed
  std::uint64_t seed = 0;
  bool verbose = false;

  void validate() const;
  KeyValues to_kv() const;
  /// Unknown keys are ignored here; callers decide whether to reject them.
  static TrainConfig from_kv(const KeyValues& kv);
};

/// Counts epochs since the last strict improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}
  /// Returns true when training should stop.
  bool update(double value);
  bool improved() const { return improved_; }
  double best() const { return best_; }
  std::size_t stale_epochs() const { return stale_; }

 private:
  std::size_t patience_;
  double best_ = 0.0;
  bool has_best_ = false;
  bool improved_ = false;
  std::size_t stale_ = 0;
};

struct EvalMetrics {
  double loss = 0.0;
  double auroc = 0.0;  // NaN when one class is missing
  double f_score = 0.0;
  std::size_t clips = 0;
  std::vector<double> scores;  // sigmoid of the readout
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_auroc = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> curve;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  double pos_weight = 1.0;
  bool stopped_early = false;
  EvalMetrics test;
};

EvalMetrics evaluate(layers::Model& model, const ClipSource& source, const std::vector<ClipRef>& clips,
                     double pos_weight, std::size_t batch_size);

/// Trains with weighted BCE and AdamW, validating every epoch. The model ends
/// holding the parameters of the epoch with the lowest validation loss, and
/// the test metrics are computed with them.
TrainResult train(layers::Model& model, const ClipSource& source, const std::vector<ClipRef>& train_clips,
                  const std::vector<ClipRef>& val_clips, const std::vector<ClipRef>& test_clips,
                  const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace snn::data
