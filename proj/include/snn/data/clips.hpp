#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "snn/data/scene.hpp"
#include "snn/tensor/tensor.hpp"

namespace snn::data {

/// A window [start, start + clip_len) into videos[video].
struct ClipRef {
  std::size_t video = 0;
  std::size_t start = 0;
  std::uint8_t label = 0;
  bool operator==(const ClipRef&) const = default;
};

/// Logical OR over labels[start, start + len).
std::uint8_t label_detection(std::span<const std::uint8_t> labels, std::size_t start, std::size_t len);

/// Starts 0, stride, 2*stride, ... with stride = clip_len - overlap. Returns
/// nothing (and warns on stderr) when clip_len exceeds the video.
std::vector<ClipRef> window_clips(std::span<const std::uint8_t> labels, std::size_t clip_len,
                                  std::size_t overlap, std::size_t video_index = 0);

/// Detection clips over several videos.
std::vector<ClipRef> detection_clips(const std::vector<Video>& videos, std::span<const std::size_t> which,
                                     std::size_t clip_len, std::size_t overlap);

/// Prediction clips: positives are windows inside the `horizon` frames before
/// each crossing video's first crossing frame (truncated at frame 0);
/// negatives are windows from non-crossing videos, sampled without
/// replacement to match the positive count. If negatives are scarcer,
/// positives are subsampled instead.
std::vector<ClipRef> label_prediction(const std::vector<Video>& videos, std::span<const std::size_t> which,
                                      std::size_t horizon, std::size_t clip_len, std::size_t overlap,
                                      std::uint64_t seed);

/// Batches clips as [T, B, C, H, W]. Each frame is repeated `repeat` times
/// along T, so T = clip_len * repeat.
class ClipSource {
 public:
  ClipSource(const std::vector<Video>* videos, std::size_t clip_len, std::size_t repeat = 1);

  Tensor batch(std::span<const ClipRef> clips) const;
  /// [T, C, H, W] for one clip.
  Tensor clip(const ClipRef& c) const;

  std::size_t timesteps() const { return clip_len_ * repeat_; }
  std::size_t channels() const;
  std::size_t clip_len() const { return clip_len_; }
  const std::vector<Video>& videos() const { return *videos_; }

 private:
  const std::vector<Video>* videos_;
  std::size_t clip_len_;
  std::size_t repeat_;
};

struct SplitSpec {
  double test_fraction = 0.15;
  double val_fraction_of_remainder = 0.15;
  std::uint64_t seed = 0;
  void validate() const;
};

struct Splits {
  std::vector<std::size_t> train, val, test;  // video indices
};

/// Whole-video split, stratified on whether the video contains a crossing.
Splits split_videos(const std::vector<Video>& videos, const SplitSpec& spec);

}  // namespace snn::data
