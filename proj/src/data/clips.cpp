#include "snn/data/clips.hpp"

#include <algorithm>
#include <cstring>
#include <iostream>

#include "snn/errors.hpp"

namespace snn::data {

std::uint8_t label_detection(std::span<const std::uint8_t> labels, std::size_t start, std::size_t len) {
  if (start + len > labels.size()) throw UsageError("label_detection: window exceeds the label sequence");
  for (std::size_t i = start; i < start + len; ++i) {
    if (labels[i]) return 1;
  }
  return 0;
}

std::vector<ClipRef> window_clips(std::span<const std::uint8_t> labels, std::size_t clip_len, std::size_t overlap,
                                  std::size_t video_index) {
  if (clip_len == 0) throw UsageError("clip length must be >= 1");
  if (overlap >= clip_len) throw UsageError("overlap must be smaller than the clip length");
  std::vector<ClipRef> out;
  if (clip_len > labels.size()) {
    std::cerr << "warning: clip length " << clip_len << " exceeds video length " << labels.size()
              << "; no clips\n";
    return out;
  }
  const std::size_t stride = clip_len - overlap;
  for (std::size_t s = 0; s + clip_len <= labels.size(); s += stride) {
    out.push_back({video_index, s, label_detection(labels, s, clip_len)});
  }
  return out;
}

std::vector<ClipRef> detection_clips(const std::vector<Video>& videos, std::span<const std::size_t> which,
                                     std::size_t clip_len, std::size_t overlap) {
  std::vector<ClipRef> out;
  for (std::size_t v : which) {
    auto c = window_clips(videos.at(v).labels, clip_len, overlap, v);
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

std::vector<ClipRef> label_prediction(const std::vector<Video>& videos, std::span<const std::size_t> which,
                                      std::size_t horizon, std::size_t clip_len, std::size_t overlap,
                                      std::uint64_t seed) {
  if (clip_len == 0 || overlap >= clip_len) throw UsageError("label_prediction: need 0 <= overlap < clip_len");
  const std::size_t stride = clip_len - overlap;
  std::vector<ClipRef> pos, neg;
  bool any_crossing = false;
  for (std::size_t v : which) {
    const Video& vid = videos.at(v);
    if (vid.crossing) {
      any_crossing = true;
      const std::size_t end = vid.first_crossing;
      const std::size_t begin = end > horizon ? end - horizon : 0;
      for (std::size_t s = begin; s + clip_len <= end; s += stride) pos.push_back({v, s, 1});
    } else {
      auto c = window_clips(vid.labels, clip_len, overlap, v);
      for (auto& r : c) neg.push_back({r.video, r.start, 0});
    }
  }
  if (!any_crossing) throw UsageError("label_prediction: no crossing videos in the selection");
  if (pos.empty()) throw UsageError("label_prediction: horizon shorter than the clip length for every crossing video");
  std::mt19937_64 rng(seed);
  if (neg.size() > pos.size()) {
    std::shuffle(neg.begin(), neg.end(), rng);
    neg.resize(pos.size());
  } else if (pos.size() > neg.size()) {
    std::shuffle(pos.begin(), pos.end(), rng);
    pos.resize(neg.size());
  }
  std::vector<ClipRef> out = pos;
  out.insert(out.end(), neg.begin(), neg.end());
  std::sort(out.begin(), out.end(), [](const ClipRef& a, const ClipRef& b) {
    return a.video != b.video ? a.video < b.video : a.start < b.start;
  });
  return out;
}

ClipSource::ClipSource(const std::vector<Video>* videos, std::size_t clip_len, std::size_t repeat)
    : videos_(videos), clip_len_(clip_len), repeat_(repeat) {
  if (!videos_ || videos_->empty()) throw UsageError("ClipSource: no videos");
  if (clip_len_ == 0 || repeat_ == 0) throw UsageError("ClipSource: clip length and repeat must be >= 1");
}

std::size_t ClipSource::channels() const { return videos_->front().frames.front().channels; }

Tensor ClipSource::batch(std::span<const ClipRef> clips) const {
  if (clips.empty()) throw UsageError("ClipSource::batch: empty batch");
  const auto& f0 = videos_->at(clips.front().video).frames.front();
  const std::size_t C = f0.channels, H = f0.height, W = f0.width, plane = C * H * W;
  const std::size_t T = timesteps(), B = clips.size();
  std::vector<float> data(T * B * plane);
  for (std::size_t b = 0; b < B; ++b) {
    const Video& v = videos_->at(clips[b].video);
    if (clips[b].start + clip_len_ > v.size()) throw UsageError("ClipSource: clip runs past the end of " + v.id);
    for (std::size_t t = 0; t < T; ++t) {
      const dvs::Image& img = v.frames[clips[b].start + t / repeat_];
      if (img.pixels.size() != plane) throw ShapeError("ClipSource: frame size differs within the dataset");
      std::memcpy(&data[(t * B + b) * plane], img.pixels.data(), plane * sizeof(float));
    }
  }
  return Tensor({T, B, C, H, W}, std::move(data));
}

Tensor ClipSource::clip(const ClipRef& c) const {
  Tensor b = batch(std::span<const ClipRef>(&c, 1));
  const auto& s = b.shape();
  return Tensor({s[0], s[2], s[3], s[4]}, std::vector<float>(b.data().begin(), b.data().end()));
}

void SplitSpec::validate() const {
  auto ok = [](double f) { return f > 0.0 && f < 1.0; };
  if (!ok(test_fraction) || !ok(val_fraction_of_remainder)) throw UsageError("split fractions must lie in (0, 1)");
}

Splits split_videos(const std::vector<Video>& videos, const SplitSpec& spec) {
  spec.validate();
  std::vector<std::size_t> strata[2];
  for (std::size_t i = 0; i < videos.size(); ++i) strata[videos[i].crossing ? 1 : 0].push_back(i);
  std::mt19937_64 rng(spec.seed);
  Splits s;
  for (auto& group : strata) {
    std::shuffle(group.begin(), group.end(), rng);
    const auto n = group.size();
    const auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * n));
    const auto n_val = static_cast<std::size_t>(std::llround(spec.val_fraction_of_remainder * (n - n_test)));
    for (std::size_t i = 0; i < n; ++i) {
      (i < n_test ? s.test : i < n_test + n_val ? s.val : s.train).push_back(group[i]);
    }
  }
  for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

}  // namespace snn::data
