#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "snn/data/clips.hpp"
#include "snn/data/scene.hpp"

namespace snn::data {

// Layout:
//   root/<video_id>/frames/000000.png ...
//   root/<video_id>/labels.csv            header "frame_index,label"
//   root/videos.txt                        one id per line, dataset order
//   root/{train,val,test}.txt              split manifests (video ids)

void write_video(const std::filesystem::path& root, const Video& video);
/// `channels` = 0 keeps what the PNGs hold; a smaller count keeps the
/// leading planes (2-channel event frames are stored as RGB).
Video read_video(const std::filesystem::path& root, const std::string& id, std::size_t channels = 0);

void write_dataset(const std::filesystem::path& root, const std::vector<Video>& videos);
/// Videos in the order of videos.txt, or sorted directory names without it.
std::vector<Video> read_dataset(const std::filesystem::path& root, std::size_t channels = 0);

std::vector<std::string> read_id_list(const std::filesystem::path& path);
void write_id_list(const std::filesystem::path& path, const std::vector<std::string>& ids);

void write_splits(const std::filesystem::path& root, const std::vector<Video>& videos, const Splits& splits);
/// Maps manifest ids back to indices into `videos`.
Splits read_splits(const std::filesystem::path& root, const std::vector<Video>& videos);

}  // namespace snn::data
