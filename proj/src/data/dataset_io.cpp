#include "snn/data/dataset_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "snn/dvs/image.hpp"

namespace snn::data {
namespace fs = std::filesystem;

namespace {

std::string frame_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.png", i);
  return buf;
}

}  // namespace

void write_video(const fs::path& root, const Video& video) {
  const fs::path dir = root / video.id;
  fs::create_directories(dir / "frames");
  for (std::size_t i = 0; i < video.frames.size(); ++i) dvs::write_png(dir / "frames" / frame_name(i), video.frames[i]);
  std::ofstream f(dir / "labels.csv");
  if (!f) throw dvs::FormatError("cannot write " + (dir / "labels.csv").string());
  f << "frame_index,label\n";
  for (std::size_t i = 0; i < video.labels.size(); ++i) f << i << "," << static_cast<int>(video.labels[i]) << "\n";
}

Video read_video(const fs::path& root, const std::string& id, std::size_t channels) {
  const fs::path dir = root / id;
  std::ifstream f(dir / "labels.csv");
  if (!f) throw dvs::FormatError("missing " + (dir / "labels.csv").string());
  std::string line;
  if (!std::getline(f, line) || line.rfind("frame_index,label", 0) != 0) {
    throw dvs::FormatError((dir / "labels.csv").string() + ": expected header 'frame_index,label'");
  }
  Video v;
  v.id = id;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t idx = 0;
    int label = -1;
    char comma = 0;
    std::istringstream ls(line);
    if (!(ls >> idx >> comma >> label) || comma != ',' || (label != 0 && label != 1) || idx != v.labels.size()) {
      throw dvs::FormatError((dir / "labels.csv").string() + " line " + std::to_string(lineno) + ": bad record '" +
                             line + "'");
    }
    v.labels.push_back(static_cast<std::uint8_t>(label));
  }
  for (std::size_t i = 0; i < v.labels.size(); ++i) {
    const fs::path p = dir / "frames" / frame_name(i);
    if (!fs::exists(p)) throw dvs::FormatError("missing frame " + p.string());
    dvs::Image img = dvs::read_png(p);
    if (channels != 0 && channels != img.channels) {
      if (channels > img.channels) {
        throw dvs::FormatError(p.string() + " has " + std::to_string(img.channels) + " channels, need " +
                               std::to_string(channels));
      }
      img.channels = channels;
      img.pixels.resize(channels * img.width * img.height);
    }
    v.frames.push_back(std::move(img));
    if (v.frames.back().width != v.frames.front().width || v.frames.back().height != v.frames.front().height) {
      throw dvs::FormatError("frame size differs in " + p.string());
    }
  }
  if (v.frames.empty()) throw dvs::FormatError("video " + id + " has no frames");
  auto first = std::find(v.labels.begin(), v.labels.end(), 1);
  v.crossing = first != v.labels.end();
  v.first_crossing = v.crossing ? static_cast<std::size_t>(first - v.labels.begin()) : 0;
  return v;
}

void write_dataset(const fs::path& root, const std::vector<Video>& videos) {
  fs::create_directories(root);
  std::vector<std::string> ids;
  for (const auto& v : videos) {
    write_video(root, v);
    ids.push_back(v.id);
  }
  write_id_list(root / "videos.txt", ids);
}

std::vector<Video> read_dataset(const fs::path& root, std::size_t channels) {
  if (!fs::is_directory(root)) throw dvs::FormatError("dataset directory not found: " + root.string());
  std::vector<std::string> ids;
  if (fs::exists(root / "videos.txt")) {
    ids = read_id_list(root / "videos.txt");
  } else {
    for (const auto& e : fs::directory_iterator(root)) {
      if (e.is_directory() && fs::exists(e.path() / "labels.csv")) ids.push_back(e.path().filename().string());
    }
    std::sort(ids.begin(), ids.end());
  }
  if (ids.empty()) throw dvs::FormatError("no videos under " + root.string());
  std::vector<Video> out;
  for (const auto& id : ids) out.push_back(read_video(root, id, channels));
  return out;
}

std::vector<std::string> read_id_list(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw dvs::FormatError("cannot open " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(f, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

void write_id_list(const fs::path& path, const std::vector<std::string>& ids) {
  std::ofstream f(path);
  if (!f) throw dvs::FormatError("cannot write " + path.string());
  for (const auto& id : ids) f << id << "\n";
}

void write_splits(const fs::path& root, const std::vector<Video>& videos, const Splits& splits) {
  auto ids = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::string> out;
    for (auto i : idx) out.push_back(videos.at(i).id);
    return out;
  };
  write_id_list(root / "train.txt", ids(splits.train));
  write_id_list(root / "val.txt", ids(splits.val));
  write_id_list(root / "test.txt", ids(splits.test));
}

Splits read_splits(const fs::path& root, const std::vector<Video>& videos) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < videos.size(); ++i) index[videos[i].id] = i;
  auto load = [&](const char* name) {
    std::vector<std::size_t> out;
    for (const auto& id : read_id_list(root / name)) {
      auto it = index.find(id);
      if (it == index.end()) throw dvs::FormatError(std::string(name) + " lists unknown video '" + id + "'");
      out.push_back(it->second);
    }
    return out;
  };
  return {load("train.txt"), load("val.txt"), load("test.txt")};
}

}  // namespace snn::data
