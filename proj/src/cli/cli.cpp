#include "snn/cli/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "snn/data/clips.hpp"
#include "snn/data/dataset_io.hpp"
#include "snn/data/dvs_encode.hpp"
#include "snn/data/kv_config.hpp"
#include "snn/data/train.hpp"
#include "snn/dvs/events.hpp"
#include "snn/dvs/frames.hpp"
#include "snn/energy/profiler.hpp"
#include "snn/layers/checkpoint.hpp"

namespace snn::cli {
namespace fs = std::filesystem;
using data::KeyValues;

namespace {

std::string to_str(const std::string& v) { return v; }
std::string to_str(bool v) { return v ? "true" : "false"; }
std::string to_str(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}
template <typename I>
  requires std::is_integral_v<I>
std::string to_str(I v) {
  return std::to_string(v);
}

/// Binds flags to variables and remembers a config key for each, so config
/// files can fill unset flags and the resolved values can be snapshotted.
class Registry {
 public:
  explicit Registry(CLI::App* app) : app_(app) {}

  template <typename T>
  CLI::Option* add(const std::string& flag, const std::string& key, T& var, const std::string& help) {
    CLI::Option* o = app_->add_option(flag, var, help)->capture_default_str();
    remember(key, o, [&var] { return to_str(var); });
    return o;
  }
  CLI::Option* add_flag(const std::string& flag, const std::string& key, bool& var, const std::string& help) {
    CLI::Option* o = app_->add_flag(flag, var, help);
    remember(key, o, [&var] { return to_str(var); });
    return o;
  }

  /// Values from `kv` for flags that were not given on the command line.
  void apply(const KeyValues& kv) {
    for (const auto& [key, value] : kv) {
      auto it = by_key_.find(key);
      if (it == by_key_.end()) throw UsageError("unknown config key '" + key + "'");
      CLI::Option* o = it->second;
      if (o->count() > 0) continue;
      o->add_result(value);
      try {
        o->run_callback();
      } catch (const CLI::ParseError& e) {
        throw UsageError("config key '" + key + "': " + e.what());
      }
    }
  }

  KeyValues snapshot() const {
    KeyValues kv;
    for (const auto& [key, get] : getters_) kv[key] = get();
    return kv;
  }

 private:
  void remember(const std::string& key, CLI::Option* o, std::function<std::string()> get) {
    by_key_[key] = o;
    getters_.emplace_back(key, std::move(get));
  }
  CLI::App* app_;
  std::map<std::string, CLI::Option*> by_key_;
  std::vector<std::pair<std::string, std::function<std::string()>>> getters_;
};

// ---------------------------------------------------------------------------
// Shared experiment options

struct DvsOptions {
  double fps = 30.0;
  double threshold = 0.3;
  int substeps = 16;
  double log_eps = 1e-3;

  void add(Registry& r) {
    r.add("--fps", "fps", fps, "Frame rate of the source videos");
    r.add("--threshold", "dvs_threshold", threshold, "Log-intensity contrast threshold");
    r.add("--substeps", "dvs_substeps", substeps, "Interpolation points between frames");
    r.add("--log-eps", "dvs_log_eps", log_eps, "Offset added before the logarithm");
  }
  dvs::EmulatorConfig emulator() const {
    dvs::EmulatorConfig c{threshold, substeps, log_eps};
    c.validate();
    return c;
  }
};

struct ExperimentOptions {
  std::string data;
  std::string variant = "sps_r18t";
  std::string modality = "dvs";
  std::string task = "detect";
  std::string preset = "mini";
  std::size_t horizon = 150;
  std::size_t clip_len = 9;
  std::size_t overlap = 8;
  std::size_t repeat = 1;
  std::uint64_t seed = 0;
  bool deterministic = false;
  double test_fraction = 0.15;
  double val_fraction = 0.15;
  DvsOptions dvs;

  void add(Registry& r, bool data_required) {
    auto* d = r.add("--data", "data", data, "Dataset root");
    if (data_required) d->required();
    r.add("--variant", "variant", variant, "sp_r18, sps_r18, sps_r18t or pt_analog")
        ->check(CLI::IsMember({"sp_r18", "sps_r18", "sps_r18t", "pt_analog"}));
    r.add("--modality", "modality", modality, "rgb or dvs")->check(CLI::IsMember({"rgb", "dvs"}));
    r.add("--task", "task", task, "detect or predict")->check(CLI::IsMember({"detect", "predict"}));
    r.add("--preset", "preset", preset, "Network size: mini or resnet18")
        ->check(CLI::IsMember({"mini", "resnet18"}));
    r.add("--horizon", "horizon", horizon, "Prediction horizon in frames");
    r.add("--clip-len", "clip_len", clip_len, "Frames per clip");
    r.add("--overlap", "overlap", overlap, "Frames shared by consecutive clips");
    r.add("--repeat-frames", "repeat_frames", repeat, "Times each frame is repeated along T");
    r.add("--seed", "seed", seed, "Seed for initialization, shuffling and sampling");
    r.add_flag("--deterministic", "deterministic", deterministic,
               "Require bit-exact reruns (always the case: execution is single-threaded)");
    r.add("--test-fraction", "test_fraction", test_fraction, "Test share of videos when no manifests exist");
    r.add("--val-fraction", "val_fraction_of_remainder", val_fraction, "Validation share of the remainder");
    dvs.add(r);
  }

  std::size_t channels() const { return modality == "dvs" ? 2 : 1; }
  std::size_t timesteps() const { return clip_len * repeat; }

  layers::NetworkConfig network(std::size_t h, std::size_t w) const {
    layers::NetworkConfig c = preset == "resnet18" ? layers::NetworkConfig::resnet18() : layers::NetworkConfig::mini();
    c.analog_mode = variant == "pt_analog";
    c.variant = c.analog_mode ? layers::Variant::sps_r18t : layers::parse_variant(variant);
    c.in_channels = channels();
    c.timesteps = timesteps();
    c.input_h = h;
    c.input_w = w;
    c.seed = seed;
    c.validate();
    return c;
  }
};

std::vector<data::Video> load_videos(const ExperimentOptions& o) {
  std::vector<data::Video> videos = data::read_dataset(o.data, o.modality == "dvs" ? 0 : 1);
  const std::size_t ch = videos.front().frames.front().channels;
  if (o.modality == "rgb") return videos;
  if (ch == 1) {
    const auto emu = o.dvs.emulator();
    for (auto& v : videos) v = data::to_dvs_video(v, o.dvs.fps, emu);
    return videos;
  }
  // Already event frames; keep the positive/negative planes.
  return data::read_dataset(o.data, 2);
}

data::Splits load_splits(const ExperimentOptions& o, const std::vector<data::Video>& videos) {
  if (fs::exists(fs::path(o.data) / "train.txt")) return data::read_splits(o.data, videos);
  return data::split_videos(videos, {o.test_fraction, o.val_fraction, o.seed});
}

std::vector<data::ClipRef> make_clips(const ExperimentOptions& o, const std::vector<data::Video>& videos,
                                      const std::vector<std::size_t>& which, std::uint64_t salt) {
  if (o.task == "detect") return data::detection_clips(videos, which, o.clip_len, o.overlap);
  return data::label_prediction(videos, which, o.horizon, o.clip_len, o.overlap, o.seed + salt);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw dvs::FormatError("cannot write " + path.string());
  f << text;
}

KeyValues prefixed(const KeyValues& kv, const std::string& prefix) {
  KeyValues out;
  for (const auto& [k, v] : kv) out[prefix + k] = v;
  return out;
}

KeyValues unprefixed(const std::map<std::string, std::string>& kv, const std::string& prefix) {
  KeyValues out;
  for (const auto& [k, v] : kv) {
    if (k.rfind(prefix, 0) == 0) out[k.substr(prefix.size())] = v;
  }
  return out;
}

std::string metrics_text(const data::EvalMetrics& m, const std::string& prefix) {
  KeyValues kv{{prefix + "auroc", to_str(m.auroc)},
               {prefix + "f_score", to_str(m.f_score)},
               {prefix + "loss", to_str(m.loss)},
               {prefix + "clips", to_str(m.clips)}};
  return data::format_kv(kv);
}

// ---------------------------------------------------------------------------
// Commands

struct GenDataCmd {
  std::string out, config;
  std::size_t videos = 20;
  std::uint64_t seed = 0;
  data::SceneConfig scene;
  std::string weather = "none";
  double test_fraction = 0.15, val_fraction = 0.15;

  void add(Registry& r) {
    r.add("--out", "out", out, "Output dataset root")->required();
    r.add("--videos", "videos", videos, "Number of videos");
    r.add("--seed", "seed", seed, "Generator seed");
    r.add("--frames", "frames", scene.frames, "Frames per video");
    r.add("--width", "width", scene.width, "Frame width");
    r.add("--height", "height", scene.height, "Frame height");
    r.add("--fps", "fps", scene.fps, "Frame rate");
    r.add("--speed", "speed", scene.speed, "Walker speed while crossing, px/frame");
    r.add("--band-top", "band_top", scene.band_top, "First row of the road band");
    r.add("--band-width", "band_width", scene.band_width, "Rows in the road band");
    r.add("--crossing-prob", "crossing_probability", scene.crossing_probability, "Share of crossing videos");
    r.add("--weather", "weather", weather, "none, rain_streaks or fog_alpha")
        ->check(CLI::IsMember({"none", "rain_streaks", "fog_alpha"}));
    r.add("--weather-intensity", "weather_intensity", scene.weather_intensity, "Noise strength in [0, 1]");
    r.add("--test-fraction", "test_fraction", test_fraction, "Test share of videos");
    r.add("--val-fraction", "val_fraction_of_remainder", val_fraction, "Validation share of the remainder");
  }

  int run(const KeyValues& snapshot) {
    scene.weather = data::parse_weather(weather);
    if (videos == 0) throw UsageError("--videos must be >= 1");
    const auto vids = data::gen_synthetic_dataset(scene, videos, seed);
    data::write_dataset(out, vids);
    data::write_splits(out, vids, data::split_videos(vids, {test_fraction, val_fraction, seed}));
    data::write_kv_file(fs::path(out) / "gen-data.config", snapshot);
    std::size_t crossing = 0;
    for (const auto& v : vids) crossing += v.crossing;
    std::cout << "wrote " << vids.size() << " videos (" << crossing << " with a crossing) to " << out << "\n";
    return kExitOk;
  }
};

struct EncodeDvsCmd {
  std::string data, out;
  DvsOptions dvs;

  void add(Registry& r) {
    r.add("--data", "data", data, "Frame dataset root")->required();
    r.add("--out", "out", out, "Output root for events and event frames")->required();
    dvs.add(r);
  }

  int run(const KeyValues& snapshot) {
    const auto emu = dvs.emulator();
    const auto videos = data::read_dataset(data, 1);
    fs::create_directories(out);
    std::vector<data::Video> encoded;
    std::uint64_t total = 0;
    for (const auto& v : videos) {
      const dvs::EventStream events = data::encode_events(v, dvs.fps, emu);
      fs::create_directories(fs::path(out) / v.id);
      dvs::write_events(fs::path(out) / v.id / "events.dvs", events);
      total += events.events.size();
      encoded.push_back(data::to_dvs_video(v, dvs.fps, emu));
    }
    data::write_dataset(out, encoded);
    for (const char* manifest : {"train.txt", "val.txt", "test.txt"}) {
      const fs::path src = fs::path(data) / manifest;
      if (fs::exists(src)) fs::copy_file(src, fs::path(out) / manifest, fs::copy_options::overwrite_existing);
    }
    data::write_kv_file(fs::path(out) / "encode-dvs.config", snapshot);
    std::cout << "encoded " << videos.size() << " videos, " << total << " events, into " << out << "\n";
    return kExitOk;
  }
};

struct TrainCmd {
  ExperimentOptions exp;
  data::TrainConfig tc;
  std::string out;
  bool verbose = false;

  void add(Registry& r) {
    exp.add(r, true);
    r.add("--out", "out", out, "Output directory for checkpoint and metrics")->required();
    r.add("--lr", "initial_learning_rate", tc.lr, "Initial learning rate");
    r.add("--weight-decay", "weight_decay_factor", tc.weight_decay, "AdamW weight decay");
    r.add("--batch-size", "batch_size", tc.batch_size, "Clips per batch");
    r.add("--max-epochs", "maximum_epochs", tc.max_epochs, "Maximum epochs");
    r.add("--patience", "early_stopping", tc.early_stop_patience, "Epochs without validation improvement");
    r.add("--pos-weight", "pos_weight", tc.pos_weight, "Positive-class weight (implies fixed mode)");
    r.add_flag("--verbose", "verbose", verbose, "Print per-epoch progress");
  }

  int run(const KeyValues& snapshot, const CLI::App& app) {
    if (app.count("--pos-weight")) tc.pos_weight_mode = data::PosWeightMode::fixed;
    tc.seed = exp.seed;
    tc.verbose = verbose;
    fs::create_directories(out);
    data::write_kv_file(fs::path(out) / "train.config", snapshot);

    const auto videos = load_videos(exp);
    const auto splits = load_splits(exp, videos);
    const auto train_c = make_clips(exp, videos, splits.train, 1);
    const auto val_c = make_clips(exp, videos, splits.val, 2);
    const auto test_c = make_clips(exp, videos, splits.test, 3);
    const auto& f0 = videos.front().frames.front();
    layers::Network net(exp.network(f0.height, f0.width));
    data::ClipSource source(&videos, exp.clip_len, exp.repeat);

    std::ofstream curve(fs::path(out) / "curve.csv");
    curve << "epoch,train_loss,val_loss,val_auroc\n";
    auto result = data::train(net, source, train_c, val_c, test_c, tc, [&](const data::EpochRecord& e) {
      curve << e.epoch << "," << to_str(e.train_loss) << "," << to_str(e.val_loss) << "," << to_str(e.val_auroc)
            << "\n";
      curve.flush();
    });

    auto meta = prefixed(snapshot, "run.");
    meta["run.pos_weight_used"] = to_str(result.pos_weight);
    layers::save_network(fs::path(out) / "best.ckpt", net, meta);

    KeyValues summary{{"best_epoch", to_str(result.best_epoch)},
                      {"best_val_loss", to_str(result.best_val_loss)},
                      {"epochs_run", to_str(result.curve.size())},
                      {"stopped_early", to_str(result.stopped_early)},
                      {"pos_weight", to_str(result.pos_weight)},
                      {"train_clips", to_str(train_c.size())},
                      {"val_clips", to_str(val_c.size())}};
    write_text(fs::path(out) / "metrics.txt", data::format_kv(summary) + metrics_text(result.test, "test_"));
    std::cout << "best epoch " << result.best_epoch << " of " << result.curve.size() << "; test auroc "
              << to_str(result.test.auroc) << ", f-score " << to_str(result.test.f_score) << "\n";
    return kExitOk;
  }
};

struct EvalCmd {
  std::string checkpoint, data, split = "test", out;

  void add(Registry& r) {
    r.add("--checkpoint", "checkpoint", checkpoint, "Checkpoint written by train")->required();
    r.add("--data", "data", data, "Dataset root (defaults to the one used in training)");
    r.add("--split", "split", split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
    r.add("--out", "out", out, "Output directory (defaults to the checkpoint's)");
  }

  int run(const KeyValues& snapshot) {
    std::map<std::string, std::string> meta;
    auto net = layers::load_network(checkpoint, &meta);
    KeyValues run_kv = unprefixed(meta, "run.");
    if (run_kv.empty()) throw layers::CheckpointError("checkpoint " + checkpoint + " has no training record");

    // Re-resolve the training options from the embedded snapshot.
    CLI::App shadow;
    Registry reg(&shadow);
    TrainCmd replay;
    replay.add(reg);
    const double pos_weight = std::stod(run_kv.at("pos_weight_used"));
    run_kv.erase("pos_weight_used");
    if (!data.empty()) run_kv["data"] = data;
    reg.apply(run_kv);
    const ExperimentOptions& exp = replay.exp;

    const auto videos = load_videos(exp);
    const auto splits = load_splits(exp, videos);
    const auto& which = split == "train" ? splits.train : split == "val" ? splits.val : splits.test;
    const std::uint64_t salt = split == "train" ? 1 : split == "val" ? 2 : 3;
    const auto clips = make_clips(exp, videos, which, salt);
    data::ClipSource source(&videos, exp.clip_len, exp.repeat);
    const auto m = data::evaluate(*net, source, clips, pos_weight, replay.tc.batch_size);

    const fs::path dir = out.empty() ? fs::path(checkpoint).parent_path() : fs::path(out);
    if (!dir.empty()) fs::create_directories(dir);
    write_text(dir / ("eval_" + split + ".txt"), metrics_text(m, split + "_"));
    data::write_kv_file(dir / "eval.config", snapshot);
    std::cout << split << " auroc " << to_str(m.auroc) << ", f-score " << to_str(m.f_score) << ", clips " << m.clips
              << "\n";
    return kExitOk;
  }
};

struct ProfileCmd {
  ExperimentOptions exp;
  std::string mode = "analog", checkpoint, out, format = "text", split = "test";
  std::size_t input_h = 0, input_w = 0, max_clips = 0;
  energy::EnergyModel em;

  void add(Registry& r) {
    r.add("--mode", "mode", mode, "analog or snn")->check(CLI::IsMember({"analog", "snn"}));
    r.add("--checkpoint", "checkpoint", checkpoint, "Trained network (otherwise a freshly initialized one)");
    r.add("--out", "out", out, "Output directory for the report")->required();
    r.add("--format", "format", format, "text, kv or both")->check(CLI::IsMember({"text", "kv", "both"}));
    r.add("--split", "split", split, "Split profiled in snn mode")->check(CLI::IsMember({"train", "val", "test"}));
    r.add("--input-h", "input_h", input_h, "Input height without a dataset (default: preset)");
    r.add("--input-w", "input_w", input_w, "Input width without a dataset (default: preset)");
    r.add("--max-clips", "max_clips", max_clips, "Profile at most this many clips (0 = all)");
    r.add("--e-mac", "e_mac_pj", em.e_mac_pj, "Energy per MAC, pJ");
    r.add("--e-ac", "e_ac_pj", em.e_ac_pj, "Energy per AC, pJ");
    exp.add(r, false);
  }

  int run(const KeyValues& snapshot) {
    em.validate();
    fs::create_directories(out);
    data::write_kv_file(fs::path(out) / "profile-energy.config", snapshot);
    std::unique_ptr<layers::Network> net;
    if (!checkpoint.empty()) net = layers::load_network(checkpoint);

    energy::EnergyReport report;
    if (mode == "analog") {
      if (!net) {
        if (exp.variant != "pt_analog") exp.variant = "pt_analog";
        const auto base = exp.preset == "resnet18" ? layers::NetworkConfig::resnet18() : layers::NetworkConfig::mini();
        net = layers::build_network(exp.network(input_h ? input_h : base.input_h, input_w ? input_w : base.input_w));
      }
      const auto& c = net->config();
      report = energy::count_ops_analog(*net, {exp.timesteps(), 1, c.in_channels, c.input_h, c.input_w}, em);
    } else {
      if (exp.data.empty()) throw UsageError("profile-energy --mode snn needs --data");
      const auto videos = load_videos(exp);
      const auto splits = load_splits(exp, videos);
      const auto& which = split == "train" ? splits.train : split == "val" ? splits.val : splits.test;
      auto clips = make_clips(exp, videos, which, 3);
      if (max_clips && clips.size() > max_clips) clips.resize(max_clips);
      if (!net) {
        const auto& f0 = videos.front().frames.front();
        net = layers::build_network(exp.network(f0.height, f0.width));
      }
      if (net->timesteps() != exp.timesteps() && layers::uses_tebn(net->config().variant)) {
        throw UsageError("network expects " + std::to_string(net->timesteps()) + " timesteps; clips give " +
                         std::to_string(exp.timesteps()));
      }
      data::ClipSource source(&videos, exp.clip_len, exp.repeat);
      report = energy::count_ops_snn(*net, clips.size(), [&](std::size_t i) {
        return source.batch(std::span<const data::ClipRef>(&clips[i], 1));
      }, em);
    }
    if (format != "kv") write_text(fs::path(out) / "energy.txt", report.to_text());
    if (format != "text") write_text(fs::path(out) / "energy.kv", report.to_kv());
    std::cout << report.to_text();
    return kExitOk;
  }
};

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"Spiking network training, DVS emulation and energy profiling"};
  app.name("snn-cli");
  app.require_subcommand(1);
  std::string config;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic street-crossing dataset");
  auto* enc = app.add_subcommand("encode-dvs", "Convert a frame dataset to events and event frames");
  auto* trn = app.add_subcommand("train", "Train a network and write its best checkpoint");
  auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  auto* prf = app.add_subcommand("profile-energy", "Count MAC/AC operations and estimate energy");

  Registry r_gen(gen), r_enc(enc), r_trn(trn), r_evl(evl), r_prf(prf);
  GenDataCmd c_gen;
  EncodeDvsCmd c_enc;
  TrainCmd c_trn;
  EvalCmd c_evl;
  ProfileCmd c_prf;
  c_gen.add(r_gen);
  c_enc.add(r_enc);
  c_trn.add(r_trn);
  c_evl.add(r_evl);
  c_prf.add(r_prf);
  for (auto* sub : {gen, enc, trn, evl, prf}) {
    sub->add_option("--config", config, "key = value file; command-line flags take precedence");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto finish = [&](Registry& reg) {
    if (!config.empty()) reg.apply(data::read_kv_file(config));
    return reg.snapshot();
  };
  if (*gen) return c_gen.run(finish(r_gen));
  if (*enc) return c_enc.run(finish(r_enc));
  if (*trn) return c_trn.run(finish(r_trn), *trn);
  if (*evl) return c_evl.run(finish(r_evl));
  return c_prf.run(finish(r_prf));
}

}  // namespace

int run(int argc, const char* const* argv) {
  try {
    return dispatch(argc, argv);
  } catch (const dvs::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const layers::CheckpointError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::logic_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"snn-cli"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace snn::cli
