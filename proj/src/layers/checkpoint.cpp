#include "snn/layers/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace snn::layers {
namespace {

constexpr char kMagic[4] = {'S', 'S', 'N', 'N'};
constexpr std::uint8_t kF32 = 0, kF64 = 1, kU8 = 2;
constexpr const char* kMetaName = "meta";

template <typename U>
void put(std::string& out, U value) {
  using Raw = std::conditional_t<sizeof(U) == 8, std::uint64_t,
              std::conditional_t<sizeof(U) == 4, std::uint32_t,
              std::conditional_t<sizeof(U) == 2, std::uint16_t, std::uint8_t>>>;
  const auto raw = std::bit_cast<Raw>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((raw >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t offset() const { return pos_; }

  template <typename U>
  U get(const char* what) {
    using Raw = std::conditional_t<sizeof(U) == 8, std::uint64_t,
                std::conditional_t<sizeof(U) == 4, std::uint32_t,
                std::conditional_t<sizeof(U) == 2, std::uint16_t, std::uint8_t>>>;
    need(sizeof(U), what);
    Raw raw = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      raw |= static_cast<Raw>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return std::bit_cast<U>(raw);
  }

  std::string take(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError("checkpoint truncated reading " + std::string(what) + " at byte offset " +
                            std::to_string(pos_));
    }
  }
  std::string bytes_;
  std::size_t pos_ = 0;
};

std::string meta_text(const std::map<std::string, std::string>& meta) {
  std::string s;
  for (const auto& [k, v] : meta) s += k + "=" + v + "\n";
  return s;
}

std::map<std::string, std::string> parse_meta(const std::string& text) {
  std::map<std::string, std::string> meta;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return meta;
}

void put_header(std::string& out, const std::string& name, std::uint8_t dtype, const Shape& dims) {
  if (name.size() > 0xFFFF) throw CheckpointError("tensor name too long: " + name);
  if (dims.size() > 0xFF) throw CheckpointError("tensor rank too large: " + name);
  put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
  out += name;
  put<std::uint8_t>(out, dtype);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(dims.size()));
  for (auto d : dims) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors,
                      const std::map<std::string, std::string>& meta) {
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  if (!meta.empty()) {
    const std::string text = meta_text(meta);
    put_header(out, kMetaName, kU8, {text.size()});
    out += text;
  }
  for (const auto& nt : tensors) {
    put_header(out, nt.name, kF32, nt.tensor.shape());
    for (float v : nt.tensor.data()) put<float>(out, v);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw CheckpointError("failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path.string());
  Reader r(std::string(std::istreambuf_iterator<char>(f), {}));
  if (r.take(4, "magic") != std::string(kMagic, 4)) {
    throw CheckpointError("bad checkpoint magic at byte offset 0 in " + path.string());
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                          " at byte offset 4");
  }
  Checkpoint ckpt;
  while (!r.done()) {
    const std::size_t record_at = r.offset();
    const auto name_len = r.get<std::uint16_t>("name length");
    std::string name = r.take(name_len, "name");
    const auto dtype = r.get<std::uint8_t>("dtype");
    const auto rank = r.get<std::uint8_t>("rank");
    Shape dims;
    for (std::uint8_t i = 0; i < rank; ++i) dims.push_back(r.get<std::uint32_t>("dims"));
    const std::size_t n = shape_numel(dims);
    if (dtype == kU8) {
      std::string bytes = r.take(n, "values");
      if (name == kMetaName) ckpt.meta = parse_meta(bytes);
      continue;
    }
    std::vector<float> values(n);
    if (dtype == kF32) {
      for (auto& v : values) v = r.get<float>("values");
    } else if (dtype == kF64) {
      for (auto& v : values) v = static_cast<float>(r.get<double>("values"));
    } else {
      throw CheckpointError("unknown dtype tag " + std::to_string(dtype) + " in record at byte offset " +
                            std::to_string(record_at));
    }
    ckpt.tensors.push_back({std::move(name), Tensor(dims, std::move(values))});
  }
  return ckpt;
}

void load_state(Model& model, const Checkpoint& ckpt) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& nt : ckpt.tensors) by_name[nt.name] = &nt.tensor;
  for (auto& nt : model.state()) {
    auto it = by_name.find(nt.name);
    if (it == by_name.end()) throw CheckpointError("checkpoint is missing tensor '" + nt.name + "'");
    const Tensor& src = *it->second;
    if (src.shape() != nt.tensor.shape()) {
      throw CheckpointError("checkpoint tensor '" + nt.name + "' has shape " + shape_str(src.shape()) +
                            ", model expects " + shape_str(nt.tensor.shape()));
    }
    std::copy(src.data().begin(), src.data().end(), nt.tensor.data().begin());
  }
}

void save_network(const std::filesystem::path& path, Network& net,
                  const std::map<std::string, std::string>& extra_meta) {
  auto meta = extra_meta;
  for (const auto& [k, v] : net.config().to_kv()) meta["network." + k] = v;
  write_checkpoint(path, net.state(), meta);
}

std::unique_ptr<Network> load_network(const std::filesystem::path& path,
                                      std::map<std::string, std::string>* meta_out) {
  Checkpoint ckpt = read_checkpoint(path);
  std::map<std::string, std::string> net_kv;
  for (const auto& [k, v] : ckpt.meta) {
    if (k.rfind("network.", 0) == 0) net_kv[k.substr(8)] = v;
  }
  if (net_kv.empty()) throw CheckpointError("checkpoint " + path.string() + " has no network config");
  auto net = build_network(NetworkConfig::from_kv(net_kv));
  load_state(*net, ckpt);
  if (meta_out) *meta_out = ckpt.meta;
  return net;
}

}  // namespace snn::layers
