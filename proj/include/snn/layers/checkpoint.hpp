#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "snn/layers/network.hpp"

namespace snn::layers {

// Little-endian container:
//   "SSNN" | version u32
//   repeated until EOF:
//     name_len u16 | name bytes | dtype u8 | rank u8 | dims u32 x rank | values
// dtype 0 = f32, 1 = f64, 2 = u8. The optional "meta" record is u8 text of
// key=value lines (the network configuration).

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  std::vector<NamedTensor> tensors;
  std::map<std::string, std::string> meta;
};

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors,
                      const std::map<std::string, std::string>& meta = {});
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies values by name into the model's state; every model tensor must be
/// present with an identical shape.
void load_state(Model& model, const Checkpoint& ckpt);

void save_network(const std::filesystem::path& path, Network& net,
                  const std::map<std::string, std::string>& extra_meta = {});
/// Rebuilds the network from the embedded configuration and loads its state.
std::unique_ptr<Network> load_network(const std::filesystem::path& path,
                                      std::map<std::string, std::string>* meta_out = nullptr);

}  // namespace snn::layers
