#pragma once

#include <string>
#include <vector>

#include "lmpgan/network.hpp"
#include "lmpgan/tensor.hpp"

namespace lmpgan::nn {

// Binary checkpoint layout:
//   magic "GANLMP01" (8 bytes)
//   u64 header length, then that many bytes of UTF-8 header text
//   u64 tensor count
//   per tensor: u64 rank, rank x u64 dims, row-major IEEE-754 doubles
// All integers and doubles little-endian. The reader rejects any other
// magic string.
inline constexpr char kCheckpointMagic[9] = "GANLMP01";

void write_checkpoint(const std::string& path, const std::string& header,
                      const std::vector<const Tensor*>& tensors);

struct CheckpointData {
  std::string header;
  std::vector<Tensor> tensors;
};

CheckpointData read_checkpoint(const std::string& path);

// State tensors in a fixed serialization order (weights, bias, gamma,
// beta, running mean/var per layer, empties skipped).
std::vector<const Tensor*> state_tensors(const NetworkState& state);
std::vector<Tensor*> state_tensors(NetworkState& state);

}  // namespace lmpgan::nn
