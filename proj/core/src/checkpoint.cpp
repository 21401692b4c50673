#include "lmpgan/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "lmpgan/errors.hpp"

namespace lmpgan::nn {

namespace {

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& in, const std::string& path) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw DataError("checkpoint '" + path + "' is truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void write_checkpoint(const std::string& path, const std::string& header,
                      const std::vector<const Tensor*>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint '" + path + "' for writing");
  out.write(kCheckpointMagic, 8);
  write_u64(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  write_u64(out, tensors.size());
  for (const Tensor* t : tensors) {
    write_u64(out, t->rank());
    for (std::size_t d : t->shape()) write_u64(out, d);
    out.write(reinterpret_cast<const char*>(t->data()),
              static_cast<std::streamsize>(t->size() * sizeof(double)));
  }
  if (!out) throw DataError("write to checkpoint '" + path + "' failed");
}

CheckpointData read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw DataError("'" + path + "' is not a recognized checkpoint (bad magic/version)");
  }
  CheckpointData data;
  const std::uint64_t header_len = read_u64(in, path);
  data.header.resize(header_len);
  in.read(data.header.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw DataError("checkpoint '" + path + "' is truncated");
  const std::uint64_t count = read_u64(in, path);
  data.tensors.reserve(count);
  for (std::uint64_t t = 0; t < count; ++t) {
    const std::uint64_t rank = read_u64(in, path);
    if (rank > 8) throw DataError("checkpoint '" + path + "' has an implausible tensor rank");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(read_u64(in, path));
    Tensor tensor(shape);
    in.read(reinterpret_cast<char*>(tensor.data()),
            static_cast<std::streamsize>(tensor.size() * sizeof(double)));
    if (!in) throw DataError("checkpoint '" + path + "' is truncated");
    data.tensors.push_back(std::move(tensor));
  }
  return data;
}

std::vector<const Tensor*> state_tensors(const NetworkState& state) {
  std::vector<const Tensor*> out;
  for (const auto& layer : state.layers) {
    for (const Tensor* t : {&layer.weights, &layer.bias, &layer.gamma, &layer.beta,
                            &layer.running_mean, &layer.running_var}) {
      if (!t->empty()) out.push_back(t);
    }
  }
  return out;
}

std::vector<Tensor*> state_tensors(NetworkState& state) {
  std::vector<Tensor*> out;
  for (auto& layer : state.layers) {
    for (Tensor* t : {&layer.weights, &layer.bias, &layer.gamma, &layer.beta,
                      &layer.running_mean, &layer.running_var}) {
      if (!t->empty()) out.push_back(t);
    }
  }
  return out;
}

}  // namespace lmpgan::nn
