#include "dim/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "dim/error.hpp"

namespace dim {

namespace {

template <typename T>
void put(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T take(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw FormatError("checkpoint: truncated file");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

std::string take_string(std::istream& in, std::uint64_t length) {
  if (length > (std::uint64_t{1} << 32)) throw FormatError("checkpoint: implausible string length");
  std::string s(length, '\0');
  if (length && !in.read(s.data(), static_cast<std::streamsize>(length))) {
    throw FormatError("checkpoint: truncated file");
  }
  return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const std::string& config, const ParamSet& params) {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, config.size());
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, tensor] : params.entries()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
    for (std::size_t e : tensor.shape()) put<std::uint64_t>(out, e);
    for (double v : tensor.data()) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw DataError("checkpoint: write failed");
}

void write_checkpoint(const std::filesystem::path& path, const std::string& config, const ParamSet& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  write_checkpoint(out, config, params);
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[sizeof(kCheckpointMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw FormatError("checkpoint: bad magic");
  }
  const auto version = take<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported format version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.config = take_string(in, take<std::uint64_t>(in));
  const auto count = take<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = take_string(in, take<std::uint32_t>(in));
    const auto rank = take<std::uint32_t>(in);
    if (rank == 0 || rank > 8) throw FormatError("checkpoint: tensor " + name + " has invalid rank");
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(take<std::uint64_t>(in));
    std::vector<double> values(shape_numel(shape));
    for (double& v : values) v = std::bit_cast<double>(take<std::uint64_t>(in));
    ck.tensors.push_back({std::move(name), Tensor(std::move(shape), std::move(values))});
  }
  return ck;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

void restore_params(const Checkpoint& checkpoint, ParamSet& params) {
  for (auto& [name, tensor] : params.entries()) {
    const NamedTensor* match = nullptr;
    for (const auto& t : checkpoint.tensors) {
      if (t.name == name) match = &t;
    }
    if (!match) throw FormatError("checkpoint has no tensor named " + name);
    if (match->tensor.shape() != tensor.shape()) {
      throw DimensionError("checkpoint tensor " + name + " has shape " + shape_string(match->tensor.shape()) +
                           ", model expects " + shape_string(tensor.shape()));
    }
    auto dst = tensor.mutable_data();
    std::copy(match->tensor.data().begin(), match->tensor.data().end(), dst.begin());
  }
}

}  // namespace dim
