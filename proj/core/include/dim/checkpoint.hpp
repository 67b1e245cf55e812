#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dim/tensor.hpp"

namespace dim {

/// Binary checkpoint layout (all integers little-endian):
///   magic "DIMCKPT\0" | u32 version | u64 config length | config text |
///   u32 tensor count | per tensor: u32 name length, name, u32 rank,
///   u64 extents[rank], f64 values[numel].
inline constexpr char kCheckpointMagic[8] = {'D', 'I', 'M', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string config;  // key=value lines
  std::vector<NamedTensor> tensors;
};

void write_checkpoint(std::ostream& out, const std::string& config, const ParamSet& params);
void write_checkpoint(const std::filesystem::path& path, const std::string& config, const ParamSet& params);
Checkpoint read_checkpoint(std::istream& in);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint values into same-named parameters. Missing names or
/// shape disagreements throw with the offending name and both shapes.
void restore_params(const Checkpoint& checkpoint, ParamSet& params);

}  // namespace dim
