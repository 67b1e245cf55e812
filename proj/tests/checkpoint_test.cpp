#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <limits>
#include <sstream>

#include "dim/checkpoint.hpp"
#include "dim/error.hpp"

using namespace dim;

namespace {

ParamSet sample_params() {
  ParamSet p;
  p.add("a.w", Tensor({2, 2}, {1.5, -0.0, std::numeric_limits<double>::denorm_min(), 1e300}, true));
  p.add("b", Tensor({3}, {0.1, 0.2, 0.30000000000000004}, true));
  return p;
}

std::string serialise(const std::string& config, const ParamSet& p) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(out, config, p);
  return out.str();
}

std::uint64_t read_le(const std::string& s, std::size_t offset, std::size_t bytes) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < bytes; ++i) v |= std::uint64_t(static_cast<unsigned char>(s[offset + i])) << (8 * i);
  return v;
}

}  // namespace

TEST(Checkpoint, ByteLayout) {
  const std::string bytes = serialise("k=v\n", sample_params());
  ASSERT_EQ(std::memcmp(bytes.data(), "DIMCKPT\0", 8), 0);
  EXPECT_EQ(read_le(bytes, 8, 4), 1u);
  EXPECT_EQ(read_le(bytes, 12, 8), 4u);
  EXPECT_EQ(bytes.substr(20, 4), "k=v\n");
  EXPECT_EQ(read_le(bytes, 24, 4), 2u);
  EXPECT_EQ(read_le(bytes, 28, 4), 3u);
  EXPECT_EQ(bytes.substr(32, 3), "a.w");
  EXPECT_EQ(read_le(bytes, 35, 4), 2u);
  EXPECT_EQ(read_le(bytes, 39, 8), 2u);
  EXPECT_EQ(read_le(bytes, 47, 8), 2u);
  EXPECT_EQ(std::bit_cast<double>(read_le(bytes, 55, 8)), 1.5);
  EXPECT_EQ(read_le(bytes, 63, 8), std::bit_cast<std::uint64_t>(-0.0));
  const std::size_t expected = 8 + 4 + 8 + 4 + 4 + (4 + 3 + 4 + 16 + 32) + (4 + 1 + 4 + 8 + 24);
  EXPECT_EQ(bytes.size(), expected);
}

TEST(Checkpoint, BitExactRoundTrip) {
  const ParamSet p = sample_params();
  const std::string bytes = serialise("seed=1\n", p);
  std::istringstream in(bytes, std::ios::binary);
  const Checkpoint ck = read_checkpoint(in);
  EXPECT_EQ(ck.config, "seed=1\n");
  ASSERT_EQ(ck.tensors.size(), 2u);
  ParamSet target;
  target.add("a.w", Tensor::zeros({2, 2}, true));
  target.add("b", Tensor::zeros({3}, true));
  restore_params(ck, target);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto src = p.entries()[i].tensor.data();
    const auto dst = target.entries()[i].tensor.data();
    for (std::size_t k = 0; k < src.size(); ++k)
      EXPECT_EQ(std::bit_cast<std::uint64_t>(src[k]), std::bit_cast<std::uint64_t>(dst[k]));
  }
  EXPECT_EQ(serialise("seed=1\n", target), bytes);
}

TEST(Checkpoint, RejectsCorruptInput) {
  const std::string bytes = serialise("", sample_params());
  auto read = [](const std::string& s) {
    std::istringstream in(s, std::ios::binary);
    return read_checkpoint(in);
  };
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(read(bad_magic), FormatError);
  std::string bad_version = bytes;
  bad_version[8] = 7;
  EXPECT_THROW(read(bad_version), FormatError);
  EXPECT_THROW(read(bytes.substr(0, bytes.size() - 3)), FormatError);
  EXPECT_THROW(read(bytes.substr(0, 10)), FormatError);
  EXPECT_THROW(read_checkpoint(std::filesystem::path("/nonexistent/ckpt")), DataError);
}

TEST(Checkpoint, RestoreReportsMismatches) {
  std::istringstream in(serialise("", sample_params()), std::ios::binary);
  const Checkpoint ck = read_checkpoint(in);
  ParamSet wrong_shape;
  wrong_shape.add("a.w", Tensor::zeros({2, 3}, true));
  wrong_shape.add("b", Tensor::zeros({3}, true));
  try {
    restore_params(ck, wrong_shape);
    FAIL();
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("a.w"), std::string::npos);
    EXPECT_NE(msg.find("[2x3]"), std::string::npos);
    EXPECT_NE(msg.find("[2x2]"), std::string::npos);
  }
  ParamSet missing;
  missing.add("c", Tensor::zeros({1}, true));
  EXPECT_THROW(restore_params(ck, missing), FormatError);
}
