#include <gtest/gtest.h>

#include "wmutate/errors.hpp"
#include "wmutate/leb128.hpp"

namespace {

using namespace wmutate;
using B = std::vector<std::uint8_t>;

// Reference encodings produced by an independent encoder.
struct U32Case {
  std::uint32_t value;
  B bytes;
};
struct S64Case {
  std::int64_t value;
  B bytes;
};

const std::vector<U32Case> kU32 = {
    {0, {0x00}},
    {1, {0x01}},
    {127, {0x7F}},
    {128, {0x80, 0x01}},
    {255, {0xFF, 0x01}},
    {300, {0xAC, 0x02}},
    {16384, {0x80, 0x80, 0x01}},
    {624485, {0xE5, 0x8E, 0x26}},
    {4294967295u, {0xFF, 0xFF, 0xFF, 0xFF, 0x0F}},
};

const std::vector<S64Case> kS32 = {
    {0, {0x00}},
    {1, {0x01}},
    {-1, {0x7F}},
    {63, {0x3F}},
    {64, {0xC0, 0x00}},
    {-64, {0x40}},
    {-65, {0xBF, 0x7F}},
    {-123456, {0xC0, 0xBB, 0x78}},
    {2147483647, {0xFF, 0xFF, 0xFF, 0xFF, 0x07}},
    {-2147483648LL, {0x80, 0x80, 0x80, 0x80, 0x78}},
};

const std::vector<S64Case> kS64 = {
    {9223372036854775807LL, {0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0x00}},
    {INT64_MIN, {0x80, 0x80, 0x80, 0x80, 0x80, 0x80, 0x80, 0x80, 0x80, 0x7F}},
    {1099511627776LL, {0x80, 0x80, 0x80, 0x80, 0x80, 0x20}},
    {-1099511627776LL, {0x80, 0x80, 0x80, 0x80, 0x80, 0x60}},
};

TEST(Leb128, UnsignedMatchesReference) {
  for (const auto& c : kU32) {
    B out;
    leb128::write_u32(out, c.value);
    EXPECT_EQ(out, c.bytes) << c.value;
    std::size_t pos = 0;
    EXPECT_EQ(leb128::read_u32(c.bytes, pos), c.value);
    EXPECT_EQ(pos, c.bytes.size());
  }
}

TEST(Leb128, Signed32MatchesReference) {
  for (const auto& c : kS32) {
    B out;
    leb128::write_s32(out, static_cast<std::int32_t>(c.value));
    EXPECT_EQ(out, c.bytes) << c.value;
    std::size_t pos = 0;
    EXPECT_EQ(leb128::read_s32(c.bytes, pos), c.value);
  }
}

TEST(Leb128, Signed64MatchesReference) {
  for (const auto& c : kS64) {
    B out;
    leb128::write_s64(out, c.value);
    EXPECT_EQ(out, c.bytes) << c.value;
    std::size_t pos = 0;
    EXPECT_EQ(leb128::read_s64(c.bytes, pos), c.value);
  }
}

TEST(Leb128, RejectsTruncatedInput) {
  const B in{0x80, 0x80};
  std::size_t pos = 0;
  EXPECT_THROW(leb128::read_u32(in, pos), MalformedBinary);
}

TEST(Leb128, RejectsOverlongU32) {
  const B in{0x80, 0x80, 0x80, 0x80, 0x80, 0x00};
  std::size_t pos = 0;
  EXPECT_THROW(leb128::read_u32(in, pos), MalformedBinary);
}

TEST(Leb128, RejectsUnusedBitsInLastByte) {
  const B in{0xFF, 0xFF, 0xFF, 0xFF, 0x1F};
  std::size_t pos = 0;
  EXPECT_THROW(leb128::read_u32(in, pos), MalformedBinary);
  const B s{0xFF, 0xFF, 0xFF, 0xFF, 0x4F};
  pos = 0;
  EXPECT_THROW(leb128::read_s32(s, pos), MalformedBinary);
}

TEST(Leb128, S33CoversBlockTypeIndices) {
  const B in{0x40};
  std::size_t pos = 0;
  EXPECT_EQ(leb128::read_s33(in, pos), -64);
}

TEST(Leb128, RoundTripProperty) {
  std::uint64_t x = 0x9E3779B97F4A7C15ULL;
  for (int i = 0; i < 20000; ++i) {
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    const auto shift = static_cast<unsigned>(x & 63);
    const std::int64_t v = static_cast<std::int64_t>(x) >> shift;
    B out;
    leb128::write_s64(out, v);
    std::size_t pos = 0;
    ASSERT_EQ(leb128::read_s64(out, pos), v);
    B u;
    leb128::write_u32(u, static_cast<std::uint32_t>(x >> shift));
    pos = 0;
    ASSERT_EQ(leb128::read_u32(u, pos), static_cast<std::uint32_t>(x >> shift));
    ASSERT_EQ(pos, u.size());
  }
}

}  // namespace
