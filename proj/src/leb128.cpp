#include "wmutate/leb128.hpp"

#include "wmutate/errors.hpp"

namespace wmutate::leb128 {
namespace {

std::uint64_t read_unsigned(std::span<const std::uint8_t> in, std::size_t& pos, unsigned bits) {
  const std::size_t start = pos;
  const unsigned max_bytes = (bits + 6) / 7;
  std::uint64_t result = 0;
  unsigned shift = 0;
  for (unsigned i = 0; i < max_bytes; ++i) {
    if (pos >= in.size()) throw MalformedBinary(start, "truncated LEB128");
    const std::uint8_t byte = in[pos++];
    result |= std::uint64_t(byte & 0x7F) << shift;
    if (i == max_bytes - 1) {
      // Remaining high bits of the final byte must be zero.
      const unsigned used = bits - shift;
      if (byte & 0x80) throw MalformedBinary(start, "LEB128 too long");
      if (used < 7 && (byte >> used) != 0) throw MalformedBinary(start, "LEB128 integer too large");
      return result;
    }
    if ((byte & 0x80) == 0) return result;
    shift += 7;
  }
  return result;
}

std::int64_t read_signed(std::span<const std::uint8_t> in, std::size_t& pos, unsigned bits) {
  const std::size_t start = pos;
  const unsigned max_bytes = (bits + 6) / 7;
  std::uint64_t result = 0;
  unsigned shift = 0;
  for (unsigned i = 0; i < max_bytes; ++i) {
    if (pos >= in.size()) throw MalformedBinary(start, "truncated LEB128");
    const std::uint8_t byte = in[pos++];
    result |= std::uint64_t(byte & 0x7F) << shift;
    shift += 7;
    if (i == max_bytes - 1) {
      if (byte & 0x80) throw MalformedBinary(start, "LEB128 too long");
      // The unused high bits must be a sign extension of the last used bit.
      const unsigned used = bits - (shift - 7);
      if (used < 7) {
        const int sign = (byte >> (used - 1)) & 1;
        const std::uint8_t rest = std::uint8_t(byte & 0x7F) >> used;
        const std::uint8_t expect = sign ? std::uint8_t(0x7F >> used) : 0;
        if (rest != expect) throw MalformedBinary(start, "LEB128 integer too large");
      }
    }
    if ((byte & 0x80) == 0) {
      if (shift < 64 && (byte & 0x40)) result |= ~std::uint64_t{0} << shift;
      return static_cast<std::int64_t>(result);
    }
  }
  return static_cast<std::int64_t>(result);
}

}  // namespace

std::uint32_t read_u32(std::span<const std::uint8_t> in, std::size_t& pos) {
  return static_cast<std::uint32_t>(read_unsigned(in, pos, 32));
}

std::int32_t read_s32(std::span<const std::uint8_t> in, std::size_t& pos) {
  return static_cast<std::int32_t>(read_signed(in, pos, 32));
}

std::int64_t read_s64(std::span<const std::uint8_t> in, std::size_t& pos) {
  return read_signed(in, pos, 64);
}

std::int32_t read_s33(std::span<const std::uint8_t> in, std::size_t& pos) {
  return static_cast<std::int32_t>(read_signed(in, pos, 33));
}

void write_u64(std::vector<std::uint8_t>& out, std::uint64_t value) {
  do {
    std::uint8_t byte = value & 0x7F;
    value >>= 7;
    if (value != 0) byte |= 0x80;
    out.push_back(byte);
  } while (value != 0);
}

void write_u32(std::vector<std::uint8_t>& out, std::uint32_t value) { write_u64(out, value); }

void write_s64(std::vector<std::uint8_t>& out, std::int64_t value) {
  bool more = true;
  while (more) {
    std::uint8_t byte = value & 0x7F;
    value >>= 7;  // arithmetic shift
    if ((value == 0 && (byte & 0x40) == 0) || (value == -1 && (byte & 0x40) != 0)) {
      more = false;
    } else {
      byte |= 0x80;
    }
    out.push_back(byte);
  }
}

void write_s32(std::vector<std::uint8_t>& out, std::int32_t value) { write_s64(out, value); }

}  // namespace wmutate::leb128
