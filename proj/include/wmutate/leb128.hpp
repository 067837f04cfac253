#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace wmutate::leb128 {

// Decoders advance `pos` past the encoded value and throw MalformedBinary on
// truncated input, overlong encodings, or unused bits that do not fit the
// target width.
std::uint32_t read_u32(std::span<const std::uint8_t> in, std::size_t& pos);
std::int32_t read_s32(std::span<const std::uint8_t> in, std::size_t& pos);
std::int64_t read_s64(std::span<const std::uint8_t> in, std::size_t& pos);
std::int32_t read_s33(std::span<const std::uint8_t> in, std::size_t& pos);

// Encoders always emit the minimal-length form.
void write_u32(std::vector<std::uint8_t>& out, std::uint32_t value);
void write_u64(std::vector<std::uint8_t>& out, std::uint64_t value);
void write_s32(std::vector<std::uint8_t>& out, std::int32_t value);
void write_s64(std::vector<std::uint8_t>& out, std::int64_t value);

}  // namespace wmutate::leb128
