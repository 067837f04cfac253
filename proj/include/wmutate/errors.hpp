#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace wmutate {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the decoder; `offset` is the byte position where decoding failed.
class MalformedBinary : public Error {
 public:
  MalformedBinary(std::size_t offset, const std::string& reason)
      : Error("malformed binary at offset " + std::to_string(offset) + ": " + reason),
        offset_(offset),
        reason_(reason) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t offset_;
  std::string reason_;
};

/// A post-MVP opcode, section or type was encountered.
class UnsupportedFeature : public Error {
 public:
  UnsupportedFeature(std::uint32_t opcode, const std::string& what)
      : Error("unsupported feature (0x" + hex(opcode) + "): " + what), opcode_(opcode) {}

  std::uint32_t opcode() const noexcept { return opcode_; }

 private:
  static std::string hex(std::uint32_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    do {
      out.insert(out.begin(), digits[v & 0xF]);
      v >>= 4;
    } while (v != 0);
    return out;
  }
  std::uint32_t opcode_;
};

class EncodingOverflow : public Error {
 public:
  using Error::Error;
};

}  // namespace wmutate
