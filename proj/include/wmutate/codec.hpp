#pragma once

#include <span>

#include "wmutate/module.hpp"

namespace wmutate {

inline constexpr std::uint8_t kWasmHeader[8] = {0x00, 0x61, 0x73, 0x6D, 0x01, 0x00, 0x00, 0x00};

/// Decodes a core MVP binary. Throws MalformedBinary for structural errors and
/// out-of-range section-level indices, UnsupportedFeature for post-MVP
/// encodings. Function bodies are fully decoded but only type-checked by
/// static_validate.
WasmModule parse_module(std::span<const std::uint8_t> bytes);

/// Canonical encoding: known sections in id order, empty sections omitted,
/// minimal LEB128 everywhere, adjacent locals of the same type merged.
Bytes encode_module(const WasmModule& m);

}  // namespace wmutate
