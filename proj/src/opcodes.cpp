#include "wmutate/opcodes.hpp"

#include <array>

namespace wmutate {
namespace {

ValType letter_type(char c) {
  switch (c) {
    case 'i': return ValType::I32;
    case 'I': return ValType::I64;
    case 'f': return ValType::F32;
    default: return ValType::F64;
  }
}

OpcodeInfo make_info(std::string_view name, ImmKind imm, std::string_view sig) {
  OpcodeInfo out;
  out.name = name;
  out.imm = imm;
  out.valid = true;
  if (sig.empty()) return out;
  out.fixed = true;
  const auto colon = sig.find(':');
  for (std::size_t i = 0; i < colon; ++i) out.pops[out.num_pops++] = letter_type(sig[i]);
  if (colon + 1 < sig.size()) out.push = letter_type(sig[colon + 1]);
  return out;
}

const std::array<OpcodeInfo, 256>& table() {
  static const std::array<OpcodeInfo, 256> t = [] {
    std::array<OpcodeInfo, 256> out{};
#define WMUTATE_INFO(name, byte, text, imm, sig) out[byte] = make_info(text, ImmKind::imm, sig);
    WMUTATE_OPCODES(WMUTATE_INFO)
#undef WMUTATE_INFO
    return out;
  }();
  return t;
}

}  // namespace

std::string_view to_string(ValType t) {
  switch (t) {
    case ValType::I32: return "i32";
    case ValType::I64: return "i64";
    case ValType::F32: return "f32";
    case ValType::F64: return "f64";
  }
  return "?";
}

std::optional<ValType> valtype_from_byte(std::uint8_t b) {
  switch (b) {
    case 0x7F: return ValType::I32;
    case 0x7E: return ValType::I64;
    case 0x7D: return ValType::F32;
    case 0x7C: return ValType::F64;
    default: return std::nullopt;
  }
}

const OpcodeInfo& info(Opcode op) { return table()[static_cast<std::uint8_t>(op)]; }

bool is_mvp_opcode(std::uint8_t byte) { return table()[byte].valid; }

unsigned access_size(Opcode op) {
  switch (op) {
    case Opcode::I32Load8S: case Opcode::I32Load8U: case Opcode::I64Load8S:
    case Opcode::I64Load8U: case Opcode::I32Store8: case Opcode::I64Store8:
      return 1;
    case Opcode::I32Load16S: case Opcode::I32Load16U: case Opcode::I64Load16S:
    case Opcode::I64Load16U: case Opcode::I32Store16: case Opcode::I64Store16:
      return 2;
    case Opcode::I32Load: case Opcode::F32Load: case Opcode::I64Load32S:
    case Opcode::I64Load32U: case Opcode::I32Store: case Opcode::F32Store:
    case Opcode::I64Store32:
      return 4;
    case Opcode::I64Load: case Opcode::F64Load: case Opcode::I64Store: case Opcode::F64Store:
      return 8;
    default:
      return 0;
  }
}

unsigned natural_alignment(Opcode op) {
  switch (access_size(op)) {
    case 1: return 0;
    case 2: return 1;
    case 4: return 2;
    case 8: return 3;
    default: return 0;
  }
}

bool is_load(Opcode op) {
  const auto b = static_cast<std::uint8_t>(op);
  return b >= 0x28 && b <= 0x35;
}

bool is_store(Opcode op) {
  const auto b = static_cast<std::uint8_t>(op);
  return b >= 0x36 && b <= 0x3E;
}

}  // namespace wmutate
