#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace wmutate {

enum class ValType : std::uint8_t { I32 = 0x7F, I64 = 0x7E, F32 = 0x7D, F64 = 0x7C };

std::string_view to_string(ValType t);
std::optional<ValType> valtype_from_byte(std::uint8_t b);
inline constexpr ValType kAllValTypes[] = {ValType::I32, ValType::I64, ValType::F32, ValType::F64};

/// Immediate layout carried by an opcode.
enum class ImmKind : std::uint8_t {
  None,
  BlockType,
  Label,
  BrTable,
  Func,
  CallIndirect,
  Local,
  Global,
  MemArg,
  MemIndex,
  I32,
  I64,
  F32,
  F64,
};

// X(enum name, byte, text, immediate kind, signature)
//
// Signatures use one letter per value type (i, I, f, F for i32, i64, f32,
// f64): "pops:push". An empty signature marks opcodes whose stack effect
// depends on context (control, variables, calls, select, drop).
#define WMUTATE_OPCODES(X)                                      \
  X(Unreachable, 0x00, "unreachable", None, "")                 \
  X(Nop, 0x01, "nop", None, ":")                                \
  X(Block, 0x02, "block", BlockType, "")                        \
  X(Loop, 0x03, "loop", BlockType, "")                          \
  X(If, 0x04, "if", BlockType, "")                              \
  X(Else, 0x05, "else", None, "")                               \
  X(End, 0x0B, "end", None, "")                                 \
  X(Br, 0x0C, "br", Label, "")                                  \
  X(BrIf, 0x0D, "br_if", Label, "")                             \
  X(BrTable, 0x0E, "br_table", BrTable, "")                     \
  X(Return, 0x0F, "return", None, "")                           \
  X(Call, 0x10, "call", Func, "")                               \
  X(CallIndirect, 0x11, "call_indirect", CallIndirect, "")      \
  X(Drop, 0x1A, "drop", None, "")                               \
  X(Select, 0x1B, "select", None, "")                           \
  X(LocalGet, 0x20, "local.get", Local, "")                     \
  X(LocalSet, 0x21, "local.set", Local, "")                     \
  X(LocalTee, 0x22, "local.tee", Local, "")                     \
  X(GlobalGet, 0x23, "global.get", Global, "")                  \
  X(GlobalSet, 0x24, "global.set", Global, "")                  \
  X(I32Load, 0x28, "i32.load", MemArg, "i:i")                   \
  X(I64Load, 0x29, "i64.load", MemArg, "i:I")                   \
  X(F32Load, 0x2A, "f32.load", MemArg, "i:f")                   \
  X(F64Load, 0x2B, "f64.load", MemArg, "i:F")                   \
  X(I32Load8S, 0x2C, "i32.load8_s", MemArg, "i:i")              \
  X(I32Load8U, 0x2D, "i32.load8_u", MemArg, "i:i")              \
  X(I32Load16S, 0x2E, "i32.load16_s", MemArg, "i:i")            \
  X(I32Load16U, 0x2F, "i32.load16_u", MemArg, "i:i")            \
  X(I64Load8S, 0x30, "i64.load8_s", MemArg, "i:I")              \
  X(I64Load8U, 0x31, "i64.load8_u", MemArg, "i:I")              \
  X(I64Load16S, 0x32, "i64.load16_s", MemArg, "i:I")            \
  X(I64Load16U, 0x33, "i64.load16_u", MemArg, "i:I")            \
  X(I64Load32S, 0x34, "i64.load32_s", MemArg, "i:I")            \
  X(I64Load32U, 0x35, "i64.load32_u", MemArg, "i:I")            \
  X(I32Store, 0x36, "i32.store", MemArg, "ii:")                 \
  X(I64Store, 0x37, "i64.store", MemArg, "iI:")                 \
  X(F32Store, 0x38, "f32.store", MemArg, "if:")                 \
  X(F64Store, 0x39, "f64.store", MemArg, "iF:")                 \
  X(I32Store8, 0x3A, "i32.store8", MemArg, "ii:")               \
  X(I32Store16, 0x3B, "i32.store16", MemArg, "ii:")             \
  X(I64Store8, 0x3C, "i64.store8", MemArg, "iI:")               \
  X(I64Store16, 0x3D, "i64.store16", MemArg, "iI:")             \
  X(I64Store32, 0x3E, "i64.store32", MemArg, "iI:")             \
  X(MemorySize, 0x3F, "memory.size", MemIndex, ":i")            \
  X(MemoryGrow, 0x40, "memory.grow", MemIndex, "i:i")           \
  X(I32Const, 0x41, "i32.const", I32, ":i")                     \
  X(I64Const, 0x42, "i64.const", I64, ":I")                     \
  X(F32Const, 0x43, "f32.const", F32, ":f")                     \
  X(F64Const, 0x44, "f64.const", F64, ":F")                     \
  X(I32Eqz, 0x45, "i32.eqz", None, "i:i")                       \
  X(I32Eq, 0x46, "i32.eq", None, "ii:i")                        \
  X(I32Ne, 0x47, "i32.ne", None, "ii:i")                        \
  X(I32LtS, 0x48, "i32.lt_s", None, "ii:i")                     \
  X(I32LtU, 0x49, "i32.lt_u", None, "ii:i")                     \
  X(I32GtS, 0x4A, "i32.gt_s", None, "ii:i")                     \
  X(I32GtU, 0x4B, "i32.gt_u", None, "ii:i")                     \
  X(I32LeS, 0x4C, "i32.le_s", None, "ii:i")                     \
  X(I32LeU, 0x4D, "i32.le_u", None, "ii:i")                     \
  X(I32GeS, 0x4E, "i32.ge_s", None, "ii:i")                     \
  X(I32GeU, 0x4F, "i32.ge_u", None, "ii:i")                     \
  X(I64Eqz, 0x50, "i64.eqz", None, "I:i")                       \
  X(I64Eq, 0x51, "i64.eq", None, "II:i")                        \
  X(I64Ne, 0x52, "i64.ne", None, "II:i")                        \
  X(I64LtS, 0x53, "i64.lt_s", None, "II:i")                     \
  X(I64LtU, 0x54, "i64.lt_u", None, "II:i")                     \
  X(I64GtS, 0x55, "i64.gt_s", None, "II:i")                     \
  X(I64GtU, 0x56, "i64.gt_u", None, "II:i")                     \
  X(I64LeS, 0x57, "i64.le_s", None, "II:i")                     \
  X(I64LeU, 0x58, "i64.le_u", None, "II:i")                     \
  X(I64GeS, 0x59, "i64.ge_s", None, "II:i")                     \
  X(I64GeU, 0x5A, "i64.ge_u", None, "II:i")                     \
  X(F32Eq, 0x5B, "f32.eq", None, "ff:i")                        \
  X(F32Ne, 0x5C, "f32.ne", None, "ff:i")                        \
  X(F32Lt, 0x5D, "f32.lt", None, "ff:i")                        \
  X(F32Gt, 0x5E, "f32.gt", None, "ff:i")                        \
  X(F32Le, 0x5F, "f32.le", None, "ff:i")                        \
  X(F32Ge, 0x60, "f32.ge", None, "ff:i")                        \
  X(F64Eq, 0x61, "f64.eq", None, "FF:i")                        \
  X(F64Ne, 0x62, "f64.ne", None, "FF:i")                        \
  X(F64Lt, 0x63, "f64.lt", None, "FF:i")                        \
  X(F64Gt, 0x64, "f64.gt", None, "FF:i")                        \
  X(F64Le, 0x65, "f64.le", None, "FF:i")                        \
  X(F64Ge, 0x66, "f64.ge", None, "FF:i")                        \
  X(I32Clz, 0x67, "i32.clz", None, "i:i")                       \
  X(I32Ctz, 0x68, "i32.ctz", None, "i:i")                       \
  X(I32Popcnt, 0x69, "i32.popcnt", None, "i:i")                 \
  X(I32Add, 0x6A, "i32.add", None, "ii:i")                      \
  X(I32Sub, 0x6B, "i32.sub", None, "ii:i")                      \
  X(I32Mul, 0x6C, "i32.mul", None, "ii:i")                      \
  X(I32DivS, 0x6D, "i32.div_s", None, "ii:i")                   \
  X(I32DivU, 0x6E, "i32.div_u", None, "ii:i")                   \
  X(I32RemS, 0x6F, "i32.rem_s", None, "ii:i")                   \
  X(I32RemU, 0x70, "i32.rem_u", None, "ii:i")                   \
  X(I32And, 0x71, "i32.and", None, "ii:i")                      \
  X(I32Or, 0x72, "i32.or", None, "ii:i")                        \
  X(I32Xor, 0x73, "i32.xor", None, "ii:i")                      \
  X(I32Shl, 0x74, "i32.shl", None, "ii:i")                      \
  X(I32ShrS, 0x75, "i32.shr_s", None, "ii:i")                   \
  X(I32ShrU, 0x76, "i32.shr_u", None, "ii:i")                   \
  X(I32Rotl, 0x77, "i32.rotl", None, "ii:i")                    \
  X(I32Rotr, 0x78, "i32.rotr", None, "ii:i")                    \
  X(I64Clz, 0x79, "i64.clz", None, "I:I")                       \
  X(I64Ctz, 0x7A, "i64.ctz", None, "I:I")                       \
  X(I64Popcnt, 0x7B, "i64.popcnt", None, "I:I")                 \
  X(I64Add, 0x7C, "i64.add", None, "II:I")                      \
  X(I64Sub, 0x7D, "i64.sub", None, "II:I")                      \
  X(I64Mul, 0x7E, "i64.mul", None, "II:I")                      \
  X(I64DivS, 0x7F, "i64.div_s", None, "II:I")                   \
  X(I64DivU, 0x80, "i64.div_u", None, "II:I")                   \
  X(I64RemS, 0x81, "i64.rem_s", None, "II:I")                   \
  X(I64RemU, 0x82, "i64.rem_u", None, "II:I")                   \
  X(I64And, 0x83, "i64.and", None, "II:I")                      \
  X(I64Or, 0x84, "i64.or", None, "II:I")                        \
  X(I64Xor, 0x85, "i64.xor", None, "II:I")                      \
  X(I64Shl, 0x86, "i64.shl", None, "II:I")                      \
  X(I64ShrS, 0x87, "i64.shr_s", None, "II:I")                   \
  X(I64ShrU, 0x88, "i64.shr_u", None, "II:I")                   \
  X(I64Rotl, 0x89, "i64.rotl", None, "II:I")                    \
  X(I64Rotr, 0x8A, "i64.rotr", None, "II:I")                    \
  X(F32Abs, 0x8B, "f32.abs", None, "f:f")                       \
  X(F32Neg, 0x8C, "f32.neg", None, "f:f")                       \
  X(F32Ceil, 0x8D, "f32.ceil", None, "f:f")                     \
  X(F32Floor, 0x8E, "f32.floor", None, "f:f")                   \
  X(F32Trunc, 0x8F, "f32.trunc", None, "f:f")                   \
  X(F32Nearest, 0x90, "f32.nearest", None, "f:f")               \
  X(F32Sqrt, 0x91, "f32.sqrt", None, "f:f")                     \
  X(F32Add, 0x92, "f32.add", None, "ff:f")                      \
  X(F32Sub, 0x93, "f32.sub", None, "ff:f")                      \
  X(F32Mul, 0x94, "f32.mul", None, "ff:f")                      \
  X(F32Div, 0x95, "f32.div", None, "ff:f")                      \
  X(F32Min, 0x96, "f32.min", None, "ff:f")                      \
  X(F32Max, 0x97, "f32.max", None, "ff:f")                      \
  X(F32Copysign, 0x98, "f32.copysign", None, "ff:f")            \
  X(F64Abs, 0x99, "f64.abs", None, "F:F")                       \
  X(F64Neg, 0x9A, "f64.neg", None, "F:F")                       \
  X(F64Ceil, 0x9B, "f64.ceil", None, "F:F")                     \
  X(F64Floor, 0x9C, "f64.floor", None, "F:F")                   \
  X(F64Trunc, 0x9D, "f64.trunc", None, "F:F")                   \
  X(F64Nearest, 0x9E, "f64.nearest", None, "F:F")               \
  X(F64Sqrt, 0x9F, "f64.sqrt", None, "F:F")                     \
  X(F64Add, 0xA0, "f64.add", None, "FF:F")                      \
  X(F64Sub, 0xA1, "f64.sub", None, "FF:F")                      \
  X(F64Mul, 0xA2, "f64.mul", None, "FF:F")                      \
  X(F64Div, 0xA3, "f64.div", None, "FF:F")                      \
  X(F64Min, 0xA4, "f64.min", None, "FF:F")                      \
  X(F64Max, 0xA5, "f64.max", None, "FF:F")                      \
  X(F64Copysign, 0xA6, "f64.copysign", None, "FF:F")            \
  X(I32WrapI64, 0xA7, "i32.wrap_i64", None, "I:i")              \
  X(I32TruncF32S, 0xA8, "i32.trunc_f32_s", None, "f:i")         \
  X(I32TruncF32U, 0xA9, "i32.trunc_f32_u", None, "f:i")         \
  X(I32TruncF64S, 0xAA, "i32.trunc_f64_s", None, "F:i")         \
  X(I32TruncF64U, 0xAB, "i32.trunc_f64_u", None, "F:i")         \
  X(I64ExtendI32S, 0xAC, "i64.extend_i32_s", None, "i:I")       \
  X(I64ExtendI32U, 0xAD, "i64.extend_i32_u", None, "i:I")       \
  X(I64TruncF32S, 0xAE, "i64.trunc_f32_s", None, "f:I")         \
  X(I64TruncF32U, 0xAF, "i64.trunc_f32_u", None, "f:I")         \
  X(I64TruncF64S, 0xB0, "i64.trunc_f64_s", None, "F:I")         \
  X(I64TruncF64U, 0xB1, "i64.trunc_f64_u", None, "F:I")         \
  X(F32ConvertI32S, 0xB2, "f32.convert_i32_s", None, "i:f")     \
  X(F32ConvertI32U, 0xB3, "f32.convert_i32_u", None, "i:f")     \
  X(F32ConvertI64S, 0xB4, "f32.convert_i64_s", None, "I:f")     \
  X(F32ConvertI64U, 0xB5, "f32.convert_i64_u", None, "I:f")     \
  X(F32DemoteF64, 0xB6, "f32.demote_f64", None, "F:f")          \
  X(F64ConvertI32S, 0xB7, "f64.convert_i32_s", None, "i:F")     \
  X(F64ConvertI32U, 0xB8, "f64.convert_i32_u", None, "i:F")     \
  X(F64ConvertI64S, 0xB9, "f64.convert_i64_s", None, "I:F")     \
  X(F64ConvertI64U, 0xBA, "f64.convert_i64_u", None, "I:F")     \
  X(F64PromoteF32, 0xBB, "f64.promote_f32", None, "f:F")        \
  X(I32ReinterpretF32, 0xBC, "i32.reinterpret_f32", None, "f:i") \
  X(I64ReinterpretF64, 0xBD, "i64.reinterpret_f64", None, "F:I") \
  X(F32ReinterpretI32, 0xBE, "f32.reinterpret_i32", None, "i:f") \
  X(F64ReinterpretI64, 0xBF, "f64.reinterpret_i64", None, "I:F")

enum class Opcode : std::uint8_t {
#define WMUTATE_ENUM(name, byte, text, imm, sig) name = byte,
  WMUTATE_OPCODES(WMUTATE_ENUM)
#undef WMUTATE_ENUM
};

struct OpcodeInfo {
  std::string_view name;
  ImmKind imm = ImmKind::None;
  bool valid = false;
  // Fixed signature; meaningful when `fixed` is set.
  bool fixed = false;
  std::uint8_t num_pops = 0;
  ValType pops[3] = {};
  std::optional<ValType> push;
};

const OpcodeInfo& info(Opcode op);
bool is_mvp_opcode(std::uint8_t byte);
inline std::string_view to_string(Opcode op) { return info(op).name; }

/// Natural alignment (log2 of access width) of a load or store.
unsigned natural_alignment(Opcode op);
/// Access width in bytes of a load or store, 0 for anything else.
unsigned access_size(Opcode op);
bool is_load(Opcode op);
bool is_store(Opcode op);

}  // namespace wmutate
