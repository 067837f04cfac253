#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wmutate/opcodes.hpp"

namespace wmutate {

using Bytes = std::vector<std::uint8_t>;

/// Block signature byte: 0x40 for the empty type, otherwise a value type.
inline constexpr std::uint32_t kEmptyBlock = 0x40;

/// One decoded instruction. Which fields are meaningful depends on the
/// opcode's ImmKind:
///   BlockType           imm = 0x40 or a value type byte
///   Label/Func/Local/Global/MemIndex   imm = index
///   BrTable             targets = labels, imm = default label
///   CallIndirect        imm = type index, offset = table index
///   MemArg              imm = alignment exponent, offset = byte offset
///   I32/I64/F32/F64     value = raw bits (zero extended to 64 bits for 32-bit types)
struct Instruction {
  Opcode op = Opcode::Nop;
  std::uint32_t imm = 0;
  std::uint32_t offset = 0;
  std::uint64_t value = 0;
  std::vector<std::uint32_t> targets;

  std::optional<ValType> block_result() const {
    return imm == kEmptyBlock ? std::nullopt : valtype_from_byte(static_cast<std::uint8_t>(imm));
  }

  bool operator==(const Instruction&) const = default;

  static Instruction make(Opcode op, std::uint32_t imm = 0, std::uint32_t offset = 0, std::uint64_t value = 0) {
    Instruction in;
    in.op = op;
    in.imm = imm;
    in.offset = offset;
    in.value = value;
    return in;
  }
  static Instruction simple(Opcode op) { return make(op); }
  static Instruction with_index(Opcode op, std::uint32_t index) { return make(op, index); }
  static Instruction i32_const(std::int32_t v) {
    return make(Opcode::I32Const, 0, 0, static_cast<std::uint32_t>(v));
  }
  static Instruction i64_const(std::int64_t v) {
    return make(Opcode::I64Const, 0, 0, static_cast<std::uint64_t>(v));
  }
  static Instruction f32_const_bits(std::uint32_t bits) { return make(Opcode::F32Const, 0, 0, bits); }
  static Instruction f64_const_bits(std::uint64_t bits) { return make(Opcode::F64Const, 0, 0, bits); }
  static Instruction mem(Opcode op, std::uint32_t align, std::uint32_t offset) {
    return make(op, align, offset);
  }
  static Instruction block(Opcode op, std::optional<ValType> result) {
    return make(op, result ? static_cast<std::uint32_t>(*result) : kEmptyBlock);
  }
};

/// The `T.const 0` instruction for a value type.
Instruction zero_const(ValType t);
/// A `T.const` carrying raw bits (i32 bits are truncated to 32).
Instruction const_of(ValType t, std::uint64_t bits);

struct FuncType {
  std::vector<ValType> params;
  std::vector<ValType> results;
  bool operator==(const FuncType&) const = default;
};

struct Limits {
  std::uint32_t min = 0;
  std::optional<std::uint32_t> max;
  bool operator==(const Limits&) const = default;
};

struct TableType {
  Limits limits;  // element type is always funcref
  bool operator==(const TableType&) const = default;
};

struct MemoryType {
  Limits limits;
  bool operator==(const MemoryType&) const = default;
};

struct GlobalType {
  ValType type = ValType::I32;
  bool is_mutable = false;
  bool operator==(const GlobalType&) const = default;
};

enum class ExternKind : std::uint8_t { Func = 0, Table = 1, Memory = 2, Global = 3 };

struct Import {
  std::string module;
  std::string field;
  // Func imports carry a type index.
  std::variant<std::uint32_t, TableType, MemoryType, GlobalType> desc;

  ExternKind kind() const { return static_cast<ExternKind>(desc.index()); }
  bool operator==(const Import&) const = default;
};

struct Export {
  std::string name;
  ExternKind kind = ExternKind::Func;
  std::uint32_t index = 0;
  bool operator==(const Export&) const = default;
};

/// Constant initializer: one `T.const` or `global.get` (the trailing end is implicit).
struct ConstExpr {
  Instruction instr;
  bool operator==(const ConstExpr&) const = default;
};

struct Global {
  GlobalType type;
  ConstExpr init;
  bool operator==(const Global&) const = default;
};

struct ElementSegment {
  std::uint32_t table = 0;
  ConstExpr offset;
  std::vector<std::uint32_t> funcs;
  bool operator==(const ElementSegment&) const = default;
};

struct DataSegment {
  std::uint32_t memory = 0;
  ConstExpr offset;
  Bytes bytes;
  bool operator==(const DataSegment&) const = default;
};

struct LocalDecl {
  std::uint32_t count = 0;
  ValType type = ValType::I32;
  bool operator==(const LocalDecl&) const = default;
};

/// Flat instruction list terminated by the function's final `end`, plus a
/// matching-bracket index. `brackets[i]` is:
///   block/loop  -> index of the matching end
///   if          -> index of the matching else, or end if there is none
///   else        -> index of the matching end
///   end         -> index of the construct it closes (the body's final end maps to itself)
/// Anything else maps to itself.
struct FuncBody {
  std::vector<LocalDecl> locals;
  std::vector<Instruction> code;
  std::vector<std::uint32_t> brackets;

  /// Recomputes `brackets`; throws std::invalid_argument if nesting is broken.
  void rebuild_brackets();
  std::uint32_t num_locals() const;
  /// Type of a non-parameter local, indexed from 0 past the parameters.
  ValType local_type(std::uint32_t index_after_params) const;

  bool operator==(const FuncBody& o) const { return locals == o.locals && code == o.code; }
};

struct Function {
  std::uint32_t type = 0;
  FuncBody body;
  bool operator==(const Function&) const = default;
};

enum class SectionId : std::uint8_t {
  Custom = 0,
  Type = 1,
  Import = 2,
  Function = 3,
  Table = 4,
  Memory = 5,
  Global = 6,
  Export = 7,
  Start = 8,
  Element = 9,
  Code = 10,
  Data = 11,
};

/// Opaque named payload. `after` is the last known section preceding it in
/// the binary (Custom when it precedes every known section).
struct CustomSection {
  std::string name;
  Bytes payload;
  SectionId after = SectionId::Custom;
  bool operator==(const CustomSection&) const = default;
};

/// Decoded core-MVP module. The function/code sections are fused into
/// `functions`; known sections keep their canonical relative order on
/// encoding and custom sections keep their anchor.
struct WasmModule {
  std::vector<FuncType> types;
  std::vector<Import> imports;
  std::vector<Function> functions;
  std::vector<TableType> tables;
  std::vector<MemoryType> memories;
  std::vector<Global> globals;
  std::vector<Export> exports;
  std::optional<std::uint32_t> start;
  std::vector<ElementSegment> elements;
  std::vector<DataSegment> data;
  std::vector<CustomSection> customs;

  bool operator==(const WasmModule&) const = default;

  std::uint32_t num_imported(ExternKind kind) const;
  std::uint32_t num_funcs() const { return num_imported(ExternKind::Func) + std::uint32_t(functions.size()); }
  std::uint32_t num_tables() const { return num_imported(ExternKind::Table) + std::uint32_t(tables.size()); }
  std::uint32_t num_memories() const {
    return num_imported(ExternKind::Memory) + std::uint32_t(memories.size());
  }
  std::uint32_t num_globals() const {
    return num_imported(ExternKind::Global) + std::uint32_t(globals.size());
  }

  /// Type index of a function in the function index space.
  std::uint32_t func_type_index(std::uint32_t func) const;
  const FuncType& func_type(std::uint32_t func) const { return types.at(func_type_index(func)); }
  GlobalType global_type(std::uint32_t global) const;
  /// Defined function for an index in the function index space, or null for imports.
  const Function* defined_function(std::uint32_t func) const;
  Function* defined_function(std::uint32_t func);
  /// Value type of local `index` (parameters first) inside a defined function.
  ValType local_type(const Function& f, std::uint32_t index) const;
  std::uint32_t total_locals(const Function& f) const;
  /// Memory/table limits regardless of whether they are imported.
  std::optional<Limits> memory_limits() const;
  std::optional<Limits> table_limits() const;
  const Export* find_export(std::string_view name) const;
};

/// Puts a module in the form the decoder would return for its encoding:
/// adjacent local declarations of one type are merged and custom sections
/// anchored to an omitted section move to the closest preceding one.
void normalize_layout(WasmModule& m);

}  // namespace wmutate
