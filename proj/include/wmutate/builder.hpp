#pragma once

#include <bit>
#include <string>
#include <vector>

#include "wmutate/module.hpp"

namespace wmutate {

/// Incremental construction of small modules (tests, examples). Imports
/// must be declared before defined functions/globals so indices are stable.
class ModuleBuilder {
 public:
  std::uint32_t type(std::vector<ValType> params, std::vector<ValType> results);
  std::uint32_t import_func(const std::string& module, const std::string& field, std::vector<ValType> params,
                            std::vector<ValType> results);
  void memory(std::uint32_t min_pages, std::optional<std::uint32_t> max_pages = std::nullopt);
  void table(std::uint32_t min, std::optional<std::uint32_t> max = std::nullopt);
  std::uint32_t global(ValType t, bool is_mutable, std::uint64_t init_bits);
  /// Appends a defined function; a trailing `end` is added when missing.
  std::uint32_t func(std::vector<ValType> params, std::vector<ValType> results, std::vector<ValType> locals,
                     std::vector<Instruction> code);
  void export_func(const std::string& name, std::uint32_t index);
  void export_memory(const std::string& name);
  void export_global(const std::string& name, std::uint32_t index);
  void start(std::uint32_t func);
  void data(std::uint32_t offset, Bytes bytes);
  void elem(std::uint32_t offset, std::vector<std::uint32_t> funcs);
  void custom(const std::string& name, Bytes payload, SectionId after = SectionId::Data);

  WasmModule build() const { return m_; }

 private:
  WasmModule m_;
};

/// Shorthands for hand-written instruction lists.
namespace ops {
inline Instruction op(Opcode o) { return Instruction::simple(o); }
inline Instruction i32(std::int32_t v) { return Instruction::i32_const(v); }
inline Instruction i64(std::int64_t v) { return Instruction::i64_const(v); }
inline Instruction f32(float v) { return Instruction::f32_const_bits(std::bit_cast<std::uint32_t>(v)); }
inline Instruction f64(double v) { return Instruction::f64_const_bits(std::bit_cast<std::uint64_t>(v)); }
inline Instruction get(std::uint32_t i) { return Instruction::with_index(Opcode::LocalGet, i); }
inline Instruction set(std::uint32_t i) { return Instruction::with_index(Opcode::LocalSet, i); }
inline Instruction tee(std::uint32_t i) { return Instruction::with_index(Opcode::LocalTee, i); }
inline Instruction gget(std::uint32_t i) { return Instruction::with_index(Opcode::GlobalGet, i); }
inline Instruction gset(std::uint32_t i) { return Instruction::with_index(Opcode::GlobalSet, i); }
inline Instruction call(std::uint32_t f) { return Instruction::with_index(Opcode::Call, f); }
inline Instruction br(std::uint32_t l) { return Instruction::with_index(Opcode::Br, l); }
inline Instruction br_if(std::uint32_t l) { return Instruction::with_index(Opcode::BrIf, l); }
inline Instruction block(std::optional<ValType> r = std::nullopt) { return Instruction::block(Opcode::Block, r); }
inline Instruction loop(std::optional<ValType> r = std::nullopt) { return Instruction::block(Opcode::Loop, r); }
inline Instruction if_(std::optional<ValType> r = std::nullopt) { return Instruction::block(Opcode::If, r); }
inline Instruction end() { return Instruction::simple(Opcode::End); }
inline Instruction load(Opcode o, std::uint32_t offset = 0) {
  return Instruction::mem(o, natural_alignment(o), offset);
}
}  // namespace ops

}  // namespace wmutate

