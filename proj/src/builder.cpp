#include "wmutate/builder.hpp"

#include <stdexcept>

namespace wmutate {

std::uint32_t ModuleBuilder::type(std::vector<ValType> params, std::vector<ValType> results) {
  FuncType t{std::move(params), std::move(results)};
  for (std::uint32_t i = 0; i < m_.types.size(); ++i) {
    if (m_.types[i] == t) return i;
  }
  m_.types.push_back(std::move(t));
  return static_cast<std::uint32_t>(m_.types.size() - 1);
}

std::uint32_t ModuleBuilder::import_func(const std::string& module, const std::string& field,
                                         std::vector<ValType> params, std::vector<ValType> results) {
  if (!m_.functions.empty()) throw std::logic_error("imports must precede defined functions");
  const std::uint32_t t = type(std::move(params), std::move(results));
  m_.imports.push_back(Import{module, field, t});
  return m_.num_imported(ExternKind::Func) - 1;
}

void ModuleBuilder::memory(std::uint32_t min_pages, std::optional<std::uint32_t> max_pages) {
  m_.memories.push_back(MemoryType{Limits{min_pages, max_pages}});
}

void ModuleBuilder::table(std::uint32_t min, std::optional<std::uint32_t> max) {
  m_.tables.push_back(TableType{Limits{min, max}});
}

std::uint32_t ModuleBuilder::global(ValType t, bool is_mutable, std::uint64_t init_bits) {
  m_.globals.push_back(Global{GlobalType{t, is_mutable}, ConstExpr{const_of(t, init_bits)}});
  return m_.num_globals() - 1;
}

std::uint32_t ModuleBuilder::func(std::vector<ValType> params, std::vector<ValType> results,
                                  std::vector<ValType> locals, std::vector<Instruction> code) {
  Function f;
  f.type = type(std::move(params), std::move(results));
  for (auto t : locals) {
    if (!f.body.locals.empty() && f.body.locals.back().type == t) {
      ++f.body.locals.back().count;
    } else {
      f.body.locals.push_back(LocalDecl{1, t});
    }
  }
  // A body whose nesting is still open needs its final end appended.
  int depth = 1;
  for (const auto& in : code) {
    if (in.op == Opcode::Block || in.op == Opcode::Loop || in.op == Opcode::If) ++depth;
    if (in.op == Opcode::End) --depth;
  }
  if (depth > 0) code.push_back(Instruction::simple(Opcode::End));
  f.body.code = std::move(code);
  f.body.rebuild_brackets();
  m_.functions.push_back(std::move(f));
  return m_.num_funcs() - 1;
}

void ModuleBuilder::export_func(const std::string& name, std::uint32_t index) {
  m_.exports.push_back(Export{name, ExternKind::Func, index});
}

void ModuleBuilder::export_memory(const std::string& name) { m_.exports.push_back(Export{name, ExternKind::Memory, 0}); }

void ModuleBuilder::export_global(const std::string& name, std::uint32_t index) {
  m_.exports.push_back(Export{name, ExternKind::Global, index});
}

void ModuleBuilder::start(std::uint32_t func) { m_.start = func; }

void ModuleBuilder::data(std::uint32_t offset, Bytes bytes) {
  m_.data.push_back(
      DataSegment{0, ConstExpr{Instruction::i32_const(static_cast<std::int32_t>(offset))}, std::move(bytes)});
}

void ModuleBuilder::elem(std::uint32_t offset, std::vector<std::uint32_t> funcs) {
  m_.elements.push_back(
      ElementSegment{0, ConstExpr{Instruction::i32_const(static_cast<std::int32_t>(offset))}, std::move(funcs)});
}

void ModuleBuilder::custom(const std::string& name, Bytes payload, SectionId after) {
  m_.customs.push_back(CustomSection{name, std::move(payload), after});
}

}  // namespace wmutate
