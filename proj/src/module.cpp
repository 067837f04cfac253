#include "wmutate/module.hpp"

#include <stdexcept>

namespace wmutate {

Instruction zero_const(ValType t) { return const_of(t, 0); }

Instruction const_of(ValType t, std::uint64_t bits) {
  switch (t) {
    case ValType::I32: return Instruction::make(Opcode::I32Const, 0, 0, bits & 0xFFFFFFFFu);
    case ValType::I64: return Instruction::make(Opcode::I64Const, 0, 0, bits);
    case ValType::F32: return Instruction::make(Opcode::F32Const, 0, 0, bits & 0xFFFFFFFFu);
    case ValType::F64: return Instruction::make(Opcode::F64Const, 0, 0, bits);
  }
  return {};
}

void FuncBody::rebuild_brackets() {
  struct Open {
    std::uint32_t start;  // block/loop/if
    std::uint32_t last;   // the if, or its else once seen
  };
  brackets.assign(code.size(), 0);
  std::vector<Open> open;
  for (std::uint32_t i = 0; i < code.size(); ++i) {
    brackets[i] = i;
    switch (code[i].op) {
      case Opcode::Block:
      case Opcode::Loop:
      case Opcode::If:
        open.push_back({i, i});
        break;
      case Opcode::Else:
        if (open.empty() || code[open.back().last].op != Opcode::If) {
          throw std::invalid_argument("else without matching if");
        }
        brackets[open.back().last] = i;
        open.back().last = i;
        break;
      case Opcode::End:
        if (open.empty()) {
          if (i + 1 != code.size()) throw std::invalid_argument("end closes function before body ends");
          break;
        }
        brackets[open.back().last] = i;
        brackets[i] = open.back().start;
        open.pop_back();
        break;
      default:
        break;
    }
  }
  if (!open.empty()) throw std::invalid_argument("unterminated block");
  if (code.empty() || code.back().op != Opcode::End) throw std::invalid_argument("missing final end");
}

std::uint32_t FuncBody::num_locals() const {
  std::uint64_t n = 0;
  for (const auto& l : locals) n += l.count;
  return static_cast<std::uint32_t>(n);
}

ValType FuncBody::local_type(std::uint32_t index) const {
  for (const auto& l : locals) {
    if (index < l.count) return l.type;
    index -= l.count;
  }
  throw std::out_of_range("local index out of range");
}

std::uint32_t WasmModule::num_imported(ExternKind kind) const {
  std::uint32_t n = 0;
  for (const auto& imp : imports) n += imp.kind() == kind;
  return n;
}

std::uint32_t WasmModule::func_type_index(std::uint32_t func) const {
  std::uint32_t seen = 0;
  for (const auto& imp : imports) {
    if (imp.kind() != ExternKind::Func) continue;
    if (seen++ == func) return std::get<0>(imp.desc);
  }
  const std::uint32_t local = func - seen;
  if (local >= functions.size()) throw std::out_of_range("function index out of range");
  return functions[local].type;
}

GlobalType WasmModule::global_type(std::uint32_t global) const {
  std::uint32_t seen = 0;
  for (const auto& imp : imports) {
    if (imp.kind() != ExternKind::Global) continue;
    if (seen++ == global) return std::get<GlobalType>(imp.desc);
  }
  const std::uint32_t local = global - seen;
  if (local >= globals.size()) throw std::out_of_range("global index out of range");
  return globals[local].type;
}

const Function* WasmModule::defined_function(std::uint32_t func) const {
  const std::uint32_t imported = num_imported(ExternKind::Func);
  if (func < imported || func - imported >= functions.size()) return nullptr;
  return &functions[func - imported];
}

Function* WasmModule::defined_function(std::uint32_t func) {
  const std::uint32_t imported = num_imported(ExternKind::Func);
  if (func < imported || func - imported >= functions.size()) return nullptr;
  return &functions[func - imported];
}

ValType WasmModule::local_type(const Function& f, std::uint32_t index) const {
  const auto& params = types.at(f.type).params;
  if (index < params.size()) return params[index];
  return f.body.local_type(index - static_cast<std::uint32_t>(params.size()));
}

std::uint32_t WasmModule::total_locals(const Function& f) const {
  return static_cast<std::uint32_t>(types.at(f.type).params.size()) + f.body.num_locals();
}

std::optional<Limits> WasmModule::memory_limits() const {
  for (const auto& imp : imports) {
    if (imp.kind() == ExternKind::Memory) return std::get<MemoryType>(imp.desc).limits;
  }
  if (!memories.empty()) return memories.front().limits;
  return std::nullopt;
}

std::optional<Limits> WasmModule::table_limits() const {
  for (const auto& imp : imports) {
    if (imp.kind() == ExternKind::Table) return std::get<TableType>(imp.desc).limits;
  }
  if (!tables.empty()) return tables.front().limits;
  return std::nullopt;
}

const Export* WasmModule::find_export(std::string_view name) const {
  for (const auto& e : exports) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

namespace {

bool section_present(const WasmModule& m, SectionId id) {
  switch (id) {
    case SectionId::Custom: return true;
    case SectionId::Type: return !m.types.empty();
    case SectionId::Import: return !m.imports.empty();
    case SectionId::Function:
    case SectionId::Code: return !m.functions.empty();
    case SectionId::Table: return !m.tables.empty();
    case SectionId::Memory: return !m.memories.empty();
    case SectionId::Global: return !m.globals.empty();
    case SectionId::Export: return !m.exports.empty();
    case SectionId::Start: return m.start.has_value();
    case SectionId::Element: return !m.elements.empty();
    case SectionId::Data: return !m.data.empty();
  }
  return false;
}

}  // namespace

void normalize_layout(WasmModule& m) {
  for (auto& f : m.functions) {
    std::vector<LocalDecl> merged;
    for (const auto& d : f.body.locals) {
      if (d.count == 0) continue;
      if (!merged.empty() && merged.back().type == d.type) {
        merged.back().count += d.count;
      } else {
        merged.push_back(d);
      }
    }
    f.body.locals = std::move(merged);
  }
  for (auto& c : m.customs) {
    while (!section_present(m, c.after)) c.after = static_cast<SectionId>(static_cast<int>(c.after) - 1);
  }
}

}  // namespace wmutate
