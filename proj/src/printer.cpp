#include "wmutate/printer.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <sstream>

namespace wmutate {
namespace {

std::string float_text(std::uint64_t bits, bool is64) {
  char buf[64];
  if (is64) {
    double d;
    std::memcpy(&d, &bits, 8);
    std::snprintf(buf, sizeof buf, "%.17g", d);
  } else {
    const std::uint32_t b32 = static_cast<std::uint32_t>(bits);
    float f;
    std::memcpy(&f, &b32, 4);
    std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(f));
  }
  return buf;
}

std::string block_type_text(std::uint32_t imm) {
  if (imm == kEmptyBlock) return "";
  if (auto t = valtype_from_byte(static_cast<std::uint8_t>(imm))) return " (result " + std::string(to_string(*t)) + ")";
  return " (type ?)";
}

std::string limits_text(const Limits& l) {
  std::string s = std::to_string(l.min);
  if (l.max) s += " " + std::to_string(*l.max);
  return s;
}

std::string functype_text(const FuncType& t) {
  std::string s = "(func";
  if (!t.params.empty()) {
    s += " (param";
    for (auto p : t.params) s += " " + std::string(to_string(p));
    s += ")";
  }
  if (!t.results.empty()) {
    s += " (result";
    for (auto r : t.results) s += " " + std::string(to_string(r));
    s += ")";
  }
  return s + ")";
}

}  // namespace

std::string print_instruction(const Instruction& in) {
  std::string s(to_string(in.op));
  switch (info(in.op).imm) {
    case ImmKind::None:
    case ImmKind::MemIndex:
      break;
    case ImmKind::BlockType:
      s += block_type_text(in.imm);
      break;
    case ImmKind::Label:
    case ImmKind::Func:
    case ImmKind::Local:
    case ImmKind::Global:
      s += " " + std::to_string(in.imm);
      break;
    case ImmKind::BrTable:
      for (auto t : in.targets) s += " " + std::to_string(t);
      s += " " + std::to_string(in.imm);
      break;
    case ImmKind::CallIndirect:
      s += " (type " + std::to_string(in.imm) + ")";
      break;
    case ImmKind::MemArg:
      if (in.offset) s += " offset=" + std::to_string(in.offset);
      if (in.imm != natural_alignment(in.op)) s += " align=" + std::to_string(1u << in.imm);
      break;
    case ImmKind::I32:
      s += " " + std::to_string(static_cast<std::int32_t>(static_cast<std::uint32_t>(in.value)));
      break;
    case ImmKind::I64:
      s += " " + std::to_string(static_cast<std::int64_t>(in.value));
      break;
    case ImmKind::F32:
      s += " " + float_text(in.value, false);
      break;
    case ImmKind::F64:
      s += " " + float_text(in.value, true);
      break;
  }
  return s;
}

std::string print_module(const WasmModule& m) {
  std::ostringstream os;
  os << "(module\n";
  for (std::size_t i = 0; i < m.types.size(); ++i) os << "  (type " << i << " " << functype_text(m.types[i]) << ")\n";
  std::uint32_t fi = 0, gi = 0;
  for (const auto& imp : m.imports) {
    os << "  (import \"" << imp.module << "\" \"" << imp.field << "\" ";
    switch (imp.kind()) {
      case ExternKind::Func: os << "(func " << fi++ << " (type " << std::get<0>(imp.desc) << "))"; break;
      case ExternKind::Table: os << "(table " << limits_text(std::get<TableType>(imp.desc).limits) << " funcref)"; break;
      case ExternKind::Memory: os << "(memory " << limits_text(std::get<MemoryType>(imp.desc).limits) << ")"; break;
      case ExternKind::Global: {
        const auto& g = std::get<GlobalType>(imp.desc);
        os << "(global " << gi++ << " " << (g.is_mutable ? "(mut " : "") << to_string(g.type) << (g.is_mutable ? ")" : "")
           << ")";
        break;
      }
    }
    os << ")\n";
  }
  for (const auto& t : m.tables) os << "  (table " << limits_text(t.limits) << " funcref)\n";
  for (const auto& mem : m.memories) os << "  (memory " << limits_text(mem.limits) << ")\n";
  for (const auto& g : m.globals) {
    os << "  (global " << gi++ << " " << (g.type.is_mutable ? "(mut " : "") << to_string(g.type.type)
       << (g.type.is_mutable ? ")" : "") << " (" << print_instruction(g.init.instr) << "))\n";
  }
  for (const auto& e : m.exports) {
    static const char* kinds[] = {"func", "table", "memory", "global"};
    os << "  (export \"" << e.name << "\" (" << kinds[static_cast<int>(e.kind)] << " " << e.index << "))\n";
  }
  if (m.start) os << "  (start " << *m.start << ")\n";
  for (const auto& seg : m.elements) {
    os << "  (elem (" << print_instruction(seg.offset.instr) << ")";
    for (auto f : seg.funcs) os << " " << f;
    os << ")\n";
  }
  for (const auto& f : m.functions) {
    os << "  (func " << fi++ << " (type " << f.type << ")";
    if (f.type < m.types.size()) os << " " << functype_text(m.types[f.type]);
    os << "\n";
    for (const auto& l : f.body.locals) os << "    (local " << l.count << " " << to_string(l.type) << ")\n";
    int indent = 2;
    for (std::size_t i = 0; i < f.body.code.size(); ++i) {
      const auto& in = f.body.code[i];
      if (in.op == Opcode::End || in.op == Opcode::Else) --indent;
      if (i + 1 == f.body.code.size() && in.op == Opcode::End) break;
      os << std::string(2 * static_cast<std::size_t>(std::max(indent, 1)), ' ') << print_instruction(in) << "\n";
      if (in.op == Opcode::Block || in.op == Opcode::Loop || in.op == Opcode::If || in.op == Opcode::Else) ++indent;
    }
    os << "  )\n";
  }
  for (const auto& seg : m.data) {
    os << "  (data (" << print_instruction(seg.offset.instr) << ") \"";
    for (auto b : seg.bytes) {
      if (b >= 0x20 && b < 0x7F && b != '"' && b != '\\') {
        os << static_cast<char>(b);
      } else {
        char buf[4];
        std::snprintf(buf, sizeof buf, "\\%02x", b);
        os << buf;
      }
    }
    os << "\")\n";
  }
  for (const auto& c : m.customs) os << "  (@custom \"" << c.name << "\" " << c.payload.size() << " bytes)\n";
  os << ")\n";
  return os.str();
}

}  // namespace wmutate
