#include <limits>

#include "wmutate/codec.hpp"
#include "wmutate/errors.hpp"
#include "wmutate/leb128.hpp"

namespace wmutate {
namespace {

void put_count(Bytes& out, std::size_t n) {
  if (n > std::numeric_limits<std::uint32_t>::max()) throw EncodingOverflow("count exceeds u32");
  leb128::write_u32(out, static_cast<std::uint32_t>(n));
}

void put_name(Bytes& out, const std::string& s) {
  put_count(out, s.size());
  out.insert(out.end(), s.begin(), s.end());
}

void put_valtype(Bytes& out, ValType t) { out.push_back(static_cast<std::uint8_t>(t)); }

void put_limits(Bytes& out, const Limits& l) {
  out.push_back(l.max ? 0x01 : 0x00);
  leb128::write_u32(out, l.min);
  if (l.max) leb128::write_u32(out, *l.max);
}

void put_global_type(Bytes& out, const GlobalType& g) {
  put_valtype(out, g.type);
  out.push_back(g.is_mutable ? 1 : 0);
}

void put_fixed(Bytes& out, std::uint64_t v, unsigned n) {
  for (unsigned i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_instruction(Bytes& out, const Instruction& in) {
  out.push_back(static_cast<std::uint8_t>(in.op));
  switch (info(in.op).imm) {
    case ImmKind::None:
      break;
    case ImmKind::BlockType:
      out.push_back(static_cast<std::uint8_t>(in.imm));
      break;
    case ImmKind::Label:
    case ImmKind::Func:
    case ImmKind::Local:
    case ImmKind::Global:
      leb128::write_u32(out, in.imm);
      break;
    case ImmKind::BrTable:
      put_count(out, in.targets.size());
      for (auto t : in.targets) leb128::write_u32(out, t);
      leb128::write_u32(out, in.imm);
      break;
    case ImmKind::CallIndirect:
      leb128::write_u32(out, in.imm);
      out.push_back(0x00);
      break;
    case ImmKind::MemArg:
      leb128::write_u32(out, in.imm);
      leb128::write_u32(out, in.offset);
      break;
    case ImmKind::MemIndex:
      out.push_back(0x00);
      break;
    case ImmKind::I32:
      leb128::write_s32(out, static_cast<std::int32_t>(static_cast<std::uint32_t>(in.value)));
      break;
    case ImmKind::I64:
      leb128::write_s64(out, static_cast<std::int64_t>(in.value));
      break;
    case ImmKind::F32:
      put_fixed(out, in.value, 4);
      break;
    case ImmKind::F64:
      put_fixed(out, in.value, 8);
      break;
  }
}

void put_const_expr(Bytes& out, const ConstExpr& e) {
  put_instruction(out, e.instr);
  out.push_back(static_cast<std::uint8_t>(Opcode::End));
}

void put_body(Bytes& out, const FuncBody& body) {
  // Adjacent groups of one type are merged; zero-count groups are dropped.
  std::vector<LocalDecl> merged;
  for (const auto& d : body.locals) {
    if (d.count == 0) continue;
    if (!merged.empty() && merged.back().type == d.type) {
      const std::uint64_t sum = std::uint64_t(merged.back().count) + d.count;
      if (sum > std::numeric_limits<std::uint32_t>::max()) throw EncodingOverflow("local count exceeds u32");
      merged.back().count = static_cast<std::uint32_t>(sum);
    } else {
      merged.push_back(d);
    }
  }
  Bytes b;
  put_count(b, merged.size());
  for (const auto& d : merged) {
    leb128::write_u32(b, d.count);
    put_valtype(b, d.type);
  }
  for (const auto& in : body.code) put_instruction(b, in);
  put_count(out, b.size());
  out.insert(out.end(), b.begin(), b.end());
}

void put_section(Bytes& out, SectionId id, const Bytes& content) {
  out.push_back(static_cast<std::uint8_t>(id));
  put_count(out, content.size());
  out.insert(out.end(), content.begin(), content.end());
}

void put_customs(Bytes& out, const WasmModule& m, SectionId anchor) {
  for (const auto& c : m.customs) {
    if (c.after != anchor) continue;
    Bytes b;
    put_name(b, c.name);
    b.insert(b.end(), c.payload.begin(), c.payload.end());
    put_section(out, SectionId::Custom, b);
  }
}

Bytes known_section(const WasmModule& m, SectionId id) {
  Bytes b;
  switch (id) {
    case SectionId::Custom:
      break;
    case SectionId::Type:
      if (m.types.empty()) break;
      put_count(b, m.types.size());
      for (const auto& t : m.types) {
        b.push_back(0x60);
        put_count(b, t.params.size());
        for (auto p : t.params) put_valtype(b, p);
        put_count(b, t.results.size());
        for (auto r : t.results) put_valtype(b, r);
      }
      break;
    case SectionId::Import:
      if (m.imports.empty()) break;
      put_count(b, m.imports.size());
      for (const auto& imp : m.imports) {
        put_name(b, imp.module);
        put_name(b, imp.field);
        b.push_back(static_cast<std::uint8_t>(imp.kind()));
        switch (imp.kind()) {
          case ExternKind::Func: leb128::write_u32(b, std::get<0>(imp.desc)); break;
          case ExternKind::Table:
            b.push_back(0x70);
            put_limits(b, std::get<TableType>(imp.desc).limits);
            break;
          case ExternKind::Memory: put_limits(b, std::get<MemoryType>(imp.desc).limits); break;
          case ExternKind::Global: put_global_type(b, std::get<GlobalType>(imp.desc)); break;
        }
      }
      break;
    case SectionId::Function:
      if (m.functions.empty()) break;
      put_count(b, m.functions.size());
      for (const auto& f : m.functions) leb128::write_u32(b, f.type);
      break;
    case SectionId::Table:
      if (m.tables.empty()) break;
      put_count(b, m.tables.size());
      for (const auto& t : m.tables) {
        b.push_back(0x70);
        put_limits(b, t.limits);
      }
      break;
    case SectionId::Memory:
      if (m.memories.empty()) break;
      put_count(b, m.memories.size());
      for (const auto& mem : m.memories) put_limits(b, mem.limits);
      break;
    case SectionId::Global:
      if (m.globals.empty()) break;
      put_count(b, m.globals.size());
      for (const auto& g : m.globals) {
        put_global_type(b, g.type);
        put_const_expr(b, g.init);
      }
      break;
    case SectionId::Export:
      if (m.exports.empty()) break;
      put_count(b, m.exports.size());
      for (const auto& e : m.exports) {
        put_name(b, e.name);
        b.push_back(static_cast<std::uint8_t>(e.kind));
        leb128::write_u32(b, e.index);
      }
      break;
    case SectionId::Start:
      if (m.start) leb128::write_u32(b, *m.start);
      break;
    case SectionId::Element:
      if (m.elements.empty()) break;
      put_count(b, m.elements.size());
      for (const auto& seg : m.elements) {
        leb128::write_u32(b, 0);
        put_const_expr(b, seg.offset);
        put_count(b, seg.funcs.size());
        for (auto f : seg.funcs) leb128::write_u32(b, f);
      }
      break;
    case SectionId::Code:
      if (m.functions.empty()) break;
      put_count(b, m.functions.size());
      for (const auto& f : m.functions) put_body(b, f.body);
      break;
    case SectionId::Data:
      if (m.data.empty()) break;
      put_count(b, m.data.size());
      for (const auto& seg : m.data) {
        leb128::write_u32(b, 0);
        put_const_expr(b, seg.offset);
        put_count(b, seg.bytes.size());
        b.insert(b.end(), seg.bytes.begin(), seg.bytes.end());
      }
      break;
  }
  return b;
}

}  // namespace

Bytes encode_module(const WasmModule& m) {
  Bytes out(std::begin(kWasmHeader), std::end(kWasmHeader));
  put_customs(out, m, SectionId::Custom);
  for (int i = 1; i <= 11; ++i) {
    const auto id = static_cast<SectionId>(i);
    Bytes content = known_section(m, id);
    const bool present = id == SectionId::Start ? m.start.has_value() : !content.empty();
    if (present) put_section(out, id, content);
    put_customs(out, m, id);
  }
  return out;
}

}  // namespace wmutate
