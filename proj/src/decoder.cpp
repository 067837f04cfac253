#include <cstring>
#include <string>

#include "wmutate/codec.hpp"
#include "wmutate/errors.hpp"
#include "wmutate/leb128.hpp"

namespace wmutate {
namespace {

constexpr std::uint32_t kMaxPages = 65536;

class Reader {
 public:
  Reader(std::span<const std::uint8_t> data, std::size_t pos, std::size_t end)
      : data_(data.first(end)), pos_(pos) {}

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ >= data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

  std::uint8_t byte() {
    if (pos_ >= data_.size()) fail("unexpected end");
    return data_[pos_++];
  }
  std::uint32_t u32() { return leb128::read_u32(data_, pos_); }
  std::int32_t s32() { return leb128::read_s32(data_, pos_); }
  std::int64_t s64() { return leb128::read_s64(data_, pos_); }
  std::int32_t s33() { return leb128::read_s33(data_, pos_); }

  std::uint64_t fixed(unsigned n) {
    if (remaining() < n) fail("unexpected end");
    std::uint64_t v = 0;
    for (unsigned i = 0; i < n; ++i) v |= std::uint64_t(data_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }

  Bytes bytes(std::size_t n) {
    if (remaining() < n) fail("unexpected end");
    Bytes out(data_.begin() + pos_, data_.begin() + pos_ + n);
    pos_ += n;
    return out;
  }

  std::string name() {
    const std::uint32_t len = u32();
    const std::size_t at = pos_;
    Bytes b = bytes(len);
    if (!valid_utf8(b)) throw MalformedBinary(at, "invalid UTF-8 name");
    return std::string(b.begin(), b.end());
  }

  std::uint32_t count(std::size_t min_item_bytes = 1) {
    const std::size_t at = pos_;
    const std::uint32_t n = u32();
    if (std::size_t(n) * min_item_bytes > remaining()) throw MalformedBinary(at, "count exceeds section size");
    return n;
  }

  [[noreturn]] void fail(const std::string& why) const { throw MalformedBinary(pos_, why); }

 private:
  static bool valid_utf8(const Bytes& b) {
    std::size_t i = 0;
    while (i < b.size()) {
      const std::uint8_t c = b[i];
      std::size_t n = 0;
      std::uint32_t cp = 0;
      if (c < 0x80) {
        ++i;
        continue;
      } else if ((c & 0xE0) == 0xC0) {
        n = 1;
        cp = c & 0x1F;
      } else if ((c & 0xF0) == 0xE0) {
        n = 2;
        cp = c & 0x0F;
      } else if ((c & 0xF8) == 0xF0) {
        n = 3;
        cp = c & 0x07;
      } else {
        return false;
      }
      for (std::size_t k = 1; k <= n; ++k) {
        if (i + k >= b.size() || (b[i + k] & 0xC0) != 0x80) return false;
        cp = (cp << 6) | (b[i + k] & 0x3F);
      }
      if ((n == 1 && cp < 0x80) || (n == 2 && cp < 0x800) || (n == 3 && cp < 0x10000)) return false;
      if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
      i += n + 1;
    }
    return true;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_;
};

ValType read_valtype(Reader& r) {
  const std::size_t at = r.pos();
  const std::uint8_t b = r.byte();
  if (auto t = valtype_from_byte(b)) return *t;
  if (b == 0x7B || b == 0x70 || b == 0x6F) throw UnsupportedFeature(b, "non-MVP value type");
  throw MalformedBinary(at, "invalid value type");
}

Limits read_limits(Reader& r) {
  const std::size_t at = r.pos();
  const std::uint8_t flag = r.byte();
  Limits l;
  if (flag == 0x00) {
    l.min = r.u32();
  } else if (flag == 0x01) {
    l.min = r.u32();
    l.max = r.u32();
  } else if (flag == 0x02 || flag == 0x03 || flag == 0x04 || flag == 0x05) {
    throw UnsupportedFeature(flag, "shared or 64-bit limits");
  } else {
    throw MalformedBinary(at, "invalid limits flag");
  }
  return l;
}

TableType read_table_type(Reader& r) {
  const std::size_t at = r.pos();
  const std::uint8_t elem = r.byte();
  if (elem == 0x6F) throw UnsupportedFeature(elem, "externref table");
  if (elem != 0x70) throw MalformedBinary(at, "invalid table element type");
  return TableType{read_limits(r)};
}

GlobalType read_global_type(Reader& r) {
  GlobalType g;
  g.type = read_valtype(r);
  const std::size_t at = r.pos();
  const std::uint8_t mut = r.byte();
  if (mut > 1) throw MalformedBinary(at, "invalid mutability");
  g.is_mutable = mut == 1;
  return g;
}

Instruction read_instruction(Reader& r) {
  const std::size_t at = r.pos();
  const std::uint8_t byte = r.byte();
  if (!is_mvp_opcode(byte)) {
    if (byte == 0xFC || byte == 0xFD || byte == 0xFE || (byte >= 0xC0 && byte <= 0xC4) || byte == 0x1C ||
        (byte >= 0x25 && byte <= 0x26) || (byte >= 0xD0 && byte <= 0xD2) || byte == 0x06 || byte == 0x08 ||
        byte == 0x12 || byte == 0x13) {
      throw UnsupportedFeature(byte, "post-MVP opcode");
    }
    throw MalformedBinary(at, "illegal opcode");
  }
  Instruction in;
  in.op = static_cast<Opcode>(byte);
  switch (info(in.op).imm) {
    case ImmKind::None:
      break;
    case ImmKind::BlockType: {
      const std::size_t bt_at = r.pos();
      const std::uint8_t b = r.byte();
      if (b == 0x40 || valtype_from_byte(b)) {
        in.imm = b;
      } else if (b & 0x80 || b < 0x40) {
        // Multi-value block types (type indices) are post-MVP.
        throw UnsupportedFeature(b, "type-indexed block type");
      } else {
        throw MalformedBinary(bt_at, "invalid block type");
      }
      break;
    }
    case ImmKind::Label:
    case ImmKind::Func:
    case ImmKind::Local:
    case ImmKind::Global:
      in.imm = r.u32();
      break;
    case ImmKind::BrTable: {
      const std::uint32_t n = r.count();
      in.targets.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) in.targets.push_back(r.u32());
      in.imm = r.u32();
      break;
    }
    case ImmKind::CallIndirect: {
      in.imm = r.u32();
      const std::size_t t_at = r.pos();
      const std::uint8_t table = r.byte();
      if (table != 0) throw MalformedBinary(t_at, "call_indirect reserved byte must be zero");
      in.offset = 0;
      break;
    }
    case ImmKind::MemArg:
      in.imm = r.u32();
      in.offset = r.u32();
      break;
    case ImmKind::MemIndex: {
      const std::size_t m_at = r.pos();
      if (r.byte() != 0) throw MalformedBinary(m_at, "memory index must be zero");
      break;
    }
    case ImmKind::I32:
      in.value = static_cast<std::uint32_t>(r.s32());
      break;
    case ImmKind::I64:
      in.value = static_cast<std::uint64_t>(r.s64());
      break;
    case ImmKind::F32:
      in.value = r.fixed(4);
      break;
    case ImmKind::F64:
      in.value = r.fixed(8);
      break;
  }
  return in;
}

ConstExpr read_const_expr(Reader& r) {
  const std::size_t at = r.pos();
  ConstExpr e;
  e.instr = read_instruction(r);
  switch (e.instr.op) {
    case Opcode::I32Const:
    case Opcode::I64Const:
    case Opcode::F32Const:
    case Opcode::F64Const:
    case Opcode::GlobalGet:
      break;
    default:
      throw MalformedBinary(at, "non-constant instruction in constant expression");
  }
  if (r.byte() != static_cast<std::uint8_t>(Opcode::End)) throw MalformedBinary(at, "constant expression too long");
  return e;
}

FuncBody read_body(Reader& r) {
  FuncBody body;
  const std::uint32_t groups = r.count();
  std::uint64_t total = 0;
  for (std::uint32_t i = 0; i < groups; ++i) {
    const std::size_t at = r.pos();
    LocalDecl d;
    d.count = r.u32();
    d.type = read_valtype(r);
    total += d.count;
    if (total > 50000) throw MalformedBinary(at, "too many locals");
    body.locals.push_back(d);
  }
  int depth = 1;
  while (depth > 0) {
    if (r.done()) r.fail("function body not terminated");
    Instruction in = read_instruction(r);
    switch (in.op) {
      case Opcode::Block:
      case Opcode::Loop:
      case Opcode::If:
        ++depth;
        break;
      case Opcode::End:
        --depth;
        break;
      default:
        break;
    }
    body.code.push_back(std::move(in));
  }
  if (!r.done()) r.fail("trailing bytes after function body");
  try {
    body.rebuild_brackets();
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
  return body;
}

std::size_t section_items(const WasmModule& m, std::uint8_t id, const std::vector<std::uint32_t>& decls) {
  switch (static_cast<SectionId>(id)) {
    case SectionId::Type: return m.types.size();
    case SectionId::Import: return m.imports.size();
    case SectionId::Function: return decls.size();
    case SectionId::Table: return m.tables.size();
    case SectionId::Memory: return m.memories.size();
    case SectionId::Global: return m.globals.size();
    case SectionId::Export: return m.exports.size();
    case SectionId::Element: return m.elements.size();
    case SectionId::Code: return m.functions.size();
    case SectionId::Data: return m.data.size();
    default: return 0;
  }
}

void check_index(bool ok, std::size_t at, const char* what) {
  if (!ok) throw MalformedBinary(at, std::string(what) + " index out of range");
}

}  // namespace

WasmModule parse_module(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw MalformedBinary(0, "missing header");
  if (std::memcmp(bytes.data(), kWasmHeader, 4) != 0) throw MalformedBinary(0, "bad magic");
  if (std::memcmp(bytes.data() + 4, kWasmHeader + 4, 4) != 0) throw MalformedBinary(4, "unsupported version");

  WasmModule m;
  std::vector<std::uint32_t> func_decls;
  bool saw_function_section = false;
  bool saw_code_section = false;
  int last_id = 0;
  SectionId last_known = SectionId::Custom;
  std::size_t code_section_at = 0;

  Reader top(bytes, 8, bytes.size());
  while (!top.done()) {
    const std::size_t header_at = top.pos();
    const std::uint8_t id = top.byte();
    const std::uint32_t size = top.u32();
    if (size > top.remaining()) throw MalformedBinary(header_at, "section size exceeds binary");
    const std::size_t body_start = top.pos();
    const std::size_t body_end = body_start + size;
    Reader r(bytes, body_start, body_end);

    if (id == 12) throw UnsupportedFeature(id, "data count section");
    if (id > 12) throw MalformedBinary(header_at, "unknown section id");
    if (id != 0) {
      if (id <= last_id) throw MalformedBinary(header_at, "section out of order or duplicated");
      last_id = id;
    }
    const std::size_t items_before = section_items(m, id, func_decls);

    switch (static_cast<SectionId>(id)) {
      case SectionId::Custom: {
        CustomSection c;
        c.name = r.name();
        c.payload = r.bytes(r.remaining());
        c.after = last_known;
        m.customs.push_back(std::move(c));
        break;
      }
      case SectionId::Type: {
        const std::uint32_t n = r.count();
        for (std::uint32_t i = 0; i < n; ++i) {
          const std::size_t at = r.pos();
          const std::uint8_t form = r.byte();
          if (form != 0x60) throw MalformedBinary(at, "expected function type");
          FuncType t;
          const std::uint32_t np = r.count();
          for (std::uint32_t k = 0; k < np; ++k) t.params.push_back(read_valtype(r));
          const std::uint32_t nr = r.count();
          if (nr > 1) throw UnsupportedFeature(0x60, "multi-value function result");
          for (std::uint32_t k = 0; k < nr; ++k) t.results.push_back(read_valtype(r));
          m.types.push_back(std::move(t));
        }
        break;
      }
      case SectionId::Import: {
        const std::uint32_t n = r.count();
        for (std::uint32_t i = 0; i < n; ++i) {
          Import imp;
          imp.module = r.name();
          imp.field = r.name();
          const std::size_t at = r.pos();
          const std::uint8_t kind = r.byte();
          switch (kind) {
            case 0: {
              const std::uint32_t t = r.u32();
              check_index(t < m.types.size(), at, "type");
              imp.desc = t;
              break;
            }
            case 1: imp.desc = read_table_type(r); break;
            case 2: imp.desc = MemoryType{read_limits(r)}; break;
            case 3: imp.desc = read_global_type(r); break;
            default: throw MalformedBinary(at, "invalid import kind");
          }
          m.imports.push_back(std::move(imp));
        }
        break;
      }
      case SectionId::Function: {
        saw_function_section = true;
        const std::uint32_t n = r.count();
        for (std::uint32_t i = 0; i < n; ++i) {
          const std::size_t at = r.pos();
          const std::uint32_t t = r.u32();
          check_index(t < m.types.size(), at, "type");
          func_decls.push_back(t);
        }
        break;
      }
      case SectionId::Table: {
        const std::uint32_t n = r.count();
        for (std::uint32_t i = 0; i < n; ++i) m.tables.push_back(read_table_type(r));
        break;
      }
      case SectionId::Memory: {
        const std::uint32_t n = r.count();
        for (std::uint32_t i = 0; i < n; ++i) {
          const std::size_t at = r.pos();
          MemoryType mt{read_limits(r)};
          if (mt.limits.min > kMaxPages || (mt.limits.max && *mt.limits.max > kMaxPages)) {
            throw MalformedBinary(at, "memory size exceeds 4GiB");
          }
          m.memories.push_back(mt);
        }
        break;
      }
      case SectionId::Global: {
        const std::uint32_t n = r.count();
        for (std::uint32_t i = 0; i < n; ++i) {
          Global g;
          g.type = read_global_type(r);
          g.init = read_const_expr(r);
          m.globals.push_back(g);
        }
        break;
      }
      case SectionId::Export: {
        const std::uint32_t n = r.count();
        for (std::uint32_t i = 0; i < n; ++i) {
          Export e;
          e.name = r.name();
          const std::size_t at = r.pos();
          const std::uint8_t kind = r.byte();
          if (kind > 3) throw MalformedBinary(at, "invalid export kind");
          e.kind = static_cast<ExternKind>(kind);
          e.index = r.u32();
          m.exports.push_back(std::move(e));
        }
        break;
      }
      case SectionId::Start:
        m.start = r.u32();
        break;
      case SectionId::Element: {
        const std::uint32_t n = r.count();
        for (std::uint32_t i = 0; i < n; ++i) {
          const std::size_t at = r.pos();
          const std::uint32_t flags = r.u32();
          if (flags != 0) throw UnsupportedFeature(flags, "non-MVP element segment");
          ElementSegment seg;
          seg.offset = read_const_expr(r);
          const std::uint32_t k = r.count();
          for (std::uint32_t j = 0; j < k; ++j) seg.funcs.push_back(r.u32());
          (void)at;
          m.elements.push_back(std::move(seg));
        }
        break;
      }
      case SectionId::Code: {
        saw_code_section = true;
        code_section_at = header_at;
        const std::uint32_t n = r.count();
        if (n != func_decls.size()) throw MalformedBinary(header_at, "function and code section counts differ");
        for (std::uint32_t i = 0; i < n; ++i) {
          const std::uint32_t body_size = r.u32();
          if (body_size > r.remaining()) r.fail("function body exceeds section");
          Reader br(bytes, r.pos(), r.pos() + body_size);
          Function f;
          f.type = func_decls[i];
          f.body = read_body(br);
          m.functions.push_back(std::move(f));
          r = Reader(bytes, br.pos(), body_end);
        }
        break;
      }
      case SectionId::Data: {
        const std::uint32_t n = r.count();
        for (std::uint32_t i = 0; i < n; ++i) {
          const std::uint32_t flags = r.u32();
          if (flags != 0) throw UnsupportedFeature(flags, "non-MVP data segment");
          DataSegment seg;
          seg.offset = read_const_expr(r);
          const std::uint32_t len = r.u32();
          seg.bytes = r.bytes(len);
          m.data.push_back(std::move(seg));
        }
        break;
      }
    }
    if (!r.done()) throw MalformedBinary(r.pos(), "section size mismatch");
    // Custom sections anchor to the last section the encoder will emit.
    if (id != 0 && (id == 8 || section_items(m, id, func_decls) > items_before)) {
      last_known = static_cast<SectionId>(id);
    }
    top = Reader(bytes, body_end, bytes.size());
  }

  if (saw_function_section && !func_decls.empty() && !saw_code_section) {
    throw MalformedBinary(bytes.size(), "function section without code section");
  }
  (void)code_section_at;

  // Section-level index references.
  const std::uint32_t nfuncs = m.num_funcs();
  if (m.num_tables() > 1) throw MalformedBinary(0, "multiple tables");
  if (m.num_memories() > 1) throw MalformedBinary(0, "multiple memories");
  for (const auto& e : m.exports) {
    std::uint32_t limit = 0;
    switch (e.kind) {
      case ExternKind::Func: limit = nfuncs; break;
      case ExternKind::Table: limit = m.num_tables(); break;
      case ExternKind::Memory: limit = m.num_memories(); break;
      case ExternKind::Global: limit = m.num_globals(); break;
    }
    check_index(e.index < limit, 0, "export");
  }
  if (m.start) check_index(*m.start < nfuncs, 0, "start function");
  for (const auto& seg : m.elements) {
    check_index(seg.table < m.num_tables(), 0, "table");
    for (auto f : seg.funcs) check_index(f < nfuncs, 0, "element function");
  }
  for (const auto& seg : m.data) check_index(seg.memory < m.num_memories(), 0, "memory");
  return m;
}

}  // namespace wmutate
