#include "wmutate/meta_rules.hpp"

#include <algorithm>
#include <set>

#include "wmutate/dataflow.hpp"

namespace wmutate {
namespace {

constexpr std::uint32_t kMaxTypeParams = 8;

ValType random_type(Rng& rng) { return kAllValTypes[rng.below(std::size(kAllValTypes))]; }

FuncType random_func_type(Rng& rng) {
  FuncType t;
  const auto params = rng.below(kMaxTypeParams + 1);
  for (std::uint64_t i = 0; i < params; ++i) t.params.push_back(random_type(rng));
  if (rng.coin()) t.results.push_back(random_type(rng));
  return t;
}

template <typename F>
void for_each_instr(WasmModule& m, F&& fn) {
  for (auto& f : m.functions) {
    for (auto& in : f.body.code) fn(in);
  }
}

template <typename F>
void for_each_instr(const WasmModule& m, F&& fn) {
  for (const auto& f : m.functions) {
    for (const auto& in : f.body.code) fn(in);
  }
}

bool uses_memory(Opcode op) {
  return is_load(op) || is_store(op) || op == Opcode::MemorySize || op == Opcode::MemoryGrow;
}

std::optional<std::uint64_t> const_offset(const ConstExpr& e) {
  if (e.instr.op != Opcode::I32Const) return std::nullopt;
  return e.instr.value & 0xFFFFFFFFu;
}

void shift_index(std::uint32_t& idx, std::uint32_t removed) {
  if (idx > removed) --idx;
}

void remap_funcs(WasmModule& m, std::uint32_t removed) {
  for_each_instr(m, [&](Instruction& in) {
    if (in.op == Opcode::Call) shift_index(in.imm, removed);
  });
  for (auto& e : m.exports) {
    if (e.kind == ExternKind::Func) shift_index(e.index, removed);
  }
  for (auto& el : m.elements) {
    for (auto& f : el.funcs) shift_index(f, removed);
  }
  if (m.start) shift_index(*m.start, removed);
}

void remap_globals(WasmModule& m, std::uint32_t removed) {
  for_each_instr(m, [&](Instruction& in) {
    if (in.op == Opcode::GlobalGet || in.op == Opcode::GlobalSet) shift_index(in.imm, removed);
  });
  for (auto& e : m.exports) {
    if (e.kind == ExternKind::Global) shift_index(e.index, removed);
  }
  auto fix = [&](ConstExpr& c) {
    if (c.instr.op == Opcode::GlobalGet) shift_index(c.instr.imm, removed);
  };
  for (auto& g : m.globals) fix(g.init);
  for (auto& d : m.data) fix(d.offset);
  for (auto& el : m.elements) fix(el.offset);
}

void remap_types(WasmModule& m, std::uint32_t removed) {
  for (auto& f : m.functions) shift_index(f.type, removed);
  for (auto& imp : m.imports) {
    if (auto* t = std::get_if<std::uint32_t>(&imp.desc)) shift_index(*t, removed);
  }
  for_each_instr(m, [&](Instruction& in) {
    if (in.op == Opcode::CallIndirect) shift_index(in.imm, removed);
  });
}

enum class ItemKind : std::uint8_t { Function, Type, Custom, Import, Table, Memory, Global, Data, Element };

struct DeadItem {
  ItemKind kind;
  std::uint32_t index;  // defined-item position (imports: position in the import list)
};

const char* item_name(ItemKind k) {
  switch (k) {
    case ItemKind::Function: return "function";
    case ItemKind::Type: return "type";
    case ItemKind::Custom: return "custom";
    case ItemKind::Import: return "import";
    case ItemKind::Table: return "table";
    case ItemKind::Memory: return "memory";
    case ItemKind::Global: return "global";
    case ItemKind::Data: return "data";
    case ItemKind::Element: return "element";
  }
  return "?";
}

struct References {
  std::set<std::uint32_t> funcs, globals, types;
  bool call_indirect = false;
  bool memory_instr = false;
  bool table_exported = false;
  bool memory_exported = false;
};

References collect_references(const WasmModule& m) {
  References r;
  for_each_instr(m, [&](const Instruction& in) {
    switch (in.op) {
      case Opcode::Call: r.funcs.insert(in.imm); break;
      case Opcode::CallIndirect:
        r.call_indirect = true;
        r.types.insert(in.imm);
        break;
      case Opcode::GlobalGet:
      case Opcode::GlobalSet: r.globals.insert(in.imm); break;
      default:
        if (uses_memory(in.op)) r.memory_instr = true;
    }
  });
  for (const auto& e : m.exports) {
    switch (e.kind) {
      case ExternKind::Func: r.funcs.insert(e.index); break;
      case ExternKind::Global: r.globals.insert(e.index); break;
      case ExternKind::Table: r.table_exported = true; break;
      case ExternKind::Memory: r.memory_exported = true; break;
    }
  }
  for (const auto& el : m.elements) r.funcs.insert(el.funcs.begin(), el.funcs.end());
  if (m.start) r.funcs.insert(*m.start);
  auto note = [&](const ConstExpr& c) {
    if (c.instr.op == Opcode::GlobalGet) r.globals.insert(c.instr.imm);
  };
  for (const auto& g : m.globals) note(g.init);
  for (const auto& d : m.data) note(d.offset);
  for (const auto& el : m.elements) note(el.offset);
  for (const auto& f : m.functions) r.types.insert(f.type);
  for (const auto& imp : m.imports) {
    if (auto* t = std::get_if<std::uint32_t>(&imp.desc)) r.types.insert(*t);
  }
  return r;
}

std::vector<DeadItem> find_dead(const WasmModule& m) {
  const References r = collect_references(m);
  std::vector<DeadItem> out;
  const std::uint32_t nfi = m.num_imported(ExternKind::Func);
  const std::uint32_t ngi = m.num_imported(ExternKind::Global);

  for (std::uint32_t i = 0; i < m.functions.size(); ++i) {
    if (!r.funcs.count(nfi + i)) out.push_back({ItemKind::Function, i});
  }
  for (std::uint32_t i = 0; i < m.types.size(); ++i) {
    if (!r.types.count(i)) out.push_back({ItemKind::Type, i});
  }
  for (std::uint32_t i = 0; i < m.customs.size(); ++i) out.push_back({ItemKind::Custom, i});

  const bool table_unobserved = !r.call_indirect && !r.table_exported;
  const bool memory_free = !r.memory_instr && m.data.empty() && !r.memory_exported;
  std::uint32_t fi = 0, gi = 0;
  for (std::uint32_t i = 0; i < m.imports.size(); ++i) {
    bool dead = false;
    switch (m.imports[i].kind()) {
      case ExternKind::Func: dead = !r.funcs.count(fi++); break;
      case ExternKind::Global: dead = !r.globals.count(gi++); break;
      case ExternKind::Table: dead = table_unobserved && m.elements.empty(); break;
      case ExternKind::Memory: dead = memory_free; break;
    }
    if (dead) out.push_back({ItemKind::Import, i});
  }
  if (!m.tables.empty() && table_unobserved && m.elements.empty()) out.push_back({ItemKind::Table, 0});
  // The memory snapshot would shrink unless the memory starts empty.
  if (!m.memories.empty() && memory_free && m.memories[0].limits.min == 0) out.push_back({ItemKind::Memory, 0});
  for (std::uint32_t i = 0; i < m.globals.size(); ++i) {
    if (!r.globals.count(ngi + i)) out.push_back({ItemKind::Global, i});
  }

  // Zero-filled data that no earlier segment overlaps and that stays in bounds.
  const auto mem = m.memory_limits();
  for (std::uint32_t i = 0; i < m.data.size(); ++i) {
    const auto& d = m.data[i];
    const auto off = const_offset(d.offset);
    if (!off || !mem) continue;
    if (*off + d.bytes.size() > std::uint64_t(mem->min) * 65536) continue;
    if (!std::all_of(d.bytes.begin(), d.bytes.end(), [](std::uint8_t b) { return b == 0; })) continue;
    bool overlapped = false;
    for (std::uint32_t j = 0; j < i && !overlapped; ++j) {
      const auto o = const_offset(m.data[j].offset);
      if (!o) {
        overlapped = true;
      } else if (!d.bytes.empty() && *o < *off + d.bytes.size() && *off < *o + m.data[j].bytes.size()) {
        overlapped = true;
      }
    }
    if (!overlapped) out.push_back({ItemKind::Data, i});
  }

  const auto table = m.table_limits();
  if (table_unobserved && !m.tables.empty()) {
    for (std::uint32_t i = 0; i < m.elements.size(); ++i) {
      const auto& el = m.elements[i];
      const auto off = const_offset(el.offset);
      if (off && table && *off + el.funcs.size() <= table->min) out.push_back({ItemKind::Element, i});
    }
  }
  return out;
}

void remove_item(WasmModule& m, const DeadItem& item) {
  switch (item.kind) {
    case ItemKind::Function:
      m.functions.erase(m.functions.begin() + item.index);
      remap_funcs(m, m.num_imported(ExternKind::Func) + item.index);
      break;
    case ItemKind::Type:
      m.types.erase(m.types.begin() + item.index);
      remap_types(m, item.index);
      break;
    case ItemKind::Custom:
      m.customs.erase(m.customs.begin() + item.index);
      break;
    case ItemKind::Import: {
      const ExternKind kind = m.imports[item.index].kind();
      std::uint32_t pos = 0;
      for (std::uint32_t i = 0; i < item.index; ++i) pos += m.imports[i].kind() == kind;
      m.imports.erase(m.imports.begin() + item.index);
      if (kind == ExternKind::Func) remap_funcs(m, pos);
      if (kind == ExternKind::Global) remap_globals(m, pos);
      break;
    }
    case ItemKind::Table:
      m.tables.clear();
      break;
    case ItemKind::Memory:
      m.memories.clear();
      break;
    case ItemKind::Global:
      m.globals.erase(m.globals.begin() + item.index);
      remap_globals(m, m.num_imported(ExternKind::Global) + item.index);
      break;
    case ItemKind::Data:
      m.data.erase(m.data.begin() + item.index);
      break;
    case ItemKind::Element:
      m.elements.erase(m.elements.begin() + item.index);
      break;
  }
}

std::string random_name(Rng& rng, std::size_t len) {
  static constexpr char kChars[] = "abcdefghijklmnopqrstuvwxyz0123456789_";
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s.push_back(kChars[rng.below(sizeof kChars - 1)]);
  return s;
}

// New length within +-50% of the old one; empty inputs may grow up to 8.
std::size_t vary_length(Rng& rng, std::size_t len) {
  if (len == 0) return rng.below(9);
  const std::size_t lo = len / 2;
  const std::size_t hi = len + len / 2;
  return lo + rng.below(hi - lo + 1);
}

struct CodeSite {
  std::uint32_t func;  // position in m.functions
  std::uint32_t pc;
};

std::vector<CodeSite> find_opcode(const WasmModule& m, Opcode op) {
  std::vector<CodeSite> out;
  for (std::uint32_t f = 0; f < m.functions.size(); ++f) {
    const auto& code = m.functions[f].body.code;
    for (std::uint32_t pc = 0; pc < code.size(); ++pc) {
      if (code[pc].op == op) out.push_back({f, pc});
    }
  }
  return out;
}

std::string code_site(const WasmModule& m, const CodeSite& s) {
  return "func " + std::to_string(m.num_imported(ExternKind::Func) + s.func) + " @" + std::to_string(s.pc);
}

// Copies a loop body with branches that leave the loop pushed out by one level.
std::vector<Instruction> shift_outer_branches(const std::vector<Instruction>& body) {
  std::vector<Instruction> out;
  out.reserve(body.size());
  std::uint32_t depth = 0;
  for (Instruction in : body) {
    switch (in.op) {
      case Opcode::Block:
      case Opcode::Loop:
      case Opcode::If:
        ++depth;
        break;
      case Opcode::End:
        --depth;
        break;
      case Opcode::Br:
      case Opcode::BrIf:
        if (in.imm > depth) ++in.imm;
        break;
      case Opcode::BrTable:
        for (auto& t : in.targets) {
          if (t > depth) ++t;
        }
        if (in.imm > depth) ++in.imm;
        break;
      default:
        break;
    }
    out.push_back(std::move(in));
  }
  return out;
}

// Mutable module-private globals that nothing reads: writes to them are
// unobservable, so their sets can take part in the global-assign rules.
std::set<std::uint32_t> write_only_globals(const WasmModule& m) {
  std::set<std::uint32_t> out;
  const std::uint32_t ngi = m.num_imported(ExternKind::Global);
  for (std::uint32_t i = 0; i < m.globals.size(); ++i) {
    if (m.globals[i].type.is_mutable) out.insert(ngi + i);
  }
  for_each_instr(m, [&](const Instruction& in) {
    if (in.op == Opcode::GlobalGet) out.erase(in.imm);
  });
  for (const auto& e : m.exports) {
    if (e.kind == ExternKind::Global) out.erase(e.index);
  }
  return out;
}

void lift_global_sets(const WasmModule& m, ExprTree& t, const std::set<std::uint32_t>& write_only,
                      GlobalBindings& bound) {
  for (auto& c : t.children) lift_global_sets(m, c, write_only, bound);
  if (t.op.kind != ExprOp::Kind::Instr || t.op.instr.op != Opcode::GlobalSet) return;
  const std::uint32_t g = t.op.instr.imm;
  if (!write_only.count(g)) return;
  std::uint32_t id = static_cast<std::uint32_t>(bound.size());
  for (const auto& [k, v] : bound) {
    if (v == g) id = k;
  }
  if (id == bound.size()) bound.push_back({id, g});
  t.op = ExprOp::placeholder(ExprOp::Kind::FreshGlobalSet, id, m.global_type(g).type);
}

struct SegmentSite {
  std::uint32_t func_index;
  Segment seg;
};

}  // namespace

std::string_view to_string(MetaRuleKind k) {
  switch (k) {
    case MetaRuleKind::AddType: return "add-type";
    case MetaRuleKind::AddFunction: return "add-function";
    case MetaRuleKind::RemoveDeadItem: return "remove-dead-item";
    case MetaRuleKind::EditCustomSection: return "edit-custom-section";
    case MetaRuleKind::IfSwap: return "if-swap";
    case MetaRuleKind::LoopUnroll: return "loop-unroll";
    case MetaRuleKind::Peephole: return "peephole";
  }
  return "?";
}

std::optional<MetaRuleKind> parse_meta_rule(std::string_view name) {
  for (auto k : kAllMetaRules) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

WasmModule apply_add_type(const WasmModule& m, Rng& rng, std::string* site) {
  WasmModule out = m;
  out.types.push_back(random_func_type(rng));
  if (site) *site = "type " + std::to_string(out.types.size() - 1);
  return out;
}

WasmModule apply_add_function(const WasmModule& m, Rng& rng, std::string* site) {
  WasmModule out = m;
  std::uint32_t type;
  if (!out.types.empty() && rng.coin()) {
    type = static_cast<std::uint32_t>(rng.below(out.types.size()));
  } else {
    out.types.push_back(random_func_type(rng));
    type = static_cast<std::uint32_t>(out.types.size() - 1);
  }
  Function f;
  f.type = type;
  if (!out.types[type].results.empty()) f.body.code.push_back(zero_const(out.types[type].results[0]));
  f.body.code.push_back(Instruction::simple(Opcode::End));
  f.body.rebuild_brackets();
  out.functions.push_back(std::move(f));
  if (site) *site = "func " + std::to_string(out.num_funcs() - 1) + " type " + std::to_string(type);
  return out;
}

std::vector<std::string> dead_items(const WasmModule& m) {
  std::vector<std::string> out;
  for (const auto& d : find_dead(m)) out.push_back(std::string(item_name(d.kind)) + ":" + std::to_string(d.index));
  return out;
}

WasmModule apply_remove_dead_item(const WasmModule& m, Rng& rng, std::string* site) {
  const auto dead = find_dead(m);
  if (dead.empty()) throw NoDeadItem();
  const DeadItem& item = dead[rng.below(dead.size())];
  WasmModule out = m;
  remove_item(out, item);
  if (site) *site = std::string(item_name(item.kind)) + ":" + std::to_string(item.index);
  return out;
}

WasmModule apply_edit_custom_section(const WasmModule& m, Rng& rng, std::string* site) {
  if (m.customs.empty()) throw NoCustomSection();
  WasmModule out = m;
  const auto i = rng.below(out.customs.size());
  CustomSection& cs = out.customs[i];
  if (rng.coin()) {
    cs.name = random_name(rng, vary_length(rng, cs.name.size()));
    if (site) *site = "custom " + std::to_string(i) + " name";
  } else {
    Bytes payload(vary_length(rng, cs.payload.size()));
    for (auto& b : payload) b = static_cast<std::uint8_t>(rng.below(256));
    cs.payload = std::move(payload);
    if (site) *site = "custom " + std::to_string(i) + " payload";
  }
  return out;
}

WasmModule apply_if_swap(const WasmModule& m, Rng& rng, std::string* site) {
  const auto sites = find_opcode(m, Opcode::If);
  if (sites.empty()) throw NoIfFound();
  const CodeSite s = sites[rng.below(sites.size())];
  WasmModule out = m;
  FuncBody& body = out.functions[s.func].body;
  const auto& code = body.code;
  const std::uint32_t p = s.pc;
  const std::uint32_t mid = body.brackets[p];
  const bool has_else = code[mid].op == Opcode::Else;
  const std::uint32_t end = has_else ? body.brackets[mid] : mid;

  std::vector<Instruction> then_arm(code.begin() + p + 1, code.begin() + mid);
  std::vector<Instruction> else_arm;
  if (has_else) {
    else_arm.assign(code.begin() + mid + 1, code.begin() + end);
  } else {
    else_arm.push_back(Instruction::simple(Opcode::Nop));
  }
  std::vector<Instruction> repl;
  repl.push_back(Instruction::simple(Opcode::I32Eqz));
  repl.push_back(code[p]);
  repl.insert(repl.end(), else_arm.begin(), else_arm.end());
  repl.push_back(Instruction::simple(Opcode::Else));
  repl.insert(repl.end(), then_arm.begin(), then_arm.end());
  repl.push_back(Instruction::simple(Opcode::End));

  std::vector<Instruction> next(code.begin(), code.begin() + p);
  next.insert(next.end(), repl.begin(), repl.end());
  next.insert(next.end(), code.begin() + end + 1, code.end());
  body.code = std::move(next);
  body.rebuild_brackets();
  if (site) *site = code_site(m, s);
  return out;
}

WasmModule apply_loop_unroll(const WasmModule& m, Rng& rng, std::string* site) {
  const auto sites = find_opcode(m, Opcode::Loop);
  if (sites.empty()) throw NoLoopFound();
  const CodeSite s = sites[rng.below(sites.size())];
  WasmModule out = m;
  FuncBody& body = out.functions[s.func].body;
  const auto& code = body.code;
  const std::uint32_t p = s.pc;
  const std::uint32_t end = body.brackets[p];
  const Instruction loop = code[p];

  const auto shifted = shift_outer_branches({code.begin() + p + 1, code.begin() + end});
  std::vector<Instruction> repl;
  repl.push_back(Instruction::make(Opcode::Block, loop.imm));
  repl.push_back(Instruction::block(Opcode::Block, std::nullopt));
  repl.insert(repl.end(), shifted.begin(), shifted.end());
  repl.push_back(Instruction::with_index(Opcode::Br, 1));
  repl.push_back(Instruction::simple(Opcode::End));
  repl.push_back(loop);
  repl.insert(repl.end(), shifted.begin(), shifted.end());
  repl.push_back(Instruction::simple(Opcode::End));
  repl.push_back(Instruction::simple(Opcode::End));

  std::vector<Instruction> next(code.begin(), code.begin() + p);
  next.insert(next.end(), repl.begin(), repl.end());
  next.insert(next.end(), code.begin() + end + 1, code.end());
  body.code = std::move(next);
  body.rebuild_brackets();
  if (site) *site = code_site(m, s);
  return out;
}

WasmModule apply_peephole(const WasmModule& m, Rng& rng, const PeepholeConfig& cfg, std::string* site) {
  std::vector<SegmentSite> segments;
  const std::uint32_t nfi = m.num_imported(ExternKind::Func);
  for (std::uint32_t f = 0; f < m.functions.size(); ++f) {
    for (auto& seg : extract_segments(m, nfi + f)) {
      if (seg.purity == Purity::Deterministic) segments.push_back({nfi + f, seg});
    }
  }
  const auto& rules = cfg.rules ? *cfg.rules : builtin_rules();
  while (!segments.empty()) {
    const auto pick = rng.below(segments.size());
    const SegmentSite s = segments[pick];
    ExprTree tree;
    try {
      tree = segment_to_expr(m, s.seg);
    } catch (const UnsupportedShape&) {
      segments.erase(segments.begin() + static_cast<std::ptrdiff_t>(pick));
      continue;
    }
    GlobalBindings bound;
    lift_global_sets(m, tree, write_only_globals(m), bound);
    EGraphConfig ecfg = cfg.egraph;
    for (;;) {
      try {
        auto [g, root] = egraph_build(tree, rules, rng, ecfg);
        ExprTree variant = traverse(g, root, cfg.depth, rng);
        WasmModule out = m;
        splice_expr(out, s.func_index, s.seg.start, s.seg.end, variant, bound);
        if (site) {
          *site = "func " + std::to_string(s.func_index) + " [" + std::to_string(s.seg.start) + "," +
                  std::to_string(s.seg.end) + ")";
        }
        return out;
      } catch (const BudgetExceeded&) {
        if (ecfg.passes <= 1) break;
        --ecfg.passes;
      }
    }
    segments.erase(segments.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  throw NoEligibleSegment();
}

WasmModule apply_meta_rule(MetaRuleKind k, const WasmModule& m, Rng& rng, const PeepholeConfig& peephole,
                           std::string* site) {
  WasmModule out;
  switch (k) {
    case MetaRuleKind::AddType: out = apply_add_type(m, rng, site); break;
    case MetaRuleKind::AddFunction: out = apply_add_function(m, rng, site); break;
    case MetaRuleKind::RemoveDeadItem: out = apply_remove_dead_item(m, rng, site); break;
    case MetaRuleKind::EditCustomSection: out = apply_edit_custom_section(m, rng, site); break;
    case MetaRuleKind::IfSwap: out = apply_if_swap(m, rng, site); break;
    case MetaRuleKind::LoopUnroll: out = apply_loop_unroll(m, rng, site); break;
    case MetaRuleKind::Peephole: out = apply_peephole(m, rng, peephole, site); break;
  }
  normalize_layout(out);
  return out;
}

}  // namespace wmutate
