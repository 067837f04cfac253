#include "wmutate/validator.hpp"

#include <optional>
#include <set>
#include <sstream>

namespace wmutate {
namespace {

constexpr std::uint32_t kMaxPages = 65536;

// nullopt on the operand stack is the polymorphic "unknown" type of
// unreachable code.
using Operand = std::optional<ValType>;

struct Frame {
  Opcode op;
  std::optional<ValType> result;
  std::size_t height;
  bool unreachable = false;
  bool saw_else = false;
};

class BodyChecker {
 public:
  BodyChecker(const WasmModule& m, std::uint32_t func_index, const Function& f, ValidationReport& report)
      : m_(m), func_index_(func_index), f_(f), report_(report) {}

  void run() {
    const FuncType& ft = m_.types[f_.type];
    const std::optional<ValType> result = ft.results.empty() ? std::nullopt : std::optional(ft.results[0]);
    nlocals_ = m_.total_locals(f_);
    frames_.push_back(Frame{Opcode::Block, result, 0});
    const auto& code = f_.body.code;
    for (pc_ = 0; pc_ < code.size(); ++pc_) {
      if (frames_.empty()) {
        error("instructions after the final end");
        return;
      }
      if (!step(code[pc_])) return;
    }
    if (!frames_.empty()) error("function body not terminated");
  }

 private:
  void error(const std::string& msg) {
    report_.diagnostics.push_back({"func " + std::to_string(func_index_) + " @" + std::to_string(pc_), msg});
  }

  static std::string name(Operand t) { return t ? std::string(to_string(*t)) : "unknown"; }

  void push(Operand t) { stack_.push_back(t); }

  // Returns false after reporting an error.
  bool pop(Operand expect, Operand* got = nullptr) {
    Frame& fr = frames_.back();
    if (stack_.size() == fr.height) {
      if (fr.unreachable) {
        if (got) *got = expect;
        return true;
      }
      error("type mismatch: expected " + name(expect) + " but the operand stack is empty");
      return false;
    }
    const Operand actual = stack_.back();
    stack_.pop_back();
    if (expect && actual && *expect != *actual) {
      error("type mismatch: expected " + name(expect) + ", found " + name(actual));
      return false;
    }
    if (got) *got = actual ? actual : expect;
    return true;
  }

  bool label_types(std::uint32_t depth, std::optional<ValType>& out) {
    if (depth >= frames_.size()) {
      error("branch label " + std::to_string(depth) + " out of range");
      return false;
    }
    const Frame& fr = frames_[frames_.size() - 1 - depth];
    out = fr.op == Opcode::Loop ? std::nullopt : fr.result;
    return true;
  }

  void set_unreachable() {
    stack_.resize(frames_.back().height);
    frames_.back().unreachable = true;
  }

  bool end_frame_check() {
    Frame& fr = frames_.back();
    if (fr.result && !pop(*fr.result)) return false;
    if (stack_.size() != fr.height) {
      error("block leaves " + std::to_string(stack_.size() - fr.height) + " extra value(s) on the stack");
      return false;
    }
    return true;
  }

  bool check_memory(const Instruction& in) {
    if (m_.num_memories() == 0) {
      error(std::string(to_string(in.op)) + " without a memory");
      return false;
    }
    if (is_load(in.op) || is_store(in.op)) {
      if (in.imm > natural_alignment(in.op)) {
        error("alignment must not be larger than natural");
        return false;
      }
    }
    return true;
  }

  bool step(const Instruction& in) {
    const OpcodeInfo& oi = info(in.op);
    if (!oi.valid) {
      error("invalid opcode");
      return false;
    }
    if (oi.fixed) {
      if (oi.imm == ImmKind::MemArg || oi.imm == ImmKind::MemIndex) {
        if (!check_memory(in)) return false;
      }
      for (int i = oi.num_pops - 1; i >= 0; --i) {
        if (!pop(oi.pops[i])) return false;
      }
      if (oi.push) push(*oi.push);
      return true;
    }
    switch (in.op) {
      case Opcode::Unreachable:
        set_unreachable();
        return true;
      case Opcode::Block:
      case Opcode::Loop:
      case Opcode::If: {
        if (in.imm != kEmptyBlock && !valtype_from_byte(static_cast<std::uint8_t>(in.imm))) {
          error("invalid block type");
          return false;
        }
        if (in.op == Opcode::If && !pop(ValType::I32)) return false;
        frames_.push_back(Frame{in.op, in.block_result(), stack_.size()});
        return true;
      }
      case Opcode::Else: {
        Frame& fr = frames_.back();
        if (fr.op != Opcode::If || fr.saw_else) {
          error("else without matching if");
          return false;
        }
        if (!end_frame_check()) return false;
        fr.saw_else = true;
        fr.unreachable = false;
        return true;
      }
      case Opcode::End: {
        Frame fr = frames_.back();
        if (!end_frame_check()) return false;
        if (fr.op == Opcode::If && !fr.saw_else && fr.result) {
          error("if without else must not produce a value");
          return false;
        }
        frames_.pop_back();
        if (!frames_.empty() && fr.result) push(*fr.result);
        return true;
      }
      case Opcode::Br: {
        std::optional<ValType> t;
        if (!label_types(in.imm, t)) return false;
        if (t && !pop(*t)) return false;
        set_unreachable();
        return true;
      }
      case Opcode::BrIf: {
        std::optional<ValType> t;
        if (!label_types(in.imm, t)) return false;
        if (!pop(ValType::I32)) return false;
        if (t) {
          if (!pop(*t)) return false;
          push(*t);
        }
        return true;
      }
      case Opcode::BrTable: {
        std::optional<ValType> t;
        if (!label_types(in.imm, t)) return false;
        for (auto target : in.targets) {
          std::optional<ValType> u;
          if (!label_types(target, u)) return false;
          if (u != t) {
            error("br_table targets have inconsistent types");
            return false;
          }
        }
        if (!pop(ValType::I32)) return false;
        if (t && !pop(*t)) return false;
        set_unreachable();
        return true;
      }
      case Opcode::Return: {
        const auto& results = m_.types[f_.type].results;
        if (!results.empty() && !pop(results[0])) return false;
        set_unreachable();
        return true;
      }
      case Opcode::Call: {
        if (in.imm >= m_.num_funcs()) {
          error("call to function index " + std::to_string(in.imm) + " out of range (" +
                std::to_string(m_.num_funcs()) + " functions)");
          return false;
        }
        return apply_call(m_.func_type(in.imm));
      }
      case Opcode::CallIndirect: {
        if (m_.num_tables() == 0) {
          error("call_indirect without a table");
          return false;
        }
        if (in.imm >= m_.types.size()) {
          error("call_indirect type index out of range");
          return false;
        }
        if (!pop(ValType::I32)) return false;
        return apply_call(m_.types[in.imm]);
      }
      case Opcode::Drop:
        return pop(std::nullopt);
      case Opcode::Select: {
        if (!pop(ValType::I32)) return false;
        Operand a, b;
        if (!pop(std::nullopt, &b)) return false;
        if (!pop(b, &a)) return false;
        if (a && b && *a != *b) {
          error("select operands differ in type");
          return false;
        }
        push(a ? a : b);
        return true;
      }
      case Opcode::LocalGet:
      case Opcode::LocalSet:
      case Opcode::LocalTee: {
        if (in.imm >= nlocals_) {
          error("local index " + std::to_string(in.imm) + " out of range");
          return false;
        }
        const ValType t = m_.local_type(f_, in.imm);
        if (in.op == Opcode::LocalGet) {
          push(t);
          return true;
        }
        if (!pop(t)) return false;
        if (in.op == Opcode::LocalTee) push(t);
        return true;
      }
      case Opcode::GlobalGet:
      case Opcode::GlobalSet: {
        if (in.imm >= m_.num_globals()) {
          error("global index " + std::to_string(in.imm) + " out of range");
          return false;
        }
        const GlobalType g = m_.global_type(in.imm);
        if (in.op == Opcode::GlobalGet) {
          push(g.type);
          return true;
        }
        if (!g.is_mutable) {
          error("global.set on immutable global " + std::to_string(in.imm));
          return false;
        }
        return pop(g.type);
      }
      default:
        error("unhandled opcode");
        return false;
    }
  }

  bool apply_call(const FuncType& t) {
    for (std::size_t i = t.params.size(); i-- > 0;) {
      if (!pop(t.params[i])) return false;
    }
    for (auto r : t.results) push(r);
    return true;
  }

  const WasmModule& m_;
  std::uint32_t func_index_;
  const Function& f_;
  ValidationReport& report_;
  std::vector<Operand> stack_;
  std::vector<Frame> frames_;
  std::uint32_t nlocals_ = 0;
  std::size_t pc_ = 0;
};

void check_limits(const Limits& l, std::uint32_t cap, const std::string& where, ValidationReport& r) {
  if (l.max && *l.max < l.min) r.diagnostics.push_back({where, "limits maximum below minimum"});
  if (l.min > cap || (l.max && *l.max > cap)) r.diagnostics.push_back({where, "limits exceed range"});
}

// Returns the type a constant expression produces, or nullopt after reporting.
std::optional<ValType> const_expr_type(const WasmModule& m, const ConstExpr& e, const std::string& where,
                                       ValidationReport& r) {
  switch (e.instr.op) {
    case Opcode::I32Const: return ValType::I32;
    case Opcode::I64Const: return ValType::I64;
    case Opcode::F32Const: return ValType::F32;
    case Opcode::F64Const: return ValType::F64;
    case Opcode::GlobalGet: {
      // MVP: only imported immutable globals may be referenced.
      const std::uint32_t imported = m.num_imported(ExternKind::Global);
      if (e.instr.imm >= imported) {
        r.diagnostics.push_back({where, "constant expression may only read imported globals"});
        return std::nullopt;
      }
      const GlobalType g = m.global_type(e.instr.imm);
      if (g.is_mutable) {
        r.diagnostics.push_back({where, "constant expression reads a mutable global"});
        return std::nullopt;
      }
      return g.type;
    }
    default:
      r.diagnostics.push_back({where, "non-constant instruction in constant expression"});
      return std::nullopt;
  }
}

}  // namespace

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& d : diagnostics) os << d.location << ": " << d.message << '\n';
  return os.str();
}

ValidationReport static_validate(const WasmModule& m) {
  ValidationReport r;
  auto diag = [&](const std::string& where, const std::string& msg) { r.diagnostics.push_back({where, msg}); };

  for (std::size_t i = 0; i < m.types.size(); ++i) {
    if (m.types[i].results.size() > 1) diag("type " + std::to_string(i), "more than one result");
  }
  for (std::size_t i = 0; i < m.imports.size(); ++i) {
    const auto& imp = m.imports[i];
    const std::string where = "import " + std::to_string(i);
    switch (imp.kind()) {
      case ExternKind::Func:
        if (std::get<0>(imp.desc) >= m.types.size()) diag(where, "type index out of range");
        break;
      case ExternKind::Table: check_limits(std::get<TableType>(imp.desc).limits, UINT32_MAX, where, r); break;
      case ExternKind::Memory: check_limits(std::get<MemoryType>(imp.desc).limits, kMaxPages, where, r); break;
      case ExternKind::Global:
        break;
    }
  }
  for (std::size_t i = 0; i < m.functions.size(); ++i) {
    if (m.functions[i].type >= m.types.size()) diag("func " + std::to_string(i), "type index out of range");
  }
  if (m.num_tables() > 1) diag("module", "multiple tables");
  if (m.num_memories() > 1) diag("module", "multiple memories");
  for (std::size_t i = 0; i < m.tables.size(); ++i) {
    check_limits(m.tables[i].limits, UINT32_MAX, "table " + std::to_string(i), r);
  }
  for (std::size_t i = 0; i < m.memories.size(); ++i) {
    check_limits(m.memories[i].limits, kMaxPages, "memory " + std::to_string(i), r);
  }
  const std::uint32_t imported_globals = m.num_imported(ExternKind::Global);
  for (std::size_t i = 0; i < m.globals.size(); ++i) {
    const std::string where = "global " + std::to_string(imported_globals + i);
    auto t = const_expr_type(m, m.globals[i].init, where, r);
    if (t && *t != m.globals[i].type.type) diag(where, "initializer type mismatch");
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < m.exports.size(); ++i) {
    const auto& e = m.exports[i];
    const std::string where = "export " + std::to_string(i);
    if (!names.insert(e.name).second) diag(where, "duplicate export name \"" + e.name + "\"");
    std::uint32_t limit = 0;
    switch (e.kind) {
      case ExternKind::Func: limit = m.num_funcs(); break;
      case ExternKind::Table: limit = m.num_tables(); break;
      case ExternKind::Memory: limit = m.num_memories(); break;
      case ExternKind::Global: limit = m.num_globals(); break;
    }
    if (e.index >= limit) diag(where, "index out of range");
  }
  if (m.start) {
    if (*m.start >= m.num_funcs()) {
      diag("start", "function index out of range");
    } else {
      const FuncType& t = m.func_type(*m.start);
      if (!t.params.empty() || !t.results.empty()) diag("start", "start function must have type [] -> []");
    }
  }
  for (std::size_t i = 0; i < m.elements.size(); ++i) {
    const auto& seg = m.elements[i];
    const std::string where = "elem " + std::to_string(i);
    if (seg.table >= m.num_tables()) diag(where, "table index out of range");
    auto t = const_expr_type(m, seg.offset, where, r);
    if (t && *t != ValType::I32) diag(where, "offset must be i32");
    for (auto f : seg.funcs) {
      if (f >= m.num_funcs()) diag(where, "function index " + std::to_string(f) + " out of range");
    }
  }
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    const auto& seg = m.data[i];
    const std::string where = "data " + std::to_string(i);
    if (seg.memory >= m.num_memories()) diag(where, "memory index out of range");
    auto t = const_expr_type(m, seg.offset, where, r);
    if (t && *t != ValType::I32) diag(where, "offset must be i32");
  }

  const std::uint32_t imported_funcs = m.num_imported(ExternKind::Func);
  for (std::size_t i = 0; i < m.functions.size(); ++i) {
    const Function& f = m.functions[i];
    if (f.type >= m.types.size()) continue;
    std::uint64_t nlocals = m.types[f.type].params.size();
    for (const auto& l : f.body.locals) nlocals += l.count;
    if (nlocals > 50000) {
      diag("func " + std::to_string(imported_funcs + i), "too many locals");
      continue;
    }
    BodyChecker(m, imported_funcs + static_cast<std::uint32_t>(i), f, r).run();
  }
  return r;
}

}  // namespace wmutate
