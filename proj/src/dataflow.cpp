#include "wmutate/dataflow.hpp"

#include <algorithm>

namespace wmutate {
namespace {

struct Pending {
  ExprNode node;
  bool clean = true;
};

struct Effect {
  std::uint32_t pops = 0;
  std::optional<ValType> push;
  bool polymorphic = false;  // stack is unconstrained afterwards
};

class Simulator {
 public:
  Simulator(const WasmModule& m, const Function& f, std::uint32_t func_index)
      : m_(m), f_(f), func_index_(func_index) {}

  // Whole-body analysis for extract_segments.
  std::vector<Segment> segments() {
    const auto& code = f_.body.code;
    const auto& ft = m_.types[f_.type];
    frames_.push_back(ft.results.empty() ? std::nullopt : std::optional(ft.results[0]));
    for (std::uint32_t pc = 0; pc < code.size(); ++pc) {
      const Instruction& in = code[pc];
      switch (in.op) {
        case Opcode::Block:
        case Opcode::Loop:
        case Opcode::If:
          finish_region();
          frames_.push_back(in.op == Opcode::Loop ? std::nullopt : in.block_result());
          unreachable_ = false;
          break;
        case Opcode::Else:
          finish_region();
          unreachable_ = false;
          break;
        case Opcode::End:
          finish_region();
          frames_.pop_back();
          unreachable_ = false;
          break;
        default:
          step(pc);
          break;
      }
    }
    finish_region();
    std::sort(out_.begin(), out_.end(), [](const Segment& a, const Segment& b) {
      return a.start != b.start ? a.start < b.start : a.end > b.end;
    });
    return out_;
  }

  // Analysis of one range for segment_to_expr.
  ExprTree expression(std::uint32_t begin, std::uint32_t end) {
    const auto& code = f_.body.code;
    if (begin >= end || end > code.size()) throw UnsupportedShape("empty or out-of-range segment");
    for (std::uint32_t pc = begin; pc < end; ++pc) {
      const Opcode op = code[pc].op;
      if (op == Opcode::Block || op == Opcode::Loop || op == Opcode::If || op == Opcode::Else || op == Opcode::End) {
        throw UnsupportedShape("segment crosses a structured construct");
      }
      if (is_taint_op(op)) throw UnsupportedShape("segment contains a tainted instruction");
      step(pc);
    }
    for (auto& p : stack_) roots_.push_back(std::move(p));
    stack_.clear();
    std::size_t values = 0;
    for (const auto& r : roots_) {
      if (!r.clean) throw UnsupportedShape("segment consumes values from outside its range");
      values += r.node.type.has_value();
    }
    if (values > 1) throw UnsupportedShape("segment leaves more than one value");
    std::sort(roots_.begin(), roots_.end(), [](const Pending& a, const Pending& b) { return a.node.begin < b.node.begin; });
    // Several roots nest to the left: container(container(a, b), c).
    ExprNode acc = std::move(roots_[0].node);
    for (std::size_t i = 1; i < roots_.size(); ++i) {
      ExprNode c;
      c.op = ExprOp::container();
      c.begin = acc.begin;
      c.end = roots_[i].node.end;
      c.type = acc.type ? acc.type : roots_[i].node.type;
      c.children.push_back(std::move(acc));
      c.children.push_back(std::move(roots_[i].node));
      acc = std::move(c);
    }
    return acc;
  }

 private:
  Effect effect(const Instruction& in) const {
    const OpcodeInfo& oi = info(in.op);
    if (oi.fixed) return Effect{oi.num_pops, oi.push};
    switch (in.op) {
      case Opcode::Unreachable: return Effect{0, std::nullopt, true};
      case Opcode::Br: return Effect{label_type(in.imm) ? 1u : 0u, std::nullopt, true};
      case Opcode::BrIf: {
        const auto t = label_type(in.imm);
        return Effect{t ? 2u : 1u, t};
      }
      case Opcode::BrTable: return Effect{label_type(in.imm) ? 2u : 1u, std::nullopt, true};
      case Opcode::Return: {
        const auto& r = m_.types[f_.type].results;
        return Effect{static_cast<std::uint32_t>(r.size()), std::nullopt, true};
      }
      case Opcode::Call: {
        const FuncType& t = m_.func_type(in.imm);
        return Effect{static_cast<std::uint32_t>(t.params.size()),
                      t.results.empty() ? std::nullopt : std::optional(t.results[0])};
      }
      case Opcode::CallIndirect: {
        const FuncType& t = m_.types.at(in.imm);
        return Effect{static_cast<std::uint32_t>(t.params.size()) + 1,
                      t.results.empty() ? std::nullopt : std::optional(t.results[0])};
      }
      case Opcode::Drop: return Effect{1, std::nullopt};
      case Opcode::Select: return Effect{3, std::nullopt};  // type fixed up from operands
      case Opcode::LocalGet: return Effect{0, m_.local_type(f_, in.imm)};
      case Opcode::LocalSet: return Effect{1, std::nullopt};
      case Opcode::LocalTee: return Effect{1, m_.local_type(f_, in.imm)};
      case Opcode::GlobalGet: return Effect{0, m_.global_type(in.imm).type};
      case Opcode::GlobalSet: return Effect{1, std::nullopt};
      default: return Effect{};
    }
  }

  std::optional<ValType> label_type(std::uint32_t depth) const {
    if (depth >= frames_.size()) return std::nullopt;
    return frames_[frames_.size() - 1 - depth];
  }

  void emit(std::uint32_t begin, std::uint32_t end, Purity p, std::optional<ValType> result) {
    out_.push_back(Segment{func_index_, begin, end, p, result});
  }

  // Clean operands of a node that turned out unclean are maximal
  // deterministic subtrees.
  void emit_clean_children(std::vector<Pending>& operands) {
    for (auto& c : operands) {
      if (c.clean) emit(c.node.begin, c.node.end, Purity::Deterministic, c.node.type);
    }
  }

  void step(std::uint32_t pc) {
    const Instruction& in = f_.body.code[pc];
    Effect e = effect(in);
    std::vector<Pending> operands;
    bool missing = false;
    const std::size_t take = std::min<std::size_t>(e.pops, stack_.size());
    if (take < e.pops) missing = true;
    operands.reserve(take);
    for (std::size_t i = stack_.size() - take; i < stack_.size(); ++i) operands.push_back(std::move(stack_[i]));
    stack_.resize(stack_.size() - take);

    Pending p;
    p.node.op = ExprOp::of(in);
    p.node.begin = operands.empty() ? pc : operands.front().node.begin;
    p.node.end = pc + 1;
    p.node.type = e.push;
    if (in.op == Opcode::Select) {
      // With operands missing the type is unknown; the node is unclean anyway.
      p.node.type = operands.size() >= 2 ? operands[0].node.type : std::nullopt;
      if (!p.node.type) p.node.type = ValType::I32;
    }
    p.clean = !missing && !unreachable_ && !is_taint_op(in.op) &&
              std::all_of(operands.begin(), operands.end(), [](const Pending& c) { return c.clean; });
    if (!p.clean) emit_clean_children(operands);
    for (auto& c : operands) p.node.children.push_back(std::move(c.node));

    if (e.polymorphic) {
      // Everything pending is dead weight for the branch; close the region.
      roots_.push_back(std::move(p));
      finish_region();
      unreachable_ = true;
      return;
    }
    if (p.node.type) {
      stack_.push_back(std::move(p));
    } else if (!stack_.empty()) {
      attach(std::move(p));
    } else {
      roots_.push_back(std::move(p));
    }
  }

  // A statement executed while a value is pending becomes part of it.
  void attach(Pending stmt) {
    Pending& top = stack_.back();
    Pending c;
    c.node.op = ExprOp::container();
    c.node.type = top.node.type;
    c.node.begin = top.node.begin;
    c.node.end = stmt.node.end;
    c.clean = top.clean && stmt.clean;
    if (!c.clean) {
      if (top.clean) emit(top.node.begin, top.node.end, Purity::Deterministic, top.node.type);
      if (stmt.clean) emit(stmt.node.begin, stmt.node.end, Purity::Deterministic, std::nullopt);
    }
    c.node.children.push_back(std::move(top.node));
    c.node.children.push_back(std::move(stmt.node));
    top = std::move(c);
  }

  void finish_region() {
    for (auto& p : stack_) roots_.push_back(std::move(p));
    stack_.clear();
    std::sort(roots_.begin(), roots_.end(), [](const Pending& a, const Pending& b) { return a.node.begin < b.node.begin; });
    std::size_t i = 0;
    while (i < roots_.size()) {
      if (!roots_[i].clean) {
        emit(roots_[i].node.begin, roots_[i].node.end, Purity::Tainted, roots_[i].node.type);
        ++i;
        continue;
      }
      // Maximal run of clean roots holding at most one value.
      std::size_t j = i;
      std::optional<ValType> value;
      while (j < roots_.size() && roots_[j].clean) {
        if (roots_[j].node.type) {
          if (value) break;
          value = roots_[j].node.type;
        }
        ++j;
      }
      emit(roots_[i].node.begin, roots_[j - 1].node.end, Purity::Deterministic, value);
      i = j;
    }
    roots_.clear();
  }

  const WasmModule& m_;
  const Function& f_;
  std::uint32_t func_index_;
  std::vector<std::optional<ValType>> frames_;  // branch value type per open construct
  std::vector<Pending> stack_;
  std::vector<Pending> roots_;
  std::vector<Segment> out_;
  bool unreachable_ = false;
};

void linearize(const ExprNode& n, FreshResolver* fresh, std::vector<Instruction>& out) {
  for (const auto& c : n.children) linearize(c, fresh, out);
  switch (n.op.kind) {
    case ExprOp::Kind::Instr:
      out.push_back(n.op.instr);
      break;
    case ExprOp::Kind::Container:
      break;
    case ExprOp::Kind::FreshTee:
    case ExprOp::Kind::FreshGet:
      if (!fresh) throw std::logic_error("expression uses a fresh local but no resolver was given");
      out.push_back(Instruction::with_index(n.op.kind == ExprOp::Kind::FreshTee ? Opcode::LocalTee : Opcode::LocalGet,
                                            fresh->local(n.op.fresh, n.op.fresh_type)));
      break;
    case ExprOp::Kind::FreshGlobalSet:
      if (!fresh) throw std::logic_error("expression uses a fresh global but no resolver was given");
      out.push_back(Instruction::with_index(Opcode::GlobalSet, fresh->global(n.op.fresh, n.op.fresh_type)));
      break;
  }
}

class ModuleResolver : public FreshResolver {
 public:
  ModuleResolver(WasmModule& m, Function& f, const GlobalBindings& globals) : m_(m), f_(f), globals_(globals) {}

  std::uint32_t local(std::uint32_t id, ValType t) override {
    for (const auto& [k, v] : locals_) {
      if (k == id) return v;
    }
    const std::uint32_t index = m_.total_locals(f_);
    f_.body.locals.push_back(LocalDecl{1, t});
    locals_.push_back({id, index});
    return index;
  }

  std::uint32_t global(std::uint32_t id, ValType t) override {
    for (const auto& [k, v] : globals_) {
      if (k == id) return v;
    }
    const std::uint32_t index = m_.num_globals();
    m_.globals.push_back(Global{GlobalType{t, true}, ConstExpr{zero_const(t)}});
    globals_.push_back({id, index});
    return index;
  }

 private:
  WasmModule& m_;
  Function& f_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> locals_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> globals_;
};

}  // namespace

std::size_t ExprNode::size() const {
  std::size_t n = 1;
  for (const auto& c : children) n += c.size();
  return n;
}

std::size_t ExprNode::height() const {
  std::size_t h = 0;
  for (const auto& c : children) h = std::max(h, c.height());
  return h + 1;
}

bool is_taint_op(Opcode op) {
  switch (op) {
    case Opcode::Call:
    case Opcode::CallIndirect:
    case Opcode::MemoryGrow:
    case Opcode::Unreachable:
    case Opcode::Br:
    case Opcode::BrIf:
    case Opcode::BrTable:
    case Opcode::Return:
      return true;
    default:
      return false;
  }
}

std::vector<Segment> extract_segments(const WasmModule& m, std::uint32_t func_index) {
  const Function* f = m.defined_function(func_index);
  if (!f) return {};
  return Simulator(m, *f, func_index).segments();
}

ExprTree segment_to_expr(const WasmModule& m, const Segment& seg) {
  if (seg.purity != Purity::Deterministic) throw UnsupportedShape("segment is tainted");
  const Function* f = m.defined_function(seg.func_index);
  if (!f) throw UnsupportedShape("segment does not refer to a defined function");
  return Simulator(m, *f, seg.func_index).expression(seg.start, seg.end);
}

std::vector<Instruction> expr_to_instrs(const ExprTree& t, FreshResolver* fresh) {
  std::vector<Instruction> out;
  linearize(t, fresh, out);
  return out;
}

void splice_expr(WasmModule& m, std::uint32_t func_index, std::uint32_t start, std::uint32_t end, const ExprTree& t,
                 const GlobalBindings& globals) {
  Function* f = m.defined_function(func_index);
  if (!f) throw std::out_of_range("splice into an imported function");
  ModuleResolver resolver(m, *f, globals);
  std::vector<Instruction> code = expr_to_instrs(t, &resolver);
  auto& body = f->body.code;
  body.erase(body.begin() + start, body.begin() + end);
  body.insert(body.begin() + start, code.begin(), code.end());
  f->body.rebuild_brackets();
  normalize_layout(m);
}

}  // namespace wmutate
