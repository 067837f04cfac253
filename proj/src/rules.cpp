#include "wmutate/rules.hpp"

#include <bit>
#include <cmath>

#include "json.hpp"

namespace wmutate {
namespace {

constexpr const char* kSlotNames[] = {"x", "y", "z", "a", "b", "c"};

std::uint64_t mask(ValType t, std::uint64_t v) {
  return (t == ValType::I32 || t == ValType::F32) ? (v & 0xFFFFFFFFu) : v;
}

Opcode const_opcode(ValType t) {
  switch (t) {
    case ValType::I32: return Opcode::I32Const;
    case ValType::I64: return Opcode::I64Const;
    case ValType::F32: return Opcode::F32Const;
    case ValType::F64: return Opcode::F64Const;
  }
  return Opcode::I32Const;
}

enum class Arith { Add, Sub, Mul, Or, And, Shl, Eq, Eqz, Neg };

Opcode opcode_for(ValType t, Arith a) {
  const bool i32 = t == ValType::I32, i64 = t == ValType::I64, f32 = t == ValType::F32;
  switch (a) {
    case Arith::Add: return i32 ? Opcode::I32Add : i64 ? Opcode::I64Add : f32 ? Opcode::F32Add : Opcode::F64Add;
    case Arith::Sub: return i32 ? Opcode::I32Sub : i64 ? Opcode::I64Sub : f32 ? Opcode::F32Sub : Opcode::F64Sub;
    case Arith::Mul: return i32 ? Opcode::I32Mul : i64 ? Opcode::I64Mul : f32 ? Opcode::F32Mul : Opcode::F64Mul;
    case Arith::Or: return i32 ? Opcode::I32Or : Opcode::I64Or;
    case Arith::And: return i32 ? Opcode::I32And : Opcode::I64And;
    case Arith::Shl: return i32 ? Opcode::I32Shl : Opcode::I64Shl;
    case Arith::Eq: return i32 ? Opcode::I32Eq : Opcode::I64Eq;
    case Arith::Eqz: return i32 ? Opcode::I32Eqz : Opcode::I64Eqz;
    case Arith::Neg: return f32 ? Opcode::F32Neg : Opcode::F64Neg;
  }
  return Opcode::Nop;
}

std::uint64_t float_bits(ValType t, double v) {
  return t == ValType::F32 ? std::bit_cast<std::uint32_t>(static_cast<float>(v)) : std::bit_cast<std::uint64_t>(v);
}

std::string type_suffix(std::optional<ValType> t) { return t ? std::string(to_string(*t)) : "stmt"; }

bool reorderable(const Effects& a, const Effects& b) {
  if (a.writes || b.writes) return false;
  if (a.may_trap && b.may_trap) return false;
  return !(a.binds || a.ordered || b.binds || b.ordered);
}

std::string literal_text(ValType t, std::uint64_t bits) {
  switch (t) {
    case ValType::I32: return std::to_string(static_cast<std::int32_t>(static_cast<std::uint32_t>(bits)));
    case ValType::I64: return std::to_string(static_cast<std::int64_t>(bits));
    case ValType::F32: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(bits))));
      return buf;
    }
    case ValType::F64: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", std::bit_cast<double>(bits));
      return buf;
    }
  }
  return "?";
}

class Catalog {
 public:
  std::vector<RewriteRule> rules;

  void add(std::string name, Pattern lhs, Pattern rhs, std::string cond_text = {},
           std::function<bool(const Bindings&, const Facts&)> cond = {},
           std::function<void(Bindings&, Rng&)> compute = {}) {
    rules.push_back(RewriteRule{std::move(name), std::move(lhs), std::move(rhs), std::move(cond_text), std::move(cond),
                                std::move(compute)});
  }

  // Both directions with the same condition.
  void both(const std::string& name, const Pattern& lhs, const Pattern& rhs, const std::string& cond_text = {},
            std::function<bool(const Bindings&, const Facts&)> cond = {}) {
    add(name, lhs, rhs, cond_text, cond);
    add(name + "-rev", rhs, lhs, cond_text, cond);
  }
};

using pat::cvar;
using pat::lit;
using pat::var;

Pattern op(ValType t, Arith a, std::vector<Pattern> kids) { return pat::op(opcode_for(t, a), std::move(kids)); }

// Registers x -> f(x, x) by copy when x may be evaluated twice, otherwise
// through a synthetic local.
void add_dup(Catalog& c, const std::string& name, ValType t,
             const std::function<Pattern(Pattern, Pattern)>& shape) {
  c.add(name, var(0, t), shape(var(0, t), var(0, t)), "x copyable",
        [](const Bindings&, const Facts& f) { return f.effects(0).copyable(); });
  c.add(name + "-local", var(0, t), shape(pat::fresh_tee(t, var(0, t)), pat::fresh_get(t)), "x not copyable",
        [](const Bindings&, const Facts& f) { return !f.effects(0).copyable(); });
}

std::vector<RewriteRule> build_catalog() {
  Catalog c;
  auto x_collapsible = [](const Bindings&, const Facts& f) { return f.effects(0).collapsible(); };
  auto xy_reorderable = [](const Bindings&, const Facts& f) { return reorderable(f.effects(0), f.effects(1)); };

  for (ValType t : {ValType::I32, ValType::I64}) {
    const std::string s = "-" + std::string(to_string(t));
    const std::uint64_t all_ones = mask(t, ~std::uint64_t(0));
    const auto x = var(0, t), y = var(1, t), z = var(2, t);

    c.add("or-absorb" + s, op(t, Arith::Or, {x, lit(t, all_ones)}), lit(t, all_ones), "x discardable",
          [](const Bindings&, const Facts& f) { return f.effects(0).discardable(); });
    c.both("mul-one" + s, op(t, Arith::Mul, {x, lit(t, 1)}), x);
    c.both("eq-zero" + s, op(t, Arith::Eq, {x, lit(t, 0)}), op(t, Arith::Eqz, {x}));
    c.both("shl-zero" + s, op(t, Arith::Shl, {x, lit(t, 0)}), x);
    c.both("add-zero" + s, op(t, Arith::Add, {x, lit(t, 0)}), x);
    c.add("add-comm" + s, op(t, Arith::Add, {x, y}), op(t, Arith::Add, {y, x}), "x, y reorderable", xy_reorderable);
    c.add("mul-comm" + s, op(t, Arith::Mul, {x, y}), op(t, Arith::Mul, {y, x}), "x, y reorderable", xy_reorderable);
    c.both("add-assoc" + s, op(t, Arith::Add, {x, op(t, Arith::Add, {y, z})}),
           op(t, Arith::Add, {op(t, Arith::Add, {x, y}), z}));
    c.both("mul-assoc" + s, op(t, Arith::Mul, {x, op(t, Arith::Mul, {y, z})}),
           op(t, Arith::Mul, {op(t, Arith::Mul, {x, y}), z}));
    for (std::uint64_t k = 1; k <= 4; ++k) {
      c.both("shl-mul-" + std::to_string(k) + s, op(t, Arith::Shl, {x, lit(t, k)}),
             op(t, Arith::Mul, {x, lit(t, std::uint64_t(1) << k)}));
    }
    c.add("add-self" + s, op(t, Arith::Add, {x, x}), op(t, Arith::Mul, {x, lit(t, 2)}), "x collapsible",
          x_collapsible);
    c.add("mul-two" + s, op(t, Arith::Mul, {x, lit(t, 2)}), op(t, Arith::Add, {x, x}), "x copyable",
          [](const Bindings&, const Facts& f) { return f.effects(0).copyable(); });
    c.add("mul-two-local" + s, op(t, Arith::Mul, {x, lit(t, 2)}),
          op(t, Arith::Add, {pat::fresh_tee(t, x), pat::fresh_get(t)}), "x not copyable",
          [](const Bindings&, const Facts& f) { return !f.effects(0).copyable(); });
    for (Arith a : {Arith::Or, Arith::And}) {
      const std::string n = a == Arith::Or ? "or" : "and";
      c.add(n + "-idem" + s, op(t, a, {x, x}), x, "x collapsible", x_collapsible);
      add_dup(c, n + "-dup" + s, t, [t, a](Pattern l, Pattern r) { return op(t, a, {std::move(l), std::move(r)}); });
    }
    c.add("sub-to-add" + s, op(t, Arith::Sub, {x, cvar(1, t)}), op(t, Arith::Add, {x, cvar(2, t)}), {}, {},
          [t](Bindings& b, Rng&) {
            b.value[2] = mask(t, std::uint64_t(0) - b.value[1]);
            b.has_value[2] = true;
          });
    c.add("add-to-sub" + s, op(t, Arith::Add, {x, cvar(1, t)}), op(t, Arith::Sub, {x, cvar(2, t)}), {}, {},
          [t](Bindings& b, Rng&) {
            b.value[2] = mask(t, std::uint64_t(0) - b.value[1]);
            b.has_value[2] = true;
          });
    c.add("const-unfold" + s, cvar(0, t), op(t, Arith::Add, {cvar(1, t), cvar(2, t)}), "z = random", {},
          [t](Bindings& b, Rng& rng) {
            b.value[1] = mask(t, rng.next());
            b.value[2] = mask(t, b.value[0] - b.value[1]);
            b.has_value[1] = b.has_value[2] = true;
          });
    c.add("const-fold" + s, op(t, Arith::Add, {cvar(0, t), cvar(1, t)}), cvar(2, t), {}, {},
          [t](Bindings& b, Rng&) {
            b.value[2] = mask(t, b.value[0] + b.value[1]);
            b.has_value[2] = true;
          });
  }

  for (ValType t : {ValType::F32, ValType::F64}) {
    const std::string s = "-" + std::string(to_string(t));
    const auto x = var(0, t), y = var(1, t);
    auto x_canonical = [](const Bindings&, const Facts& f) { return f.canonical_nan(0); };
    c.both("fmul-one" + s, op(t, Arith::Mul, {x, lit(t, float_bits(t, 1.0))}), x, "x never a non-canonical NaN",
           x_canonical);
    c.add("fadd-comm" + s, op(t, Arith::Add, {x, y}), op(t, Arith::Add, {y, x}), "x, y reorderable", xy_reorderable);
    c.add("fmul-comm" + s, op(t, Arith::Mul, {x, y}), op(t, Arith::Mul, {y, x}), "x, y reorderable", xy_reorderable);
    c.add("fadd-self" + s, op(t, Arith::Add, {x, x}), op(t, Arith::Mul, {x, lit(t, float_bits(t, 2.0))}),
          "x collapsible", x_collapsible);
    c.add("fmul-two" + s, op(t, Arith::Mul, {x, lit(t, float_bits(t, 2.0))}), op(t, Arith::Add, {x, x}),
          "x copyable", [](const Bindings&, const Facts& f) { return f.effects(0).copyable(); });
    c.add("fmul-two-local" + s, op(t, Arith::Mul, {x, lit(t, float_bits(t, 2.0))}),
          op(t, Arith::Add, {pat::fresh_tee(t, x), pat::fresh_get(t)}), "x not copyable",
          [](const Bindings&, const Facts& f) { return !f.effects(0).copyable(); });
    c.both("neg-neg" + s, op(t, Arith::Neg, {op(t, Arith::Neg, {x})}), x);
  }

  for (ValType t : kAllValTypes) {
    const std::string s = "-" + std::string(to_string(t));
    const auto y = var(0, t), x = var(1, ValType::I32);
    c.add("select-same" + s, pat::op(Opcode::Select, {y, y, x}), y, "y collapsible, x discardable",
          [](const Bindings&, const Facts& f) { return f.effects(0).collapsible() && f.effects(1).discardable(); });
    auto random_cond = [](Bindings& b, Rng& rng) {
      b.value[2] = rng.next() & 0xFFFFFFFFu;
      b.has_value[2] = true;
    };
    c.add("select-dup" + s, y, pat::op(Opcode::Select, {y, y, cvar(2, ValType::I32)}), "y copyable; c = random",
          [](const Bindings&, const Facts& f) { return f.effects(0).copyable(); }, random_cond);
    c.add("select-dup-local" + s, y,
          pat::op(Opcode::Select, {pat::fresh_tee(t, y), pat::fresh_get(t), cvar(2, ValType::I32)}),
          "y not copyable; c = random", [](const Bindings&, const Facts& f) { return !f.effects(0).copyable(); },
          random_cond);
  }

  std::vector<std::optional<ValType>> all_types(std::begin(kAllValTypes), std::end(kAllValTypes));
  all_types.push_back(std::nullopt);
  for (auto t : all_types) {
    const std::string s = "-" + type_suffix(t);
    const auto x = var(0, t);
    c.both("nop" + s, x, pat::container({x, pat::op(Opcode::Nop, {})}));
    c.add("global-assign" + s, x, pat::container({pat::fresh_global_set(ValType::I32, cvar(1, ValType::I32)), x}),
          "c = random", {}, [](Bindings& b, Rng& rng) {
            b.value[1] = rng.next() & 0xFFFFFFFFu;
            b.has_value[1] = true;
          });
    auto y_discardable = [](const Bindings&, const Facts& f) { return f.effects(1).discardable(); };
    c.add("global-assign-rev" + s, pat::container({pat::fresh_global_set(ValType::I32, var(1, ValType::I32)), x}), x,
          "y discardable", y_discardable);
    c.add("global-assign-drop" + s, pat::container({x, pat::fresh_global_set(ValType::I32, var(1, ValType::I32))}), x,
          "y discardable", y_discardable);
  }
  return std::move(c.rules);
}

}  // namespace

Effects op_effects(const ExprOp& op) {
  Effects e;
  switch (op.kind) {
    case ExprOp::Kind::Container:
    case ExprOp::Kind::FreshGlobalSet:
      return e;
    case ExprOp::Kind::FreshTee:
      e.binds = true;
      return e;
    case ExprOp::Kind::FreshGet:
      e.ordered = true;
      return e;
    case ExprOp::Kind::Instr:
      break;
  }
  const Opcode o = op.instr.op;
  if (is_load(o)) e.reads_mem = e.may_trap = true;
  if (is_store(o)) e.writes = e.may_trap = true;
  switch (o) {
    case Opcode::LocalSet:
    case Opcode::LocalTee:
    case Opcode::GlobalSet:
      e.writes = true;
      break;
    case Opcode::I32DivS:
    case Opcode::I32DivU:
    case Opcode::I32RemS:
    case Opcode::I32RemU:
    case Opcode::I64DivS:
    case Opcode::I64DivU:
    case Opcode::I64RemS:
    case Opcode::I64RemU:
    case Opcode::I32TruncF32S:
    case Opcode::I32TruncF32U:
    case Opcode::I32TruncF64S:
    case Opcode::I32TruncF64U:
    case Opcode::I64TruncF32S:
    case Opcode::I64TruncF32U:
    case Opcode::I64TruncF64S:
    case Opcode::I64TruncF64U:
    case Opcode::Unreachable:
    case Opcode::Call:
    case Opcode::CallIndirect:
      e.may_trap = true;
      break;
    default:
      break;
  }
  if (o == Opcode::Call || o == Opcode::CallIndirect || o == Opcode::MemoryGrow) e.writes = true;
  return e;
}

bool op_canonical_nan(const ExprOp& op) {
  if (op.kind != ExprOp::Kind::Instr) return false;
  const Instruction& in = op.instr;
  switch (in.op) {
    case Opcode::F32Const: {
      const std::uint32_t b = static_cast<std::uint32_t>(in.value);
      return !std::isnan(std::bit_cast<float>(b)) || b == 0x7FC00000u;
    }
    case Opcode::F64Const:
      return !std::isnan(std::bit_cast<double>(in.value)) || in.value == 0x7FF8000000000000ull;
    case Opcode::F32Add: case Opcode::F32Sub: case Opcode::F32Mul: case Opcode::F32Div:
    case Opcode::F32Min: case Opcode::F32Max: case Opcode::F32Sqrt: case Opcode::F32Ceil:
    case Opcode::F32Floor: case Opcode::F32Trunc: case Opcode::F32Nearest:
    case Opcode::F64Add: case Opcode::F64Sub: case Opcode::F64Mul: case Opcode::F64Div:
    case Opcode::F64Min: case Opcode::F64Max: case Opcode::F64Sqrt: case Opcode::F64Ceil:
    case Opcode::F64Floor: case Opcode::F64Trunc: case Opcode::F64Nearest:
    case Opcode::F32ConvertI32S: case Opcode::F32ConvertI32U: case Opcode::F32ConvertI64S:
    case Opcode::F32ConvertI64U: case Opcode::F32DemoteF64:
    case Opcode::F64ConvertI32S: case Opcode::F64ConvertI32U: case Opcode::F64ConvertI64S:
    case Opcode::F64ConvertI64U: case Opcode::F64PromoteF32:
      return true;
    default:
      return false;
  }
}

namespace pat {

Pattern var(std::uint32_t slot, std::optional<ValType> t) {
  Pattern p;
  p.kind = Pattern::Kind::Var;
  p.slot = slot;
  p.type = t;
  return p;
}

Pattern lit(ValType t, std::uint64_t bits) {
  Pattern p;
  p.kind = Pattern::Kind::Const;
  p.type = t;
  p.bits = mask(t, bits);
  return p;
}

Pattern cvar(std::uint32_t slot, ValType t) {
  Pattern p;
  p.kind = Pattern::Kind::ConstVar;
  p.slot = slot;
  p.type = t;
  return p;
}

Pattern op(const Instruction& in, std::vector<Pattern> kids) {
  Pattern p;
  p.kind = Pattern::Kind::Op;
  p.op = ExprOp::of(in);
  const OpcodeInfo& oi = info(in.op);
  if (oi.fixed) {
    p.type = oi.push;
  } else if (in.op == Opcode::Select && !kids.empty()) {
    p.type = kids[0].type;
  }
  p.kids = std::move(kids);
  return p;
}

Pattern op(Opcode o, std::vector<Pattern> kids) { return op(Instruction::simple(o), std::move(kids)); }

Pattern container(std::vector<Pattern> kids) {
  Pattern p;
  p.kind = Pattern::Kind::Op;
  p.op = ExprOp::container();
  for (const auto& k : kids) {
    if (k.type) p.type = k.type;
  }
  p.kids = std::move(kids);
  return p;
}

Pattern fresh_tee(ValType t, Pattern x) {
  Pattern p;
  p.kind = Pattern::Kind::Op;
  p.op = ExprOp::placeholder(ExprOp::Kind::FreshTee, 0, t);
  p.type = t;
  p.kids.push_back(std::move(x));
  return p;
}

Pattern fresh_get(ValType t) {
  Pattern p;
  p.kind = Pattern::Kind::Op;
  p.op = ExprOp::placeholder(ExprOp::Kind::FreshGet, 0, t);
  p.type = t;
  return p;
}

Pattern fresh_global_set(ValType t, Pattern value) {
  Pattern p;
  p.kind = Pattern::Kind::Op;
  p.op = ExprOp::placeholder(ExprOp::Kind::FreshGlobalSet, 0, t);
  p.kids.push_back(std::move(value));
  return p;
}

}  // namespace pat

std::string Pattern::to_string() const {
  switch (kind) {
    case Kind::Var: return std::string("?") + kSlotNames[slot];
    case Kind::Const: return "(" + std::string(wmutate::to_string(const_opcode(*type))) + " " + literal_text(*type, bits) + ")";
    case Kind::ConstVar:
      return "(" + std::string(wmutate::to_string(const_opcode(*type))) + " ?" + kSlotNames[slot] + ")";
    case Kind::Op: {
      std::string s = "(";
      switch (op.kind) {
        case ExprOp::Kind::Instr: s += wmutate::to_string(op.instr.op); break;
        case ExprOp::Kind::Container: s += "container"; break;
        case ExprOp::Kind::FreshTee: s += "local.tee $fresh"; break;
        case ExprOp::Kind::FreshGet: s += "local.get $fresh"; break;
        case ExprOp::Kind::FreshGlobalSet: s += "global.set $fresh"; break;
      }
      for (const auto& k : kids) s += " " + k.to_string();
      return s + ")";
    }
  }
  return "?";
}

const std::vector<RewriteRule>& builtin_rules() {
  static const std::vector<RewriteRule> rules = build_catalog();
  return rules;
}

std::vector<RewriteRule> select_rules(const std::vector<std::string>& names) {
  std::vector<RewriteRule> out;
  for (const auto& r : builtin_rules()) {
    for (const auto& n : names) {
      if (r.name.rfind(n, 0) == 0) {
        out.push_back(r);
        break;
      }
    }
  }
  return out;
}

std::string rules_to_json(const std::vector<RewriteRule>& rules) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rules) {
    arr.push_back({{"name", r.name}, {"lhs", r.lhs.to_string()}, {"rhs", r.rhs.to_string()}, {"cond", r.cond_text}});
  }
  return arr.dump(2);
}

ExprTree instantiate_tree(const Pattern& p, const Bindings& b, const std::function<ExprTree(std::uint32_t)>& var_tree,
                          std::uint32_t fresh_base) {
  switch (p.kind) {
    case Pattern::Kind::Var:
      return var_tree(p.slot);
    case Pattern::Kind::Const:
    case Pattern::Kind::ConstVar: {
      ExprNode n;
      n.op = ExprOp::of(const_of(*p.type, p.kind == Pattern::Kind::Const ? p.bits : b.value[p.slot]));
      n.type = p.type;
      return n;
    }
    case Pattern::Kind::Op: {
      ExprNode n;
      n.op = p.op;
      if (n.op.kind == ExprOp::Kind::FreshTee || n.op.kind == ExprOp::Kind::FreshGet ||
          n.op.kind == ExprOp::Kind::FreshGlobalSet) {
        n.op.fresh += fresh_base;
      }
      n.type = p.type;
      for (const auto& k : p.kids) n.children.push_back(instantiate_tree(k, b, var_tree, fresh_base));
      return n;
    }
  }
  return {};
}

}  // namespace wmutate
