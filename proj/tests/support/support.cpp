#include "support.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "wmutate/builder.hpp"
#include "wmutate/codec.hpp"
#include "wmutate/interpreter.hpp"
#include "wmutate/printer.hpp"
#include "wmutate/validator.hpp"

namespace wmutate::testing {

const std::vector<CorpusProgram>& corpus() {
  static const std::vector<CorpusProgram> programs = [] {
    std::vector<CorpusProgram> out;
    for (const auto& e : std::filesystem::directory_iterator(WMUTATE_CORPUS_DIR)) {
      if (e.path().extension() != ".wasm") continue;
      std::ifstream in(e.path(), std::ios::binary);
      CorpusProgram p;
      p.name = e.path().stem().string();
      p.bytes.assign(std::istreambuf_iterator<char>(in), {});
      p.module = parse_module(p.bytes);
      out.push_back(std::move(p));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return out;
  }();
  return programs;
}

std::string to_sexpr(const ExprTree& t) {
  std::string s;
  switch (t.op.kind) {
    case ExprOp::Kind::Instr: s = print_instruction(t.op.instr); break;
    case ExprOp::Kind::Container: s = "container"; break;
    case ExprOp::Kind::FreshTee: s = "fresh.tee " + std::to_string(t.op.fresh); break;
    case ExprOp::Kind::FreshGet: s = "fresh.get " + std::to_string(t.op.fresh); break;
    case ExprOp::Kind::FreshGlobalSet: s = "fresh.global.set " + std::to_string(t.op.fresh); break;
  }
  for (const auto& k : t.children) s += " (" + to_sexpr(k) + ")";
  return s;
}

std::vector<RewriteRule> example_rules() {
  std::vector<RewriteRule> rules(2);
  rules[0].name = "or-self";
  rules[0].lhs = pat::var(0, ValType::I64);
  rules[0].rhs = pat::op(Opcode::I64Or, {pat::var(0, ValType::I64), pat::var(0, ValType::I64)});
  rules[1].name = "add-zero";
  rules[1].lhs = pat::var(0, ValType::I64);
  rules[1].rhs = pat::op(Opcode::I64Add, {pat::var(0, ValType::I64), pat::lit(ValType::I64, 0)});
  return rules;
}

ExprTree i64_const_tree(std::int64_t v) {
  ExprTree t;
  t.op = ExprOp::of(Instruction::i64_const(v));
  t.type = ValType::I64;
  return t;
}

namespace {

struct Hole {
  std::uint32_t slot;
  bool is_const;
  std::optional<ValType> type;
};

void collect_holes(const Pattern& p, std::map<std::uint32_t, Hole>& out) {
  if (p.kind == Pattern::Kind::Var) out.emplace(p.slot, Hole{p.slot, false, p.type});
  if (p.kind == Pattern::Kind::ConstVar) out.emplace(p.slot, Hole{p.slot, true, p.type});
  for (const auto& k : p.kids) collect_holes(k, out);
}

std::uint64_t f32b(float f) { return std::bit_cast<std::uint32_t>(f); }
std::uint64_t f64b(double d) { return std::bit_cast<std::uint64_t>(d); }

std::vector<std::uint64_t> boundary(std::optional<ValType> t) {
  if (!t || *t == ValType::I32) return {0, 1, 0xFFFFFFFFu, 2, 0x80000000u, 0x7FFFFFFFu};
  switch (*t) {
    case ValType::I64:
      return {0, 1, ~0ull, 2, 0x8000000000000000ull, 0x7FFFFFFFFFFFFFFFull};
    case ValType::F32: {
      const float mx = std::numeric_limits<float>::max();
      return {f32b(0.0f), f32b(1.0f), f32b(-1.0f), f32b(2.0f), f32b(-mx), f32b(mx), f32b(-0.0f),
              f32b(std::numeric_limits<float>::infinity()), 0x7FC00000u, 0x7FA00001u};
    }
    case ValType::F64: {
      const double mx = std::numeric_limits<double>::max();
      return {f64b(0.0), f64b(1.0), f64b(-1.0), f64b(2.0), f64b(-mx), f64b(mx), f64b(-0.0),
              f64b(std::numeric_limits<double>::infinity()), 0x7FF8000000000000ull, 0x7FF4000000000001ull};
    }
    default:
      return {0};
  }
}

std::uint64_t random_bits(std::optional<ValType> t, Rng& rng) {
  const std::uint64_t v = rng.next();
  if (!t || *t == ValType::I32 || *t == ValType::F32) return v & 0xFFFFFFFFu;
  return v;
}

bool is_canonical_or_number(ValType t, std::uint64_t bits) {
  if (t == ValType::F32) {
    const bool nan = (bits & 0x7F800000u) == 0x7F800000u && (bits & 0x7FFFFFu) != 0;
    return !nan || (bits & 0x7FFFFFFFu) == 0x7FC00000u;
  }
  if (t == ValType::F64) {
    const bool nan = (bits & 0x7FF0000000000000ull) == 0x7FF0000000000000ull && (bits & 0xFFFFFFFFFFFFFull) != 0;
    return !nan || (bits & 0x7FFFFFFFFFFFFFFFull) == 0x7FF8000000000000ull;
  }
  return true;
}

class SampleFacts : public Facts {
 public:
  SampleFacts(const std::map<std::uint32_t, Hole>& holes, const std::array<std::uint64_t, Bindings::kSlots>& values,
              bool loaded)
      : holes_(holes), values_(values), loaded_(loaded) {}

  Effects effects(std::uint32_t slot) const override {
    Effects e;
    auto it = holes_.find(slot);
    if (it == holes_.end()) return e;
    if (!it->second.type) {
      e.writes = true;
    } else if (loaded_ && !it->second.is_const) {
      e.reads_mem = true;
      e.may_trap = true;
    }
    return e;
  }
  bool canonical_nan(std::uint32_t slot) const override {
    auto it = holes_.find(slot);
    if (it == holes_.end() || !it->second.type) return true;
    return is_canonical_or_number(*it->second.type, values_[slot]);
  }

 private:
  const std::map<std::uint32_t, Hole>& holes_;
  const std::array<std::uint64_t, Bindings::kSlots>& values_;
  bool loaded_;
};

constexpr std::uint32_t kObserved = 0;  // exported global written by statement holes
constexpr std::uint32_t kResult = 1;    // exported global receiving the value

Opcode load_of(ValType t) {
  switch (t) {
    case ValType::I64: return Opcode::I64Load;
    case ValType::F32: return Opcode::F32Load;
    case ValType::F64: return Opcode::F64Load;
    default: return Opcode::I32Load;
  }
}

// Value holes either materialize as a constant or, when `loaded`, as a load
// of the same bits from slot * 8 in linear memory.
ExprTree hole_tree(const Hole& h, std::uint64_t v, bool loaded) {
  if (loaded && h.type) {
    ExprTree addr;
    addr.op = ExprOp::of(Instruction::i32_const(0));
    addr.type = ValType::I32;
    ExprTree l;
    const bool wide = *h.type == ValType::I64 || *h.type == ValType::F64;
    l.op = ExprOp::of(Instruction::mem(load_of(*h.type), wide ? 3 : 2, h.slot * 8));
    l.type = h.type;
    l.children.push_back(std::move(addr));
    return l;
  }
  ExprTree c;
  c.op = ExprOp::of(const_of(h.type.value_or(ValType::I32), v));
  c.type = h.type.value_or(ValType::I32);
  if (h.type) return c;
  ExprTree s;
  s.op = ExprOp::of(Instruction::with_index(Opcode::GlobalSet, kObserved));
  s.children.push_back(std::move(c));
  return s;
}

struct Outcome {
  bool valid = false;
  std::string diagnostics;
  ExecutionState state;
};

Outcome evaluate(const ExprTree& tree, const std::array<std::uint64_t, Bindings::kSlots>& values) {
  ModuleBuilder b;
  b.memory(1);
  Bytes image;
  for (std::uint64_t v : values) {
    for (int i = 0; i < 8; ++i) image.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  b.data(0, image);
  b.global(ValType::I32, true, 0);
  std::vector<Instruction> code{Instruction::simple(Opcode::Nop)};
  if (tree.type) {
    b.global(*tree.type, true, 0);
    b.export_global("result", kResult);
    code.push_back(Instruction::with_index(Opcode::GlobalSet, kResult));
  }
  b.export_global("observed", kObserved);
  const std::uint32_t f = b.func({}, {}, {}, code);
  b.export_func("_start", f);
  WasmModule m = b.build();
  splice_expr(m, f, 0, 1, tree);
  Outcome o;
  const auto report = static_validate(m);
  o.valid = report.ok();
  if (!o.valid) {
    o.diagnostics = report.to_string();
    return o;
  }
  o.state = execute(m, HostEnv::standard());
  return o;
}

std::string describe(const ExecutionState& s) {
  std::ostringstream os;
  if (s.trap) os << "trap " << to_string(s.trap->kind);
  for (const auto& g : s.globals) os << " g=0x" << std::hex << g.bits;
  return os.str();
}

}  // namespace

RuleCheck check_rule(const RewriteRule& rule, std::size_t random_samples, std::uint64_t seed) {
  RuleCheck r;
  r.rule = rule.name;
  std::map<std::uint32_t, Hole> holes;
  collect_holes(rule.lhs, holes);
  std::vector<Hole> hs;
  for (const auto& [slot, h] : holes) hs.push_back(h);

  std::vector<std::vector<std::uint64_t>> tuples;
  std::vector<std::uint64_t> cur(hs.size());
  auto product = [&](auto&& self, std::size_t i) -> void {
    if (i == hs.size()) {
      tuples.push_back(cur);
      return;
    }
    for (auto v : boundary(hs[i].type)) {
      cur[i] = v;
      self(self, i + 1);
    }
  };
  product(product, 0);
  Rng rng(seed);
  for (std::size_t n = 0; n < random_samples; ++n) {
    for (std::size_t i = 0; i < hs.size(); ++i) cur[i] = random_bits(hs[i].type, rng);
    tuples.push_back(cur);
  }

  for (std::size_t k = 0; k < 2 * tuples.size(); ++k) {
    const std::size_t n = k / 2;
    const bool loaded = k % 2 == 1;
    std::array<std::uint64_t, Bindings::kSlots> values{};
    Bindings b;
    for (std::size_t i = 0; i < hs.size(); ++i) {
      values[hs[i].slot] = tuples[n][i];
      if (hs[i].is_const) {
        b.value[hs[i].slot] = tuples[n][i];
        b.has_value[hs[i].slot] = true;
      } else {
        b.node[hs[i].slot] = hs[i].slot;
      }
    }
    SampleFacts facts(holes, values, loaded);
    if (!rule.applicable(b, facts)) {
      ++r.skipped;
      continue;
    }
    Rng compute_rng(seed ^ (k + 1));
    if (rule.compute) rule.compute(b, compute_rng);
    auto var_tree = [&](std::uint32_t slot) { return hole_tree(holes.at(slot), values[slot], loaded); };
    const ExprTree lhs = instantiate_tree(rule.lhs, b, var_tree);
    const ExprTree rhs = instantiate_tree(rule.rhs, b, var_tree);
    ++r.samples;
    const Outcome a = evaluate(lhs, values);
    const Outcome c = evaluate(rhs, values);
    std::string problem;
    if (!a.valid || !c.valid) {
      problem = "invalid module: " + a.diagnostics + c.diagnostics;
    } else if (!same_outcome(a.state, c.state) || !states_equal(a.state, c.state)) {
      problem = "lhs" + describe(a.state) + " vs rhs" + describe(c.state);
    }
    if (!problem.empty()) {
      if (r.failures++ == 0) r.first_failure = to_sexpr(lhs) + " => " + to_sexpr(rhs) + ": " + problem;
    }
  }
  return r;
}

RewriteRule unmasked_shift_rule() {
  RewriteRule r;
  r.name = "shl-to-mul-unmasked";
  r.lhs = pat::op(Opcode::I32Shl, {pat::var(0, ValType::I32), pat::cvar(1, ValType::I32)});
  r.rhs = pat::op(Opcode::I32Mul, {pat::var(0, ValType::I32), pat::cvar(2, ValType::I32)});
  r.compute = [](Bindings& b, Rng&) {
    const std::uint64_t c = b.value[1];
    b.value[2] = c < 64 ? (std::uint64_t(1) << c) & 0xFFFFFFFFu : 0;
    b.has_value[2] = true;
  };
  return r;
}

}  // namespace wmutate::testing
