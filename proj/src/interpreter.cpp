#include "wmutate/interpreter.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

namespace wmutate {
namespace {

constexpr std::uint32_t kPageSize = 65536;
constexpr std::uint32_t kCanonicalNan32 = 0x7FC00000u;
constexpr std::uint64_t kCanonicalNan64 = 0x7FF8000000000000ull;

struct TrapSignal {
  TrapKind kind;
};
struct FuelSignal {};

inline float f32_of(std::uint64_t v) { return std::bit_cast<float>(static_cast<std::uint32_t>(v)); }
inline double f64_of(std::uint64_t v) { return std::bit_cast<double>(v); }

// Arithmetic results that are NaN are replaced by the canonical quiet NaN so
// execution is deterministic across hosts.
inline std::uint64_t bits_of(float f) {
  return std::isnan(f) ? kCanonicalNan32 : std::bit_cast<std::uint32_t>(f);
}
inline std::uint64_t bits_of(double d) { return std::isnan(d) ? kCanonicalNan64 : std::bit_cast<std::uint64_t>(d); }

template <typename F>
F fmin_wasm(F a, F b) {
  if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<F>::quiet_NaN();
  if (a == b) return std::signbit(a) ? a : b;
  return a < b ? a : b;
}

template <typename F>
F fmax_wasm(F a, F b) {
  if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<F>::quiet_NaN();
  if (a == b) return std::signbit(a) ? b : a;
  return a > b ? a : b;
}

// Truncation with trapping on NaN and out-of-range inputs. `lo` and `hi`
// are exclusive bounds representable exactly in F.
template <typename I, typename F>
I trunc_checked(F x, F lo, F hi) {
  if (std::isnan(x)) throw TrapSignal{TrapKind::InvalidConversion};
  if (!(x > lo && x < hi)) throw TrapSignal{TrapKind::IntegerOverflow};
  return static_cast<I>(std::trunc(x));
}

struct Label {
  std::uint32_t cont;  // pc to continue at after a branch
  std::uint32_t height;
  std::uint8_t arity;
  bool loop = false;  // branches re-enter the loop and keep the label
};

class Machine {
 public:
  Machine(const WasmModule& m, const HostEnv& env, const ExecOptions& opts, ExecutionState& st)
      : m_(m), opts_(opts), st_(st) {
    const std::uint32_t nimported = m.num_imported(ExternKind::Func);
    hosts_.reserve(nimported);
    for (const auto& imp : m.imports) {
      if (imp.kind() != ExternKind::Func) continue;
      const HostFunction* h = env.find(imp.module, imp.field);
      if (!h) throw LinkError("unresolved import " + imp.module + "." + imp.field);
      if (!(h->type == m.types.at(std::get<0>(imp.desc)))) {
        throw LinkError("import " + imp.module + "." + imp.field + " has an incompatible signature");
      }
      hosts_.push_back(h);
    }
    nimported_ = nimported;
  }

  void instantiate() {
    globals_.assign(m_.num_globals(), 0);
    std::uint32_t gi = 0;
    for (const auto& imp : m_.imports) {
      if (imp.kind() == ExternKind::Global) globals_types_.push_back(std::get<GlobalType>(imp.desc).type), ++gi;
    }
    for (const auto& g : m_.globals) {
      globals_[gi++] = const_value(g.init);
      globals_types_.push_back(g.type.type);
    }
    if (auto l = m_.memory_limits()) {
      mem_max_pages_ = std::min<std::uint32_t>(l->max.value_or(65536), opts_.max_memory_pages);
      if (l->min > opts_.max_memory_pages) throw LinkError("initial memory exceeds the configured page cap");
      st_.memory.assign(std::size_t(l->min) * kPageSize, 0);
      has_memory_ = true;
    }
    if (auto l = m_.table_limits()) table_.assign(l->min, std::nullopt);

    for (const auto& seg : m_.elements) {
      const std::uint64_t off = static_cast<std::uint32_t>(const_value(seg.offset));
      if (off + seg.funcs.size() > table_.size()) throw TrapSignal{TrapKind::OutOfBoundsTable};
    }
    for (const auto& seg : m_.data) {
      const std::uint64_t off = static_cast<std::uint32_t>(const_value(seg.offset));
      if (off + seg.bytes.size() > st_.memory.size()) throw TrapSignal{TrapKind::OutOfBoundsMemory};
    }
    for (const auto& seg : m_.elements) {
      const std::uint32_t off = static_cast<std::uint32_t>(const_value(seg.offset));
      for (std::size_t i = 0; i < seg.funcs.size(); ++i) table_[off + i] = seg.funcs[i];
    }
    for (const auto& seg : m_.data) {
      const std::uint32_t off = static_cast<std::uint32_t>(const_value(seg.offset));
      if (!seg.bytes.empty()) std::memcpy(st_.memory.data() + off, seg.bytes.data(), seg.bytes.size());
    }
  }

  void call(std::uint32_t func) {
    if (depth_ >= opts_.max_call_depth) throw TrapSignal{TrapKind::CallStackExhausted};
    ++depth_;
    if (func < nimported_) {
      call_host(func);
    } else {
      run(func);
    }
    --depth_;
  }

  void snapshot_globals() {
    for (const auto& e : m_.exports) {
      if (e.kind != ExternKind::Global) continue;
      st_.globals.push_back(Value{globals_types_[e.index], globals_[e.index]});
    }
  }

  std::uint32_t current_func() const { return cur_func_; }
  std::uint32_t current_pc() const { return cur_pc_; }

 private:
  std::uint64_t const_value(const ConstExpr& e) const {
    if (e.instr.op == Opcode::GlobalGet) return globals_.at(e.instr.imm);
    return e.instr.value;
  }

  void call_host(std::uint32_t func) {
    const HostFunction* h = hosts_[func];
    const std::size_t n = h->type.params.size();
    std::vector<std::uint64_t> args(stack_.end() - static_cast<std::ptrdiff_t>(n), stack_.end());
    stack_.resize(stack_.size() - n);
    HostContext ctx{st_.output, st_.memory, st_.steps};
    auto r = h->fn(ctx, args);
    if (!h->type.results.empty()) stack_.push_back(r.value_or(0));
  }

  std::uint64_t pop() {
    const std::uint64_t v = stack_.back();
    stack_.pop_back();
    return v;
  }
  void push(std::uint64_t v) { stack_.push_back(v); }

  std::uint8_t* addr(std::uint64_t base, std::uint32_t offset, unsigned size) {
    const std::uint64_t ea = (base & 0xFFFFFFFFu) + offset;
    if (ea + size > st_.memory.size()) throw TrapSignal{TrapKind::OutOfBoundsMemory};
    last_ea_ = ea;
    return st_.memory.data() + ea;
  }

  std::uint64_t load_raw(const Instruction& in, unsigned size) {
    const std::uint8_t* p = addr(pop(), in.offset, size);
    std::uint64_t v = 0;
    std::memcpy(&v, p, size);
    st_.trace.record(MemEvent{MemAccess::Read, MemSpace::Linear, last_ea_, size, v});
    return v;
  }

  void store_raw(const Instruction& in, unsigned size, std::uint64_t v) {
    const std::uint64_t base = pop();
    std::uint8_t* p = addr(base, in.offset, size);
    if (size < 8) v &= (std::uint64_t(1) << (8 * size)) - 1;
    std::memcpy(p, &v, size);
    st_.trace.record(MemEvent{MemAccess::Write, MemSpace::Linear, last_ea_, size, v});
  }

  void run(std::uint32_t func);

  const WasmModule& m_;
  const ExecOptions& opts_;
  ExecutionState& st_;
  std::vector<const HostFunction*> hosts_;
  std::uint32_t nimported_ = 0;
  std::vector<std::uint64_t> globals_;
  std::vector<ValType> globals_types_;
  std::vector<std::optional<std::uint32_t>> table_;
  std::vector<std::uint64_t> stack_;
  std::vector<Label> labels_;
  std::uint32_t mem_max_pages_ = 0;
  bool has_memory_ = false;
  std::uint32_t depth_ = 0;
  std::uint64_t last_ea_ = 0;
  std::uint32_t cur_func_ = 0;
  std::uint32_t cur_pc_ = 0;
};

void Machine::run(std::uint32_t func) {
  const Function& f = m_.functions[func - nimported_];
  const FuncType& ft = m_.types[f.type];
  const auto& code = f.body.code;
  const auto& br = f.body.brackets;
  const std::uint32_t n = static_cast<std::uint32_t>(code.size());

  const std::size_t locals_base = stack_.size() - ft.params.size();
  stack_.resize(stack_.size() + f.body.num_locals(), 0);
  const std::size_t label_base = labels_.size();
  const std::uint8_t result_arity = static_cast<std::uint8_t>(ft.results.size());
  labels_.push_back(Label{n, static_cast<std::uint32_t>(stack_.size()), result_arity});

  auto branch = [&](std::uint32_t depth, std::uint32_t& pc) {
    const std::size_t li = labels_.size() - 1 - depth;
    const Label l = labels_[li];
    if (l.arity) {
      const std::uint64_t v = stack_.back();
      stack_.resize(l.height);
      stack_.push_back(v);
    } else {
      stack_.resize(l.height);
    }
    labels_.resize(l.loop ? li + 1 : li);
    pc = l.cont;
  };

  std::uint32_t pc = 0;
  auto& trace = st_.trace;
  const std::uint64_t fuel = opts_.fuel;
  while (pc < n) {
    const Instruction& in = code[pc];
    cur_func_ = func;
    cur_pc_ = pc;
    if (st_.steps >= fuel) throw FuelSignal{};
    ++st_.steps;
    trace.record(InstrEvent{func, pc, in.op});
    std::uint32_t next = pc + 1;

#define BIN_I32(expr)                                       \
  {                                                         \
    const std::uint32_t b = static_cast<std::uint32_t>(pop()); \
    const std::uint32_t a = static_cast<std::uint32_t>(pop()); \
    push(static_cast<std::uint32_t>(expr));                 \
    break;                                                  \
  }
#define BIN_I64(expr)            \
  {                              \
    const std::uint64_t b = pop(); \
    const std::uint64_t a = pop(); \
    push(static_cast<std::uint64_t>(expr)); \
    break;                       \
  }
#define CMP_I64(expr)            \
  {                              \
    const std::uint64_t b = pop(); \
    const std::uint64_t a = pop(); \
    push((expr) ? 1 : 0);        \
    break;                       \
  }
#define UN_F32(expr)                   \
  {                                    \
    const float a = f32_of(pop());     \
    push(bits_of(static_cast<float>(expr))); \
    break;                             \
  }
#define BIN_F32(expr)                  \
  {                                    \
    const float b = f32_of(pop());     \
    const float a = f32_of(pop());     \
    push(bits_of(static_cast<float>(expr))); \
    break;                             \
  }
#define CMP_F32(expr)                  \
  {                                    \
    const float b = f32_of(pop());     \
    const float a = f32_of(pop());     \
    push((expr) ? 1 : 0);              \
    break;                             \
  }
#define UN_F64(expr)                   \
  {                                    \
    const double a = f64_of(pop());    \
    push(bits_of(static_cast<double>(expr))); \
    break;                             \
  }
#define BIN_F64(expr)                  \
  {                                    \
    const double b = f64_of(pop());    \
    const double a = f64_of(pop());    \
    push(bits_of(static_cast<double>(expr))); \
    break;                             \
  }
#define CMP_F64(expr)                  \
  {                                    \
    const double b = f64_of(pop());    \
    const double a = f64_of(pop());    \
    push((expr) ? 1 : 0);              \
    break;                             \
  }

    switch (in.op) {
      case Opcode::Unreachable:
        throw TrapSignal{TrapKind::Unreachable};
      case Opcode::Nop:
        break;
      case Opcode::Block:
        labels_.push_back(Label{br[pc] + 1, static_cast<std::uint32_t>(stack_.size()),
                                static_cast<std::uint8_t>(in.imm == kEmptyBlock ? 0 : 1)});
        break;
      case Opcode::Loop:
        labels_.push_back(Label{pc + 1, static_cast<std::uint32_t>(stack_.size()), 0, true});
        break;
      case Opcode::If: {
        const std::uint32_t cond = static_cast<std::uint32_t>(pop());
        const std::uint32_t mid = br[pc];
        const bool has_else = code[mid].op == Opcode::Else;
        const std::uint32_t end = has_else ? br[mid] : mid;
        if (cond) {
          labels_.push_back(Label{end + 1, static_cast<std::uint32_t>(stack_.size()),
                                  static_cast<std::uint8_t>(in.imm == kEmptyBlock ? 0 : 1)});
        } else if (has_else) {
          labels_.push_back(Label{end + 1, static_cast<std::uint32_t>(stack_.size()),
                                  static_cast<std::uint8_t>(in.imm == kEmptyBlock ? 0 : 1)});
          next = mid + 1;
        } else {
          next = end + 1;
        }
        break;
      }
      case Opcode::Else:
        // End of the then-arm: continue at the matching end.
        next = br[pc];
        break;
      case Opcode::End:
        labels_.pop_back();
        break;
      case Opcode::Br:
        branch(in.imm, next);
        break;
      case Opcode::BrIf:
        if (static_cast<std::uint32_t>(pop())) branch(in.imm, next);
        break;
      case Opcode::BrTable: {
        const std::uint32_t i = static_cast<std::uint32_t>(pop());
        branch(i < in.targets.size() ? in.targets[i] : in.imm, next);
        break;
      }
      case Opcode::Return:
        branch(static_cast<std::uint32_t>(labels_.size() - 1 - label_base), next);
        break;
      case Opcode::Call:
        call(in.imm);
        cur_func_ = func;
        break;
      case Opcode::CallIndirect: {
        const std::uint32_t i = static_cast<std::uint32_t>(pop());
        if (i >= table_.size()) throw TrapSignal{TrapKind::OutOfBoundsTable};
        if (!table_[i]) throw TrapSignal{TrapKind::UninitializedElement};
        if (!(m_.func_type(*table_[i]) == m_.types[in.imm])) throw TrapSignal{TrapKind::IndirectCallTypeMismatch};
        call(*table_[i]);
        cur_func_ = func;
        break;
      }
      case Opcode::Drop:
        stack_.pop_back();
        break;
      case Opcode::Select: {
        const std::uint32_t c = static_cast<std::uint32_t>(pop());
        const std::uint64_t b = pop();
        const std::uint64_t a = pop();
        push(c ? a : b);
        break;
      }
      case Opcode::LocalGet:
        push(stack_[locals_base + in.imm]);
        break;
      case Opcode::LocalSet:
        stack_[locals_base + in.imm] = pop();
        break;
      case Opcode::LocalTee:
        stack_[locals_base + in.imm] = stack_.back();
        break;
      case Opcode::GlobalGet: {
        const std::uint64_t v = globals_[in.imm];
        const unsigned size = (globals_types_[in.imm] == ValType::I32 || globals_types_[in.imm] == ValType::F32) ? 4 : 8;
        trace.record(MemEvent{MemAccess::Read, MemSpace::Global, kGlobalBase + 8ull * in.imm, size, v});
        push(v);
        break;
      }
      case Opcode::GlobalSet: {
        const std::uint64_t v = pop();
        const unsigned size = (globals_types_[in.imm] == ValType::I32 || globals_types_[in.imm] == ValType::F32) ? 4 : 8;
        trace.record(MemEvent{MemAccess::Write, MemSpace::Global, kGlobalBase + 8ull * in.imm, size, v});
        globals_[in.imm] = v;
        break;
      }

      case Opcode::I32Load: push(load_raw(in, 4)); break;
      case Opcode::I64Load: push(load_raw(in, 8)); break;
      case Opcode::F32Load: push(load_raw(in, 4)); break;
      case Opcode::F64Load: push(load_raw(in, 8)); break;
      case Opcode::I32Load8S: push(static_cast<std::uint32_t>(static_cast<std::int8_t>(load_raw(in, 1)))); break;
      case Opcode::I32Load8U: push(load_raw(in, 1)); break;
      case Opcode::I32Load16S: push(static_cast<std::uint32_t>(static_cast<std::int16_t>(load_raw(in, 2)))); break;
      case Opcode::I32Load16U: push(load_raw(in, 2)); break;
      case Opcode::I64Load8S: push(static_cast<std::uint64_t>(static_cast<std::int8_t>(load_raw(in, 1)))); break;
      case Opcode::I64Load8U: push(load_raw(in, 1)); break;
      case Opcode::I64Load16S: push(static_cast<std::uint64_t>(static_cast<std::int16_t>(load_raw(in, 2)))); break;
      case Opcode::I64Load16U: push(load_raw(in, 2)); break;
      case Opcode::I64Load32S: push(static_cast<std::uint64_t>(static_cast<std::int32_t>(load_raw(in, 4)))); break;
      case Opcode::I64Load32U: push(load_raw(in, 4)); break;
      case Opcode::I32Store:
      case Opcode::F32Store:
      case Opcode::I64Store32: store_raw(in, 4, pop()); break;
      case Opcode::I64Store:
      case Opcode::F64Store: store_raw(in, 8, pop()); break;
      case Opcode::I32Store8:
      case Opcode::I64Store8: store_raw(in, 1, pop()); break;
      case Opcode::I32Store16:
      case Opcode::I64Store16: store_raw(in, 2, pop()); break;
      case Opcode::MemorySize:
        push(st_.memory.size() / kPageSize);
        break;
      case Opcode::MemoryGrow: {
        const std::uint32_t delta = static_cast<std::uint32_t>(pop());
        const std::uint64_t cur = st_.memory.size() / kPageSize;
        if (!has_memory_ || cur + delta > mem_max_pages_) {
          push(0xFFFFFFFFu);
        } else {
          st_.memory.resize((cur + delta) * kPageSize, 0);
          push(cur);
        }
        break;
      }

      case Opcode::I32Const:
      case Opcode::I64Const:
      case Opcode::F32Const:
      case Opcode::F64Const:
        push(in.value);
        break;

      case Opcode::I32Eqz: push(static_cast<std::uint32_t>(pop()) == 0 ? 1 : 0); break;
      case Opcode::I32Eq: BIN_I32(a == b)
      case Opcode::I32Ne: BIN_I32(a != b)
      case Opcode::I32LtS: BIN_I32(static_cast<std::int32_t>(a) < static_cast<std::int32_t>(b))
      case Opcode::I32LtU: BIN_I32(a < b)
      case Opcode::I32GtS: BIN_I32(static_cast<std::int32_t>(a) > static_cast<std::int32_t>(b))
      case Opcode::I32GtU: BIN_I32(a > b)
      case Opcode::I32LeS: BIN_I32(static_cast<std::int32_t>(a) <= static_cast<std::int32_t>(b))
      case Opcode::I32LeU: BIN_I32(a <= b)
      case Opcode::I32GeS: BIN_I32(static_cast<std::int32_t>(a) >= static_cast<std::int32_t>(b))
      case Opcode::I32GeU: BIN_I32(a >= b)
      case Opcode::I64Eqz: push(pop() == 0 ? 1 : 0); break;
      case Opcode::I64Eq: CMP_I64(a == b)
      case Opcode::I64Ne: CMP_I64(a != b)
      case Opcode::I64LtS: CMP_I64(static_cast<std::int64_t>(a) < static_cast<std::int64_t>(b))
      case Opcode::I64LtU: CMP_I64(a < b)
      case Opcode::I64GtS: CMP_I64(static_cast<std::int64_t>(a) > static_cast<std::int64_t>(b))
      case Opcode::I64GtU: CMP_I64(a > b)
      case Opcode::I64LeS: CMP_I64(static_cast<std::int64_t>(a) <= static_cast<std::int64_t>(b))
      case Opcode::I64LeU: CMP_I64(a <= b)
      case Opcode::I64GeS: CMP_I64(static_cast<std::int64_t>(a) >= static_cast<std::int64_t>(b))
      case Opcode::I64GeU: CMP_I64(a >= b)
      case Opcode::F32Eq: CMP_F32(a == b)
      case Opcode::F32Ne: CMP_F32(a != b)
      case Opcode::F32Lt: CMP_F32(a < b)
      case Opcode::F32Gt: CMP_F32(a > b)
      case Opcode::F32Le: CMP_F32(a <= b)
      case Opcode::F32Ge: CMP_F32(a >= b)
      case Opcode::F64Eq: CMP_F64(a == b)
      case Opcode::F64Ne: CMP_F64(a != b)
      case Opcode::F64Lt: CMP_F64(a < b)
      case Opcode::F64Gt: CMP_F64(a > b)
      case Opcode::F64Le: CMP_F64(a <= b)
      case Opcode::F64Ge: CMP_F64(a >= b)

      case Opcode::I32Clz: push(std::countl_zero(static_cast<std::uint32_t>(pop()))); break;
      case Opcode::I32Ctz: push(std::countr_zero(static_cast<std::uint32_t>(pop()))); break;
      case Opcode::I32Popcnt: push(std::popcount(static_cast<std::uint32_t>(pop()))); break;
      case Opcode::I32Add: BIN_I32(a + b)
      case Opcode::I32Sub: BIN_I32(a - b)
      case Opcode::I32Mul: BIN_I32(a * b)
      case Opcode::I32DivS: {
        const std::int32_t b = static_cast<std::int32_t>(pop());
        const std::int32_t a = static_cast<std::int32_t>(pop());
        if (b == 0) throw TrapSignal{TrapKind::IntegerDivideByZero};
        if (a == std::numeric_limits<std::int32_t>::min() && b == -1) throw TrapSignal{TrapKind::IntegerOverflow};
        push(static_cast<std::uint32_t>(a / b));
        break;
      }
      case Opcode::I32DivU: {
        const std::uint32_t b = static_cast<std::uint32_t>(pop());
        const std::uint32_t a = static_cast<std::uint32_t>(pop());
        if (b == 0) throw TrapSignal{TrapKind::IntegerDivideByZero};
        push(a / b);
        break;
      }
      case Opcode::I32RemS: {
        const std::int32_t b = static_cast<std::int32_t>(pop());
        const std::int32_t a = static_cast<std::int32_t>(pop());
        if (b == 0) throw TrapSignal{TrapKind::IntegerDivideByZero};
        push(b == -1 ? 0 : static_cast<std::uint32_t>(a % b));
        break;
      }
      case Opcode::I32RemU: {
        const std::uint32_t b = static_cast<std::uint32_t>(pop());
        const std::uint32_t a = static_cast<std::uint32_t>(pop());
        if (b == 0) throw TrapSignal{TrapKind::IntegerDivideByZero};
        push(a % b);
        break;
      }
      case Opcode::I32And: BIN_I32(a & b)
      case Opcode::I32Or: BIN_I32(a | b)
      case Opcode::I32Xor: BIN_I32(a ^ b)
      case Opcode::I32Shl: BIN_I32(a << (b & 31))
      case Opcode::I32ShrS: BIN_I32(static_cast<std::int32_t>(a) >> (b & 31))
      case Opcode::I32ShrU: BIN_I32(a >> (b & 31))
      case Opcode::I32Rotl: BIN_I32(std::rotl(a, static_cast<int>(b & 31)))
      case Opcode::I32Rotr: BIN_I32(std::rotr(a, static_cast<int>(b & 31)))

      case Opcode::I64Clz: push(std::countl_zero(pop())); break;
      case Opcode::I64Ctz: push(std::countr_zero(pop())); break;
      case Opcode::I64Popcnt: push(std::popcount(pop())); break;
      case Opcode::I64Add: BIN_I64(a + b)
      case Opcode::I64Sub: BIN_I64(a - b)
      case Opcode::I64Mul: BIN_I64(a * b)
      case Opcode::I64DivS: {
        const std::int64_t b = static_cast<std::int64_t>(pop());
        const std::int64_t a = static_cast<std::int64_t>(pop());
        if (b == 0) throw TrapSignal{TrapKind::IntegerDivideByZero};
        if (a == std::numeric_limits<std::int64_t>::min() && b == -1) throw TrapSignal{TrapKind::IntegerOverflow};
        push(static_cast<std::uint64_t>(a / b));
        break;
      }
      case Opcode::I64DivU: {
        const std::uint64_t b = pop();
        const std::uint64_t a = pop();
        if (b == 0) throw TrapSignal{TrapKind::IntegerDivideByZero};
        push(a / b);
        break;
      }
      case Opcode::I64RemS: {
        const std::int64_t b = static_cast<std::int64_t>(pop());
        const std::int64_t a = static_cast<std::int64_t>(pop());
        if (b == 0) throw TrapSignal{TrapKind::IntegerDivideByZero};
        push(b == -1 ? 0 : static_cast<std::uint64_t>(a % b));
        break;
      }
      case Opcode::I64RemU: {
        const std::uint64_t b = pop();
        const std::uint64_t a = pop();
        if (b == 0) throw TrapSignal{TrapKind::IntegerDivideByZero};
        push(a % b);
        break;
      }
      case Opcode::I64And: BIN_I64(a & b)
      case Opcode::I64Or: BIN_I64(a | b)
      case Opcode::I64Xor: BIN_I64(a ^ b)
      case Opcode::I64Shl: BIN_I64(a << (b & 63))
      case Opcode::I64ShrS: BIN_I64(static_cast<std::int64_t>(a) >> (b & 63))
      case Opcode::I64ShrU: BIN_I64(a >> (b & 63))
      case Opcode::I64Rotl: BIN_I64(std::rotl(a, static_cast<int>(b & 63)))
      case Opcode::I64Rotr: BIN_I64(std::rotr(a, static_cast<int>(b & 63)))

      case Opcode::F32Abs: push(static_cast<std::uint32_t>(pop()) & 0x7FFFFFFFu); break;
      case Opcode::F32Neg: push(static_cast<std::uint32_t>(pop()) ^ 0x80000000u); break;
      case Opcode::F32Ceil: UN_F32(std::ceil(a))
      case Opcode::F32Floor: UN_F32(std::floor(a))
      case Opcode::F32Trunc: UN_F32(std::trunc(a))
      case Opcode::F32Nearest: UN_F32(std::nearbyint(a))
      case Opcode::F32Sqrt: UN_F32(std::sqrt(a))
      case Opcode::F32Add: BIN_F32(a + b)
      case Opcode::F32Sub: BIN_F32(a - b)
      case Opcode::F32Mul: BIN_F32(a * b)
      case Opcode::F32Div: BIN_F32(a / b)
      case Opcode::F32Min: BIN_F32(fmin_wasm(a, b))
      case Opcode::F32Max: BIN_F32(fmax_wasm(a, b))
      case Opcode::F32Copysign: {
        const std::uint32_t b = static_cast<std::uint32_t>(pop());
        const std::uint32_t a = static_cast<std::uint32_t>(pop());
        push((a & 0x7FFFFFFFu) | (b & 0x80000000u));
        break;
      }
      case Opcode::F64Abs: push(pop() & 0x7FFFFFFFFFFFFFFFull); break;
      case Opcode::F64Neg: push(pop() ^ 0x8000000000000000ull); break;
      case Opcode::F64Ceil: UN_F64(std::ceil(a))
      case Opcode::F64Floor: UN_F64(std::floor(a))
      case Opcode::F64Trunc: UN_F64(std::trunc(a))
      case Opcode::F64Nearest: UN_F64(std::nearbyint(a))
      case Opcode::F64Sqrt: UN_F64(std::sqrt(a))
      case Opcode::F64Add: BIN_F64(a + b)
      case Opcode::F64Sub: BIN_F64(a - b)
      case Opcode::F64Mul: BIN_F64(a * b)
      case Opcode::F64Div: BIN_F64(a / b)
      case Opcode::F64Min: BIN_F64(fmin_wasm(a, b))
      case Opcode::F64Max: BIN_F64(fmax_wasm(a, b))
      case Opcode::F64Copysign: {
        const std::uint64_t b = pop();
        const std::uint64_t a = pop();
        push((a & 0x7FFFFFFFFFFFFFFFull) | (b & 0x8000000000000000ull));
        break;
      }

      case Opcode::I32WrapI64: push(static_cast<std::uint32_t>(pop())); break;
      case Opcode::I32TruncF32S:
        push(static_cast<std::uint32_t>(trunc_checked<std::int32_t>(f32_of(pop()), -2147483904.0f, 2147483648.0f)));
        break;
      case Opcode::I32TruncF32U:
        push(trunc_checked<std::uint32_t>(f32_of(pop()), -1.0f, 4294967296.0f));
        break;
      case Opcode::I32TruncF64S:
        push(static_cast<std::uint32_t>(trunc_checked<std::int32_t>(f64_of(pop()), -2147483649.0, 2147483648.0)));
        break;
      case Opcode::I32TruncF64U:
        push(trunc_checked<std::uint32_t>(f64_of(pop()), -1.0, 4294967296.0));
        break;
      case Opcode::I64ExtendI32S: push(static_cast<std::uint64_t>(static_cast<std::int32_t>(pop()))); break;
      case Opcode::I64ExtendI32U: push(static_cast<std::uint32_t>(pop())); break;
      case Opcode::I64TruncF32S:
        push(static_cast<std::uint64_t>(
            trunc_checked<std::int64_t>(f32_of(pop()), -9223373136366403584.0f, 9223372036854775808.0f)));
        break;
      case Opcode::I64TruncF32U:
        push(trunc_checked<std::uint64_t>(f32_of(pop()), -1.0f, 18446744073709551616.0f));
        break;
      case Opcode::I64TruncF64S:
        push(static_cast<std::uint64_t>(
            trunc_checked<std::int64_t>(f64_of(pop()), -9223372036854777856.0, 9223372036854775808.0)));
        break;
      case Opcode::I64TruncF64U:
        push(trunc_checked<std::uint64_t>(f64_of(pop()), -1.0, 18446744073709551616.0));
        break;
      case Opcode::F32ConvertI32S: push(bits_of(static_cast<float>(static_cast<std::int32_t>(pop())))); break;
      case Opcode::F32ConvertI32U: push(bits_of(static_cast<float>(static_cast<std::uint32_t>(pop())))); break;
      case Opcode::F32ConvertI64S: push(bits_of(static_cast<float>(static_cast<std::int64_t>(pop())))); break;
      case Opcode::F32ConvertI64U: push(bits_of(static_cast<float>(pop()))); break;
      case Opcode::F32DemoteF64: push(bits_of(static_cast<float>(f64_of(pop())))); break;
      case Opcode::F64ConvertI32S: push(bits_of(static_cast<double>(static_cast<std::int32_t>(pop())))); break;
      case Opcode::F64ConvertI32U: push(bits_of(static_cast<double>(static_cast<std::uint32_t>(pop())))); break;
      case Opcode::F64ConvertI64S: push(bits_of(static_cast<double>(static_cast<std::int64_t>(pop())))); break;
      case Opcode::F64ConvertI64U: push(bits_of(static_cast<double>(pop()))); break;
      case Opcode::F64PromoteF32: push(bits_of(static_cast<double>(f32_of(pop())))); break;
      case Opcode::I32ReinterpretF32:
      case Opcode::I64ReinterpretF64:
      case Opcode::F32ReinterpretI32:
      case Opcode::F64ReinterpretI64:
        break;
    }
#undef BIN_I32
#undef BIN_I64
#undef CMP_I64
#undef UN_F32
#undef BIN_F32
#undef CMP_F32
#undef UN_F64
#undef BIN_F64
#undef CMP_F64
    pc = next;
  }

  // Results sit on top of the operand stack; drop locals and operands below.
  if (result_arity) {
    const std::uint64_t r = stack_.back();
    stack_.resize(locals_base);
    stack_.push_back(r);
  } else {
    stack_.resize(locals_base);
  }
  labels_.resize(label_base);
}

}  // namespace

std::string_view to_string(TrapKind k) {
  switch (k) {
    case TrapKind::Unreachable: return "unreachable";
    case TrapKind::IntegerDivideByZero: return "integer divide by zero";
    case TrapKind::IntegerOverflow: return "integer overflow";
    case TrapKind::InvalidConversion: return "invalid conversion to integer";
    case TrapKind::OutOfBoundsMemory: return "out of bounds memory access";
    case TrapKind::OutOfBoundsTable: return "undefined element";
    case TrapKind::UninitializedElement: return "uninitialized element";
    case TrapKind::IndirectCallTypeMismatch: return "indirect call type mismatch";
    case TrapKind::CallStackExhausted: return "call stack exhausted";
  }
  return "trap";
}

HostEnv HostEnv::standard() {
  HostEnv env;
  auto append = [](std::string& out, const char* s) { out += s; };
  env.define("env", "println", {FuncType{{ValType::I32}, {}}, [append](HostContext& c, std::span<const std::uint64_t> a) {
               char buf[32];
               std::snprintf(buf, sizeof buf, "%d\n", static_cast<std::int32_t>(a[0]));
               append(c.output, buf);
               return std::optional<std::uint64_t>{};
             }});
  env.define("env", "print_i64",
             {FuncType{{ValType::I64}, {}}, [append](HostContext& c, std::span<const std::uint64_t> a) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%lld\n", static_cast<long long>(a[0]));
                append(c.output, buf);
                return std::optional<std::uint64_t>{};
              }});
  env.define("env", "print_f64",
             {FuncType{{ValType::F64}, {}}, [append](HostContext& c, std::span<const std::uint64_t> a) {
                char buf[48];
                std::snprintf(buf, sizeof buf, "%.17g\n", std::bit_cast<double>(a[0]));
                append(c.output, buf);
                return std::optional<std::uint64_t>{};
              }});
  env.define("env", "putchar", {FuncType{{ValType::I32}, {}}, [](HostContext& c, std::span<const std::uint64_t> a) {
               c.output.push_back(static_cast<char>(a[0] & 0xFF));
               return std::optional<std::uint64_t>{};
             }});
  env.define("env", "timer", {FuncType{{}, {ValType::I64}}, [](HostContext& c, std::span<const std::uint64_t>) {
               return std::optional<std::uint64_t>{c.steps};
             }});
  return env;
}

void HostEnv::define(const std::string& module, const std::string& field, HostFunction f) {
  funcs_[{module, field}] = std::move(f);
}

const HostFunction* HostEnv::find(const std::string& module, const std::string& field) const {
  auto it = funcs_.find({module, field});
  return it == funcs_.end() ? nullptr : &it->second;
}

ExecutionState execute(const WasmModule& m, const HostEnv& env, const ExecOptions& opts) {
  std::optional<std::uint32_t> entry = m.start;
  if (!entry) {
    const Export* e = m.find_export("_start");
    if (!e || e->kind != ExternKind::Func || e->index >= m.num_funcs()) throw NoEntryPoint("no start function or _start export");
    const FuncType& t = m.func_type(e->index);
    if (!t.params.empty() || !t.results.empty()) throw NoEntryPoint("_start must have type [] -> []");
    entry = e->index;
  }

  ExecutionState st;
  st.trace = Trace(opts.trace);
  Machine machine(m, env, opts, st);
  try {
    machine.instantiate();
    machine.call(*entry);
  } catch (const TrapSignal& t) {
    st.trap = TrapInfo{t.kind, machine.current_func(), machine.current_pc()};
  } catch (const FuelSignal&) {
    st.fuel_exhausted = true;
  }
  machine.snapshot_globals();
  return st;
}

bool states_equal(const ExecutionState& a, const ExecutionState& b) {
  return a.memory == b.memory && a.globals == b.globals && a.output == b.output;
}

bool same_outcome(const ExecutionState& a, const ExecutionState& b) {
  if (a.fuel_exhausted != b.fuel_exhausted) return false;
  if (a.trap.has_value() != b.trap.has_value()) return false;
  return !a.trap || a.trap->kind == b.trap->kind;
}

}  // namespace wmutate
