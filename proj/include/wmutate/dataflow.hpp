#pragma once

#include <optional>
#include <vector>

#include "wmutate/errors.hpp"
#include "wmutate/module.hpp"

namespace wmutate {

/// Operator of an expression node. Besides plain instructions there is the
/// synthetic `container`, which splices its children in order and carries
/// the type of its single value child, and placeholders that are bound to
/// fresh locals/globals when the expression is spliced into a function.
struct ExprOp {
  enum class Kind : std::uint8_t { Instr, Container, FreshTee, FreshGet, FreshGlobalSet };

  Kind kind = Kind::Instr;
  Instruction instr;            // Kind::Instr
  std::uint32_t fresh = 0;      // placeholder id
  ValType fresh_type = ValType::I32;

  bool operator==(const ExprOp&) const = default;

  static ExprOp of(Instruction in) {
    ExprOp o;
    o.instr = std::move(in);
    return o;
  }
  static ExprOp container() {
    ExprOp o;
    o.kind = Kind::Container;
    return o;
  }
  static ExprOp placeholder(Kind k, std::uint32_t id, ValType t) {
    ExprOp o;
    o.kind = k;
    o.fresh = id;
    o.fresh_type = t;
    return o;
  }
};

struct ExprNode {
  ExprOp op;
  std::vector<ExprNode> children;
  std::optional<ValType> type;
  // Source range [begin, end) inside the body, for nodes built from code.
  std::uint32_t begin = 0;
  std::uint32_t end = 0;

  bool operator==(const ExprNode& o) const { return op == o.op && children == o.children && type == o.type; }

  std::size_t size() const;
  std::size_t height() const;
};

using ExprTree = ExprNode;

enum class Purity : std::uint8_t { Deterministic, Tainted };

struct Segment {
  std::uint32_t func_index = 0;  // in the function index space
  std::uint32_t start = 0;       // instruction range [start, end) in the body
  std::uint32_t end = 0;
  Purity purity = Purity::Deterministic;
  std::optional<ValType> result;

  bool operator==(const Segment&) const = default;
};

class UnsupportedShape : public Error {
 public:
  using Error::Error;
};

/// call, call_indirect, memory.grow, unreachable and every branch.
bool is_taint_op(Opcode op);

/// Maximal intra-block expression ranges of a defined function. Tainted
/// roots are reported once; the maximal deterministic subtrees inside them
/// are reported as separate deterministic segments.
std::vector<Segment> extract_segments(const WasmModule& m, std::uint32_t func_index);

/// Rebuilds the expression tree of a deterministic segment. Several
/// statements (and at most one value) become a container node.
ExprTree segment_to_expr(const WasmModule& m, const Segment& seg);

/// Binds placeholder ids to concrete indices during linearization.
class FreshResolver {
 public:
  virtual ~FreshResolver() = default;
  virtual std::uint32_t local(std::uint32_t id, ValType t) = 0;
  virtual std::uint32_t global(std::uint32_t id, ValType t) = 0;
};

/// Post-order linearization. Placeholders require a resolver.
std::vector<Instruction> expr_to_instrs(const ExprTree& t, FreshResolver* fresh = nullptr);

/// Placeholder id -> existing global index.
using GlobalBindings = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

/// Replaces body instructions [start, end) of a defined function with
/// the linearized `t`, allocating fresh locals/globals for placeholders
/// not listed in `globals`.
void splice_expr(WasmModule& m, std::uint32_t func_index, std::uint32_t start, std::uint32_t end, const ExprTree& t,
                 const GlobalBindings& globals = {});

}  // namespace wmutate
