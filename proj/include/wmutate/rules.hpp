#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "wmutate/dataflow.hpp"
#include "wmutate/rng.hpp"

namespace wmutate {

/// Effect summary of an expression, used by rule conditions.
struct Effects {
  bool writes = false;     // stores, local.set/tee, global.set
  bool reads_mem = false;  // linear-memory loads
  bool may_trap = false;   // memory access, integer division, float-to-int truncation
  bool binds = false;      // assigns a synthetic local
  bool ordered = false;    // reads a synthetic local, so must stay after its binding

  Effects& operator|=(const Effects& o) {
    writes |= o.writes;
    reads_mem |= o.reads_mem;
    may_trap |= o.may_trap;
    binds |= o.binds;
    ordered |= o.ordered;
    return *this;
  }
  bool operator==(const Effects&) const = default;

  /// May be evaluated twice instead of once.
  bool copyable() const { return !writes && !reads_mem && !binds; }
  /// May be evaluated once instead of twice.
  bool collapsible() const { return !writes && !binds; }
  /// May be dropped entirely.
  bool discardable() const { return !writes && !may_trap && !binds; }
};

Effects op_effects(const ExprOp& op);
/// The operator never yields a NaN other than the canonical one.
bool op_canonical_nan(const ExprOp& op);

/// Pattern over expression trees. `slot` indexes the match bindings.
struct Pattern {
  enum class Kind : std::uint8_t {
    Var,       // any expression of `type` (nullopt: a statement)
    Op,        // operator with sub-patterns
    Const,     // constant with exact `bits`
    ConstVar,  // any constant of `type`, value bound to `slot`
  };

  Kind kind = Kind::Var;
  std::uint32_t slot = 0;
  std::optional<ValType> type;
  ExprOp op;
  std::uint64_t bits = 0;
  std::vector<Pattern> kids;

  std::string to_string() const;
};

struct Bindings {
  static constexpr std::size_t kSlots = 6;
  static constexpr std::uint32_t kUnbound = 0xFFFFFFFFu;

  std::array<std::uint32_t, kSlots> node{};  // bound e-class (or caller-defined handle) per Var slot
  std::array<std::uint64_t, kSlots> value{};  // bound constant per ConstVar slot
  std::array<bool, kSlots> has_value{};

  Bindings() { node.fill(kUnbound); }
};

/// Per-slot facts about matched sub-expressions.
class Facts {
 public:
  virtual ~Facts() = default;
  virtual Effects effects(std::uint32_t slot) const = 0;
  virtual bool canonical_nan(std::uint32_t slot) const = 0;
};

struct RewriteRule {
  std::string name;
  Pattern lhs;
  Pattern rhs;
  std::string cond_text;  // empty when unconditional
  std::function<bool(const Bindings&, const Facts&)> cond;
  // Fills ConstVar slots that appear only on the right-hand side.
  std::function<void(Bindings&, Rng&)> compute;

  bool applicable(const Bindings& b, const Facts& f) const { return !cond || cond(b, f); }
};

/// The peephole catalog, instantiated for every applicable value type and
/// registered in both directions where the right-hand side binds no new
/// expression holes.
const std::vector<RewriteRule>& builtin_rules();

/// Rules whose name starts with one of the given prefixes.
std::vector<RewriteRule> select_rules(const std::vector<std::string>& names);

/// Catalog as a JSON array of {name, lhs, rhs, cond}.
std::string rules_to_json(const std::vector<RewriteRule>& rules);

/// Builds a concrete tree from a pattern. Var slots are produced by
/// `var_tree`; placeholder ids are offset by `fresh_base`.
ExprTree instantiate_tree(const Pattern& p, const Bindings& b, const std::function<ExprTree(std::uint32_t)>& var_tree,
                          std::uint32_t fresh_base = 0);

/// Pattern construction helpers.
namespace pat {
Pattern var(std::uint32_t slot, std::optional<ValType> t);
Pattern lit(ValType t, std::uint64_t bits);
Pattern cvar(std::uint32_t slot, ValType t);
Pattern op(Opcode o, std::vector<Pattern> kids);
Pattern op(const Instruction& in, std::vector<Pattern> kids);
Pattern container(std::vector<Pattern> kids);
Pattern fresh_tee(ValType t, Pattern x);
Pattern fresh_get(ValType t);
Pattern fresh_global_set(ValType t, Pattern value);
}  // namespace pat

}  // namespace wmutate
