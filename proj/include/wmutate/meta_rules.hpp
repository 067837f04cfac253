#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "wmutate/egraph.hpp"
#include "wmutate/errors.hpp"
#include "wmutate/module.hpp"
#include "wmutate/rng.hpp"

namespace wmutate {

enum class MetaRuleKind : std::uint8_t {
  AddType,
  AddFunction,
  RemoveDeadItem,
  EditCustomSection,
  IfSwap,
  LoopUnroll,
  Peephole,
};

inline constexpr MetaRuleKind kAllMetaRules[] = {
    MetaRuleKind::AddType,  MetaRuleKind::AddFunction, MetaRuleKind::RemoveDeadItem, MetaRuleKind::EditCustomSection,
    MetaRuleKind::IfSwap,   MetaRuleKind::LoopUnroll,  MetaRuleKind::Peephole,
};

std::string_view to_string(MetaRuleKind k);
/// Accepts the kebab-case names printed by to_string.
std::optional<MetaRuleKind> parse_meta_rule(std::string_view name);

/// The chosen meta-rule has no site in the module.
class NotApplicable : public Error {
 public:
  using Error::Error;
};
class NoDeadItem : public NotApplicable {
 public:
  NoDeadItem() : NotApplicable("no dead item") {}
};
class NoCustomSection : public NotApplicable {
 public:
  NoCustomSection() : NotApplicable("no custom section") {}
};
class NoIfFound : public NotApplicable {
 public:
  NoIfFound() : NotApplicable("no if construct") {}
};
class NoLoopFound : public NotApplicable {
 public:
  NoLoopFound() : NotApplicable("no loop") {}
};
class NoEligibleSegment : public NotApplicable {
 public:
  NoEligibleSegment() : NotApplicable("no eligible segment") {}
};

struct PeepholeConfig {
  int depth = 4;
  EGraphConfig egraph;
  const std::vector<RewriteRule>* rules = nullptr;  // builtin catalog when null
};

/// Every applier returns a new module and, when `site` is given, a short
/// description of where it applied.
WasmModule apply_add_type(const WasmModule& m, Rng& rng, std::string* site = nullptr);
WasmModule apply_add_function(const WasmModule& m, Rng& rng, std::string* site = nullptr);
WasmModule apply_remove_dead_item(const WasmModule& m, Rng& rng, std::string* site = nullptr);
WasmModule apply_edit_custom_section(const WasmModule& m, Rng& rng, std::string* site = nullptr);
WasmModule apply_if_swap(const WasmModule& m, Rng& rng, std::string* site = nullptr);
WasmModule apply_loop_unroll(const WasmModule& m, Rng& rng, std::string* site = nullptr);
WasmModule apply_peephole(const WasmModule& m, Rng& rng, const PeepholeConfig& cfg = {}, std::string* site = nullptr);

WasmModule apply_meta_rule(MetaRuleKind k, const WasmModule& m, Rng& rng, const PeepholeConfig& peephole = {},
                           std::string* site = nullptr);

/// Dead items as "kind:index" strings, in the order apply_remove_dead_item draws from.
std::vector<std::string> dead_items(const WasmModule& m);

}  // namespace wmutate
