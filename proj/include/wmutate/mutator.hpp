#pragma once

#include <string>
#include <vector>

#include "wmutate/meta_rules.hpp"

namespace wmutate {

struct MutationConfig {
  std::uint64_t seed = 0;
  std::vector<MetaRuleKind> enabled{std::begin(kAllMetaRules), std::end(kAllMetaRules)};
  int peephole_depth = 4;
  int max_retries = 100;
  bool preserve_semantics = true;
  EGraphConfig egraph;
};

struct MutationOutcome {
  WasmModule variant;
  MetaRuleKind applied = MetaRuleKind::Peephole;
  std::string site;
  int retries_used = 0;
};

/// No enabled meta-rule produced a changed module within the retry budget.
class Exhausted : public Error {
 public:
  using Error::Error;
};

/// An applier produced a module that fails static validation.
class InvalidVariant : public Error {
 public:
  using Error::Error;
};

/// One transformation drawn from `rng`: a uniformly chosen enabled kind,
/// then a uniformly chosen site. Inapplicable or no-op draws are retried
/// with a fresh kind.
MutationOutcome mutate(const WasmModule& m, const MutationConfig& cfg, Rng& rng);
/// Same, with the stream seeded from cfg.seed.
MutationOutcome mutate(const WasmModule& m, const MutationConfig& cfg);

/// `n` sequential mutations on one stream seeded from cfg.seed.
WasmModule stack(const WasmModule& m, const MutationConfig& cfg, int n);

}  // namespace wmutate
