#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wmutate/dataflow.hpp"
#include "wmutate/module.hpp"
#include "wmutate/rules.hpp"

namespace wmutate::testing {

struct CorpusProgram {
  std::string name;
  Bytes bytes;
  WasmModule module;
};

/// Every .wasm file of the bundled corpus, sorted by name.
const std::vector<CorpusProgram>& corpus();

/// `op (child) (child)` with instruction text for operators.
std::string to_sexpr(const ExprTree& t);

/// The two rules of the worked example: x -> x | x and x -> x + 0 over i64.
std::vector<RewriteRule> example_rules();
ExprTree i64_const_tree(std::int64_t v);

struct RuleCheck {
  std::string rule;
  std::size_t samples = 0;
  std::size_t skipped = 0;  // condition rejected the sample
  std::size_t failures = 0;
  std::string first_failure;
};

/// Evaluates both sides of `rule` on the boundary set of every hole
/// (exhaustively combined) and on `random_samples` seeded random tuples,
/// once with value holes as constants and once with them loaded from memory,
/// and compares the final states bit for bit.
RuleCheck check_rule(const RewriteRule& rule, std::size_t random_samples = 1000, std::uint64_t seed = 1);

/// Deliberately unsound: shl(x, c) -> mul(x, 1 << c) without masking c.
RewriteRule unmasked_shift_rule();

}  // namespace wmutate::testing
