#include "wmutate/mutator.hpp"

#include "wmutate/validator.hpp"

namespace wmutate {

MutationOutcome mutate(const WasmModule& m, const MutationConfig& cfg, Rng& rng) {
  if (cfg.enabled.empty()) throw std::invalid_argument("no meta-rule enabled");
  if (cfg.max_retries < 1) throw std::invalid_argument("max_retries must be at least 1");
  PeepholeConfig peephole;
  peephole.depth = cfg.peephole_depth;
  peephole.egraph = cfg.egraph;
  for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
    const MetaRuleKind kind = cfg.enabled[rng.below(cfg.enabled.size())];
    Rng sub = rng.split();
    MutationOutcome out;
    try {
      out.variant = apply_meta_rule(kind, m, sub, peephole, &out.site);
    } catch (const NotApplicable&) {
      continue;
    }
    if (out.variant == m) continue;
    const ValidationReport report = static_validate(out.variant);
    if (!report.ok()) {
      throw InvalidVariant(std::string(to_string(kind)) + " at " + out.site + " produced an invalid module: " +
                           report.to_string());
    }
    out.applied = kind;
    out.retries_used = attempt;
    return out;
  }
  throw Exhausted("no applicable transformation after " + std::to_string(cfg.max_retries) + " attempts");
}

MutationOutcome mutate(const WasmModule& m, const MutationConfig& cfg) {
  Rng rng(cfg.seed);
  return mutate(m, cfg, rng);
}

WasmModule stack(const WasmModule& m, const MutationConfig& cfg, int n) {
  if (n < 1) throw std::invalid_argument("stack depth must be at least 1");
  Rng rng(cfg.seed);
  WasmModule cur = m;
  for (int i = 0; i < n; ++i) cur = mutate(cur, cfg, rng).variant;
  return cur;
}

}  // namespace wmutate
