#include <gtest/gtest.h>

#include <filesystem>

#include "support.hpp"
#include "wmutate/builder.hpp"
#include "wmutate/campaign.hpp"
#include "wmutate/codec.hpp"
#include "wmutate/sha256.hpp"
#include "wmutate/validator.hpp"

namespace {

using namespace wmutate;
using namespace std::chrono_literals;
using wmutate::testing::corpus;

const wmutate::testing::CorpusProgram& program(const std::string& name) {
  for (const auto& p : corpus()) {
    if (p.name == name) return p;
  }
  throw std::invalid_argument(name);
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("wmutate-test-" + name)).string();
}

TEST(Distribution, Summaries) {
  const auto d = Distribution::of({3, 1, 2, 10});
  EXPECT_EQ(d.min, 1);
  EXPECT_EQ(d.max, 10);
  EXPECT_EQ(d.median, 2.5);
  EXPECT_EQ(d.count, 4u);
  EXPECT_EQ(Distribution::of({4, 1, 9}).median, 4);
  EXPECT_EQ(Distribution::of({}).count, 0u);
}

TEST(Population, CountsDistinctHashes) {
  const Bytes origin{0, 97, 115, 109, 1, 0, 0, 0};
  Population p(origin);
  EXPECT_EQ(population_size(p), 0u);
  const Bytes v{1, 2, 3};
  for (int i = 0; i < 5; ++i) p.insert(sha256_hex(v), v, {});
  EXPECT_EQ(population_size(p), 1u);
  EXPECT_FALSE(p.insert(p.origin_hash(), origin, {}));
  EXPECT_EQ(population_size(p), 1u);
}

TEST(Preservation, IdentityKeepsEverything) {
  const auto& prog = corpus()[0];
  Population p(prog.bytes);
  MutationConfig cfg;
  for (std::uint64_t s = 0; s < 20; ++s) {
    cfg.seed = s;
    const Bytes b = encode_module(mutate(prog.module, cfg).variant);
    p.insert(sha256_hex(b), b, {});
  }
  const auto r = preservation_ratio(p, IdentityCanonicalizer());
  EXPECT_EQ(r.ratio, 1.0);
  EXPECT_EQ(r.distinct, population_size(p));
}

TEST(Preservation, CustomSectionVariantsCollapse) {
  WasmModule m = corpus()[0].module;
  m.customs.clear();
  Population p(encode_module(m));
  for (int i = 0; i < 8; ++i) {
    WasmModule v = m;
    v.customs.push_back(CustomSection{"note", {static_cast<std::uint8_t>(i)}, SectionId::Data});
    const Bytes b = encode_module(v);
    p.insert(sha256_hex(b), b, {});
  }
  ASSERT_EQ(population_size(p), 8u);
  const auto r = preservation_ratio(p, NormalizingCanonicalizer());
  EXPECT_DOUBLE_EQ(r.ratio, 1.0 / 8);
}

TEST(Canonicalizer, NormalizeIsIdempotentAndValid) {
  for (const auto& prog : corpus()) {
    NormalizingCanonicalizer c;
    const Bytes once = c.apply(prog.bytes);
    EXPECT_EQ(c.apply(once), once) << prog.name;
    const WasmModule n = parse_module(once);
    EXPECT_TRUE(static_validate(n).ok()) << prog.name;
    const auto a = execute(prog.module, HostEnv::standard());
    const auto b = execute(n, HostEnv::standard());
    EXPECT_EQ(a.output, b.output) << prog.name;
  }
}

TEST(Canonicalizer, FactoryAndCommand) {
  EXPECT_EQ(make_canonicalizer("identity")->name(), "identity");
  EXPECT_EQ(make_canonicalizer("normalize")->name(), "normalize");
  EXPECT_THROW(make_canonicalizer("nope"), std::invalid_argument);
  const auto cat = make_canonicalizer("cmd:cp {in} {out}");
  const Bytes b{1, 2, 3};
  EXPECT_EQ(cat->apply(b), b);
  EXPECT_THROW(make_canonicalizer("cmd:false")->apply(b), CanonicalizerFailure);
}

TEST(Metrics, RelativeSize) {
  EXPECT_EQ(relative_size({1, 2}, {1, 2}), 1.0);
  const WasmModule m = corpus()[0].module;
  Rng rng(1);
  const Bytes grown = encode_module(apply_add_function(m, rng));
  EXPECT_GT(relative_size(encode_module(m), grown), 1.0);
}

TEST(Metrics, RelativeSteps) {
  ExecutionState a, b;
  a.steps = 10;
  b.steps = 15;
  EXPECT_EQ(relative_steps(a, b), 1.5);
  a.steps = 0;
  EXPECT_THROW(relative_steps(a, b), DivisionByZero);
  const WasmModule m = corpus()[0].module;
  Rng rng(2);
  const auto v = apply_add_function(m, rng);
  EXPECT_EQ(relative_steps(execute(m, HostEnv::standard()), execute(v, HostEnv::standard())), 1.0);
}

TEST(DiversifyLoop, ReturnedVariantIsEquivalentAndDivergent) {
  for (const auto& prog : corpus()) {
    for (TraceKind kind : {TraceKind::Instructions, TraceKind::Memory}) {
      LoopConfig cfg;
      cfg.mutation.seed = 4;
      cfg.kind = kind;
      const LoopResult r = diversify_loop(prog.module, cfg, HostEnv::standard(), 60s);
      const auto original = execute(prog.module, HostEnv::standard());
      const auto again = execute(parse_module(r.bytes), HostEnv::standard());
      EXPECT_TRUE(states_equal(original, again)) << prog.name;
      EXPECT_TRUE(traces_differ(original.trace, again.trace, kind)) << prog.name;
      const auto& g = r.report.gates;
      EXPECT_LE(g.executed + g.invalid + g.duplicate + g.canonical_duplicate + g.canonical_failure + g.exhausted,
                g.iterations);
      if (kind == TraceKind::Instructions) {
        EXPECT_TRUE(r.report.time_to_diff_instr_trace.has_value());
      } else {
        EXPECT_TRUE(r.report.time_to_diff_mem_trace.has_value());
      }
    }
  }
}

TEST(DiversifyLoop, UnrollOnHotLoopReturnsImmediately) {
  LoopConfig cfg;
  cfg.mutation.enabled = {MetaRuleKind::LoopUnroll};
  const LoopResult r = diversify_loop(program("collatz").module, cfg, HostEnv::standard(), 60s);
  EXPECT_EQ(r.report.gates.iterations, 1u);
  EXPECT_EQ(r.stack_depth, 1u);
}

class ConstantCanonicalizer : public Canonicalizer {
 public:
  std::string name() const override { return "constant"; }
  Bytes apply(const Bytes&) const override { return {42}; }
};

TEST(DiversifyLoop, CanonicalDuplicatesAreNeverExecuted) {
  LoopConfig cfg;
  ConstantCanonicalizer canon;
  cfg.canonicalizer = &canon;
  try {
    diversify_loop(corpus()[0].module, cfg, HostEnv::standard(), 300ms);
    FAIL();
  } catch (const DeadlineExceeded& e) {
    EXPECT_GT(e.report().gates.iterations, 0u);
    EXPECT_EQ(e.report().gates.executed, 0u);
    EXPECT_GT(e.report().gates.canonical_duplicate, 0u);
  }
}

// A host whose output changes between runs makes every variant look different.
HostEnv flaky_host() {
  HostEnv env = HostEnv::standard();
  auto counter = std::make_shared<int>(0);
  env.define("env", "println", {FuncType{{ValType::I32}, {}}, [counter](HostContext& c, std::span<const std::uint64_t>) {
               c.output += std::to_string((*counter)++) + "\n";
               return std::optional<std::uint64_t>{};
             }});
  return env;
}

TEST(DiversifyLoop, StateMismatchIsAViolation) {
  LoopConfig cfg;
  EXPECT_THROW(diversify_loop(program("fib").module, cfg, flaky_host(), 30s), EquivalenceViolation);
}

TEST(DiversifyLoop, TrappingOriginalIsRejected) {
  ModuleBuilder b;
  const auto f = b.func({}, {}, {}, {Instruction::simple(Opcode::Unreachable)});
  b.export_func("_start", f);
  EXPECT_THROW(diversify_loop(b.build(), LoopConfig{}, HostEnv::standard(), 1s), OriginalFails);
}

TEST(Campaign, BoundedRunGrowsPopulation) {
  CampaignConfig cfg;
  cfg.mutation.seed = 8;
  cfg.max_iterations = 150;
  Population pop(Bytes{});
  const auto r = run_campaign(program("sieve").module, cfg, HostEnv::standard(), &pop);
  EXPECT_EQ(r.gates.iterations, 150u);
  EXPECT_EQ(r.population_size, population_size(pop));
  EXPECT_EQ(r.population_size, r.gates.accepted);
  EXPECT_GT(r.population_size, 100u);
  EXPECT_FALSE(pop.contains(pop.origin_hash()));
  ASSERT_TRUE(r.preservation.has_value());
  EXPECT_LE(r.preservation->ratio, 1.0);
  EXPECT_GT(r.preservation->ratio, 0.0);
  ASSERT_TRUE(r.relative_sizes.has_value());
  EXPECT_LE(r.relative_sizes->min, r.relative_sizes->median);
  EXPECT_LE(r.relative_sizes->median, r.relative_sizes->max);
  for (const auto& v : pop.records()) {
    EXPECT_GE(v.lineage.stack_depth, 1u);
    EXPECT_EQ(v.hash, sha256_hex(v.bytes));
  }
  const auto j = r.to_json();
  for (const char* key : {"population_size", "preservation_ratio", "time_to_diff_instr_trace",
                          "time_to_diff_mem_trace", "relative_sizes", "relative_steps"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}

TEST(Campaign, JournalIsDeterministicAndResumes) {
  const std::string a = temp_path("journal-a.jsonl"), b = temp_path("journal-b.jsonl");
  std::filesystem::remove(a);
  std::filesystem::remove(b);
  CampaignConfig cfg;
  cfg.mutation.seed = 3;
  cfg.max_iterations = 60;
  cfg.compute_preservation = false;
  cfg.journal_path = a;
  const auto r1 = run_campaign(program("fib").module, cfg, HostEnv::standard());
  cfg.journal_path = b;
  run_campaign(program("fib").module, cfg, HostEnv::standard());
  std::ifstream fa(a), fb(b);
  const std::string ta((std::istreambuf_iterator<char>(fa)), {}), tb((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_FALSE(ta.empty());
  EXPECT_EQ(ta, tb);

  cfg.journal_path = a;
  cfg.mutation.seed = 4;
  const auto r2 = run_campaign(program("fib").module, cfg, HostEnv::standard());
  EXPECT_GT(r2.population_size, r1.population_size);
  Journal j(a);
  EXPECT_EQ(j.entries().size(), r2.population_size);
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST(Campaign, ParallelWorkersShareOnePopulation) {
  CampaignConfig cfg;
  cfg.mutation.seed = 2;
  cfg.seeds = 4;
  cfg.jobs = 2;
  cfg.max_iterations = 200;
  cfg.compute_preservation = false;
  Population pop(Bytes{});
  const auto r = run_campaign(program("queens").module, cfg, HostEnv::standard(), &pop);
  EXPECT_EQ(r.gates.iterations, 200u);
  EXPECT_EQ(r.population_size, pop.size());
}

TEST(Campaign, PerformanceImpactSmall) {
  MutationConfig cfg;
  cfg.seed = 1;
  const auto r = performance_impact(program("array_sum").module, cfg, HostEnv::standard(), 4, 15);
  ASSERT_EQ(r.samples.size(), 4u);
  EXPECT_EQ(r.sizes.count, 4u);
  EXPECT_GE(r.steps.min, 0.0);
  const auto again = performance_impact(program("array_sum").module, cfg, HostEnv::standard(), 4, 15, 2);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(r.samples[i].relative_size, again.samples[i].relative_size);
}

}  // namespace
