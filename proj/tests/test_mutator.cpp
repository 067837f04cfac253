#include <gtest/gtest.h>

#include "support.hpp"
#include "wmutate/builder.hpp"
#include "wmutate/codec.hpp"
#include "wmutate/interpreter.hpp"
#include "wmutate/mutator.hpp"
#include "wmutate/sha256.hpp"

namespace {

using namespace wmutate;

TEST(Mutator, SingleMutationChangesModule) {
  for (const auto& p : wmutate::testing::corpus()) {
    MutationConfig cfg;
    cfg.seed = 5;
    const auto out = mutate(p.module, cfg);
    EXPECT_NE(encode_module(out.variant), encode_module(p.module)) << p.name;
    EXPECT_FALSE(out.site.empty());
  }
}

TEST(Mutator, DeterministicPerSeed) {
  const auto& p = wmutate::testing::corpus()[0];
  MutationConfig cfg;
  cfg.seed = 123;
  EXPECT_EQ(encode_module(stack(p.module, cfg, 20)), encode_module(stack(p.module, cfg, 20)));
  cfg.seed = 124;
  MutationConfig other = cfg;
  other.seed = 125;
  EXPECT_NE(encode_module(stack(p.module, cfg, 20)), encode_module(stack(p.module, other, 20)));
}

TEST(Mutator, StackEqualsSequentialMutation) {
  const auto& p = wmutate::testing::corpus()[1];
  MutationConfig cfg;
  cfg.seed = 9;
  Rng rng(cfg.seed);
  WasmModule cur = p.module;
  for (int i = 0; i < 10; ++i) cur = mutate(cur, cfg, rng).variant;
  EXPECT_EQ(cur, stack(p.module, cfg, 10));
}

TEST(Mutator, ExhaustedWhenNothingApplies) {
  ModuleBuilder b;
  const auto f = b.func({}, {}, {}, {});
  b.export_func("_start", f);
  MutationConfig cfg;
  cfg.enabled = {MetaRuleKind::EditCustomSection, MetaRuleKind::IfSwap};
  cfg.max_retries = 10;
  EXPECT_THROW(mutate(b.build(), cfg), Exhausted);
}

TEST(Mutator, EnabledSubsetIsRespected) {
  const auto& p = wmutate::testing::corpus()[2];
  MutationConfig cfg;
  cfg.enabled = {MetaRuleKind::AddType};
  for (std::uint64_t s = 0; s < 10; ++s) {
    cfg.seed = s;
    EXPECT_EQ(mutate(p.module, cfg).applied, MetaRuleKind::AddType);
  }
}

TEST(Mutator, RejectsEmptyConfiguration) {
  MutationConfig cfg;
  cfg.enabled.clear();
  EXPECT_THROW(mutate(wmutate::testing::corpus()[0].module, cfg), std::invalid_argument);
}

// Stacked variants at growing depths keep the original final state.
TEST(Mutator, StackedVariantsStayEquivalent) {
  for (const auto& p : wmutate::testing::corpus()) {
    const auto original = execute(p.module, HostEnv::standard());
    MutationConfig cfg;
    cfg.seed = 1000;
    Rng rng(cfg.seed);
    WasmModule cur = p.module;
    for (int depth = 1; depth <= 60; ++depth) {
      cur = mutate(cur, cfg, rng).variant;
      if (depth % 10) continue;
      const auto s = execute(cur, HostEnv::standard());
      ASSERT_TRUE(same_outcome(original, s)) << p.name << " depth " << depth;
      ASSERT_TRUE(states_equal(original, s)) << p.name << " depth " << depth;
    }
  }
}

}  // namespace
