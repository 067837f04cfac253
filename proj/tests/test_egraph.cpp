#include <map>
#include <gtest/gtest.h>

#include <limits>

#include "support.hpp"
#include "wmutate/egraph.hpp"

namespace {

using namespace wmutate;
using wmutate::testing::example_rules;
using wmutate::testing::i64_const_tree;
using wmutate::testing::to_sexpr;

ENode leaf(const Instruction& in) { return ENode{ExprOp::of(in), {}}; }

TEST(EGraph, HashconsSharesIdenticalNodes) {
  EGraph g;
  const auto a = g.add(leaf(Instruction::i32_const(1)), ValType::I32);
  const auto b = g.add(leaf(Instruction::i32_const(1)), ValType::I32);
  EXPECT_EQ(a, b);
  EXPECT_EQ(g.num_nodes(), 1u);
}

TEST(EGraph, MergeKeepsLowerIdAsRoot) {
  EGraph g;
  const auto a = g.add(leaf(Instruction::i32_const(1)), ValType::I32);
  const auto b = g.add(leaf(Instruction::i32_const(2)), ValType::I32);
  EXPECT_TRUE(g.merge(b, a));
  EXPECT_FALSE(g.merge(a, b));
  g.rebuild();
  EXPECT_EQ(g.find(b), a);
  EXPECT_EQ(g.num_classes(), 1u);
  EXPECT_EQ(g.class_nodes(a).size(), 2u);
}

TEST(EGraph, RebuildRestoresCongruence) {
  EGraph g;
  const auto a = g.add(leaf(Instruction::i32_const(1)), ValType::I32);
  const auto b = g.add(leaf(Instruction::i32_const(2)), ValType::I32);
  const auto fa = g.add(ENode{ExprOp::of(Instruction::simple(Opcode::I32Eqz)), {a}}, ValType::I32);
  const auto fb = g.add(ENode{ExprOp::of(Instruction::simple(Opcode::I32Eqz)), {b}}, ValType::I32);
  EXPECT_NE(g.find(fa), g.find(fb));
  g.merge(a, b);
  g.rebuild();
  EXPECT_EQ(g.find(fa), g.find(fb));
  EXPECT_TRUE(g.check_congruence());
}

TEST(EGraph, WorkedExampleForcedChoices) {
  Rng rng(0);
  EGraphConfig cfg;
  cfg.passes = 1;
  auto [g, root] = egraph_build(i64_const_tree(1), example_rules(), rng, cfg);
  EXPECT_TRUE(g.check_congruence());
  // One class holding the constant, the or-node and the add-node; the zero gets its own class.
  EXPECT_EQ(g.num_classes(), 2u);
  EXPECT_EQ(g.class_nodes(root).size(), 3u);
  SequenceChooser chooser({1, 2, 0, 0, 0});
  const ExprTree t = traverse(g, root, 3, chooser);
  EXPECT_EQ(to_sexpr(t), "i64.or (i64.add (i64.const 1) (i64.const 0)) (i64.const 1)");
  EXPECT_EQ(chooser.consumed(), 5u);
}

TEST(EGraph, DepthZeroReturnsSmallestTree) {
  Rng rng(0);
  auto [g, root] = egraph_build(i64_const_tree(1), example_rules(), rng);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(to_sexpr(traverse(g, root, 0, rng)), "i64.const 1");
}

TEST(EGraph, SequenceChooserRunsOut) {
  Rng rng(0);
  auto [g, root] = egraph_build(i64_const_tree(1), example_rules(), rng);
  SequenceChooser chooser({1});
  EXPECT_THROW(traverse(g, root, 3, chooser), std::out_of_range);
}

TEST(EGraph, NodeCapRaisesBudgetExceeded) {
  Rng rng(0);
  EGraphConfig cfg;
  cfg.passes = 5;
  cfg.node_cap = 4;
  EXPECT_THROW(egraph_build(i64_const_tree(1), builtin_rules(), rng, cfg), BudgetExceeded);
}

TEST(EGraph, EmatchBindsVariables) {
  Rng rng(0);
  auto [g, root] = egraph_build(i64_const_tree(7), example_rules(), rng);
  const Pattern p = pat::op(Opcode::I64Add, {pat::var(0, ValType::I64), pat::lit(ValType::I64, 0)});
  const auto matches = ematch(g, p, root);
  ASSERT_EQ(matches.size(), 1u);
  EXPECT_EQ(g.find(matches[0].node[0]), g.find(root));
}

// Minimum tree size with height at most h, by recursion memoized on (class, h).
std::size_t brute_min(const EGraph& g, ClassId c, int h, std::map<std::pair<ClassId, int>, std::size_t>& memo) {
  constexpr std::size_t inf = std::numeric_limits<std::size_t>::max() / 4;
  if (h == 0) return inf;
  c = g.find(c);
  if (auto it = memo.find({c, h}); it != memo.end()) return it->second;
  std::size_t best = inf;
  for (NodeId n : g.class_nodes(c)) {
    std::size_t s = 1;
    for (ClassId k : g.node(n).kids) s = std::min(inf, s + brute_min(g, k, h - 1, memo));
    best = std::min(best, s);
  }
  memo[{c, h}] = best;
  return best;
}

std::size_t brute_min(const EGraph& g, ClassId c, int h) {
  std::map<std::pair<ClassId, int>, std::size_t> memo;
  return brute_min(g, c, h, memo);
}

TEST(EGraph, SmallestTreeMatchesBruteForce) {
  for (const auto& p : wmutate::testing::corpus()) {
    const std::uint32_t nfi = p.module.num_imported(ExternKind::Func);
    int checked = 0;
    for (std::uint32_t f = 0; f < p.module.functions.size() && checked < 6; ++f) {
      for (const auto& s : extract_segments(p.module, nfi + f)) {
        if (s.purity != Purity::Deterministic || s.end - s.start > 6) continue;
        ExprTree t;
        try {
          t = segment_to_expr(p.module, s);
        } catch (const UnsupportedShape&) {
          continue;
        }
        Rng rng(3);
        EGraphConfig cfg;
        cfg.passes = 2;
        auto [g, root] = egraph_build(t, builtin_rules(), rng, cfg);
        const ExprTree best = smallest_tree_from(g, root);
        const int h = static_cast<int>(g.num_classes() + 1);
        EXPECT_EQ(best.size(), brute_min(g, root, h)) << p.name;
        EXPECT_LE(best.size(), t.size());
        if (++checked == 6) break;
      }
    }
  }
}

TEST(EGraph, TraverseOnlyUsesClassMembers) {
  Rng rng(9);
  auto [g, root] = egraph_build(i64_const_tree(5), builtin_rules(), rng);
  for (int i = 0; i < 50; ++i) {
    const ExprTree t = traverse(g, root, 4, rng);
    EXPECT_EQ(t.type, ValType::I64);
    EXPECT_LE(t.height(), 4u + g.num_classes());
  }
}

TEST(EGraph, AnalysisTracksEffects) {
  EGraph g;
  const auto addr = g.add(leaf(Instruction::i32_const(0)), ValType::I32);
  const auto load = g.add(ENode{ExprOp::of(Instruction::mem(Opcode::I32Load, 2, 0)), {addr}}, ValType::I32);
  g.rebuild();
  EXPECT_TRUE(g.data(load).effects.reads_mem);
  EXPECT_TRUE(g.data(load).effects.may_trap);
  EXPECT_FALSE(g.data(addr).effects.may_trap);
}

TEST(EGraph, DotOutputMentionsEveryClass) {
  Rng rng(0);
  auto [g, root] = egraph_build(i64_const_tree(1), example_rules(), rng);
  const std::string dot = g.to_dot();
  EXPECT_NE(dot.find("digraph"), std::string::npos);
  EXPECT_NE(dot.find("i64.or"), std::string::npos);
}

}  // namespace
