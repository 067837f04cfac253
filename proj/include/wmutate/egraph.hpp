#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "wmutate/dataflow.hpp"
#include "wmutate/rng.hpp"
#include "wmutate/rules.hpp"

namespace wmutate {

using ClassId = std::uint32_t;
using NodeId = std::uint32_t;

struct ENode {
  ExprOp op;
  std::vector<ClassId> kids;
  bool operator==(const ENode&) const = default;
};

struct ENodeHash {
  std::size_t operator()(const ENode& n) const;
};

/// Per-class analysis: type tag, effect summary over every member and its
/// children, and whether some member guarantees canonical NaNs.
struct ClassData {
  std::optional<ValType> type;
  Effects effects;
  bool canonical_nan = false;
  std::vector<NodeId> nodes;  // sorted, deduplicated after rebuild
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class EGraph {
 public:
  /// Inserts a node (children are canonicalized first). Returns the class
  /// of an existing congruent node when there is one.
  ClassId add(ENode n, std::optional<ValType> type);
  ClassId add_tree(const ExprTree& t);

  ClassId find(ClassId c) const;
  /// Unions two classes; the lower id becomes the representative.
  bool merge(ClassId a, ClassId b);
  /// Restores congruence closure and recomputes the analysis.
  void rebuild();

  const ENode& node(NodeId n) const { return nodes_[n]; }
  std::optional<ValType> node_type(NodeId n) const { return node_types_[n]; }
  const ClassData& data(ClassId c) const { return classes_[find(c)]; }
  const std::vector<NodeId>& class_nodes(ClassId c) const { return data(c).nodes; }
  /// Canonical class ids in ascending order.
  std::vector<ClassId> classes() const;

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_classes() const;

  /// Reserves a block of placeholder ids for synthetic locals/globals.
  std::uint32_t reserve_fresh(std::uint32_t count) {
    const std::uint32_t base = next_fresh_;
    next_fresh_ += count;
    return base;
  }

  /// Cheapest member per class by node count, lowest node id on ties.
  NodeId best_node(ClassId c) const;
  std::size_t best_cost(ClassId c) const;

  /// Every node's children canonical and no two congruent nodes in
  /// different classes.
  bool check_congruence() const;

  std::string to_dot() const;

 private:
  ENode canonical(ENode n) const;
  void compute_best() const;
  void reanalyze();

  std::vector<ENode> nodes_;
  std::vector<std::optional<ValType>> node_types_;
  std::vector<ClassId> node_class_;  // class at creation
  mutable std::vector<ClassId> parent_;
  std::vector<ClassData> classes_;  // indexed by class id; valid at roots
  std::unordered_map<ENode, ClassId, ENodeHash> hashcons_;
  bool dirty_ = false;
  std::uint32_t next_fresh_ = 0;

  mutable bool best_valid_ = false;
  mutable std::vector<std::size_t> best_cost_;
  mutable std::vector<NodeId> best_node_;
};

struct EGraphConfig {
  int passes = 3;
  std::size_t node_cap = 10000;
};

struct Match {
  std::size_t rule = 0;
  ClassId cls = 0;
  Bindings bindings;
};

/// All bindings under which `p` matches some member of class `c`.
std::vector<Bindings> ematch(const EGraph& g, const Pattern& p, ClassId c, const Bindings& seed = {});

/// Builds the e-graph of `t` and applies `rules` for a bounded number of
/// passes. Each pass matches against a snapshot, then instantiates every
/// admitted match and rebuilds.
std::pair<EGraph, ClassId> egraph_build(const ExprTree& t, const std::vector<RewriteRule>& rules, Rng& rng,
                                        const EGraphConfig& cfg = {});

/// Source of Algorithm 1's random choices.
class Chooser {
 public:
  virtual ~Chooser() = default;
  /// Index in [0, n) of the e-node to take; called for every visited class.
  virtual std::size_t pick(std::size_t n) = 0;
};

class RngChooser : public Chooser {
 public:
  explicit RngChooser(Rng& rng) : rng_(rng) {}
  std::size_t pick(std::size_t n) override { return static_cast<std::size_t>(rng_.below(n)); }

 private:
  Rng& rng_;
};

/// Replays a fixed list of choices.
class SequenceChooser : public Chooser {
 public:
  explicit SequenceChooser(std::vector<std::size_t> seq) : seq_(std::move(seq)) {}
  std::size_t pick(std::size_t n) override;
  std::size_t consumed() const { return pos_; }

 private:
  std::vector<std::size_t> seq_;
  std::size_t pos_ = 0;
};

ExprTree smallest_tree_from(const EGraph& g, ClassId c);
ExprTree traverse(const EGraph& g, ClassId c, int depth, Chooser& chooser);
ExprTree traverse(const EGraph& g, ClassId c, int depth, Rng& rng);

}  // namespace wmutate
