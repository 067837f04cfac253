#include "wmutate/egraph.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "wmutate/printer.hpp"

namespace wmutate {
namespace {

constexpr std::size_t kInfinite = std::numeric_limits<std::size_t>::max() / 4;

void hash_mix(std::size_t& h, std::uint64_t v) { h ^= std::hash<std::uint64_t>{}(v) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2); }

bool ops_match(const ExprOp& pattern, const ExprOp& node) {
  if (pattern.kind != node.kind) return false;
  switch (pattern.kind) {
    case ExprOp::Kind::Instr: return pattern.instr == node.instr;
    case ExprOp::Kind::Container: return true;
    default: return pattern.fresh_type == node.fresh_type;  // any placeholder id
  }
}

Opcode const_opcode(ValType t) {
  switch (t) {
    case ValType::I32: return Opcode::I32Const;
    case ValType::I64: return Opcode::I64Const;
    case ValType::F32: return Opcode::F32Const;
    case ValType::F64: return Opcode::F64Const;
  }
  return Opcode::I32Const;
}

class GraphFacts : public Facts {
 public:
  GraphFacts(const EGraph& g, const Bindings& b) : g_(g), b_(b) {}
  Effects effects(std::uint32_t slot) const override { return g_.data(b_.node[slot]).effects; }
  bool canonical_nan(std::uint32_t slot) const override { return g_.data(b_.node[slot]).canonical_nan; }

 private:
  const EGraph& g_;
  const Bindings& b_;
};

// Effects that a parent inherits from a child. Synthetic local bindings stay
// local to the node that pairs the tee with its get.
Effects inherited(Effects e) {
  e.binds = e.ordered = false;
  return e;
}

ClassId instantiate(EGraph& g, const Pattern& p, const Bindings& b, std::uint32_t fresh_base) {
  switch (p.kind) {
    case Pattern::Kind::Var:
      return b.node[p.slot];
    case Pattern::Kind::Const:
    case Pattern::Kind::ConstVar: {
      ENode n{ExprOp::of(const_of(*p.type, p.kind == Pattern::Kind::Const ? p.bits : b.value[p.slot])), {}};
      return g.add(std::move(n), p.type);
    }
    case Pattern::Kind::Op: {
      ENode n;
      n.op = p.op;
      if (n.op.kind != ExprOp::Kind::Instr && n.op.kind != ExprOp::Kind::Container) n.op.fresh += fresh_base;
      for (const auto& k : p.kids) n.kids.push_back(instantiate(g, k, b, fresh_base));
      return g.add(std::move(n), p.type);
    }
  }
  return 0;
}

bool has_placeholder(const Pattern& p) {
  if (p.kind == Pattern::Kind::Op && p.op.kind != ExprOp::Kind::Instr && p.op.kind != ExprOp::Kind::Container) {
    return true;
  }
  return std::any_of(p.kids.begin(), p.kids.end(), has_placeholder);
}

}  // namespace

std::size_t ENodeHash::operator()(const ENode& n) const {
  std::size_t h = static_cast<std::size_t>(n.op.kind);
  hash_mix(h, static_cast<std::uint64_t>(n.op.instr.op));
  hash_mix(h, n.op.instr.imm);
  hash_mix(h, n.op.instr.offset);
  hash_mix(h, n.op.instr.value);
  for (auto t : n.op.instr.targets) hash_mix(h, t);
  hash_mix(h, n.op.fresh);
  hash_mix(h, static_cast<std::uint64_t>(n.op.fresh_type));
  for (auto k : n.kids) hash_mix(h, k);
  return h;
}

ClassId EGraph::find(ClassId c) const {
  while (parent_[c] != c) c = parent_[c];
  return c;
}

ENode EGraph::canonical(ENode n) const {
  for (auto& k : n.kids) k = find(k);
  return n;
}

ClassId EGraph::add(ENode n, std::optional<ValType> type) {
  n = canonical(std::move(n));
  if (auto it = hashcons_.find(n); it != hashcons_.end()) return find(it->second);

  const NodeId id = static_cast<NodeId>(nodes_.size());
  const ClassId cls = static_cast<ClassId>(parent_.size());
  ClassData d;
  d.type = type;
  d.effects = op_effects(n.op);
  d.canonical_nan = op_canonical_nan(n.op);
  for (auto k : n.kids) d.effects |= inherited(classes_[k].effects);
  d.nodes.push_back(id);

  hashcons_.emplace(n, cls);
  nodes_.push_back(std::move(n));
  node_types_.push_back(type);
  node_class_.push_back(cls);
  parent_.push_back(cls);
  classes_.push_back(std::move(d));
  best_valid_ = false;
  return cls;
}

ClassId EGraph::add_tree(const ExprTree& t) {
  if (t.op.kind != ExprOp::Kind::Instr && t.op.kind != ExprOp::Kind::Container) {
    next_fresh_ = std::max(next_fresh_, t.op.fresh + 1);
  }
  ENode n;
  n.op = t.op;
  for (const auto& c : t.children) n.kids.push_back(add_tree(c));
  return add(std::move(n), t.type);
}

bool EGraph::merge(ClassId a, ClassId b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (classes_[a].type != classes_[b].type) throw std::logic_error("merging e-classes of different types");
  if (b < a) std::swap(a, b);
  parent_[b] = a;
  ClassData& into = classes_[a];
  ClassData& from = classes_[b];
  into.nodes.insert(into.nodes.end(), from.nodes.begin(), from.nodes.end());
  into.effects |= from.effects;
  into.canonical_nan = into.canonical_nan || from.canonical_nan;
  from.nodes.clear();
  dirty_ = true;
  best_valid_ = false;
  return true;
}

void EGraph::rebuild() {
  if (!dirty_) return;
  bool changed = true;
  while (changed) {
    changed = false;
    hashcons_.clear();
    for (NodeId n = 0; n < nodes_.size(); ++n) {
      nodes_[n] = canonical(std::move(nodes_[n]));
      const ClassId cls = find(node_class_[n]);
      auto [it, inserted] = hashcons_.emplace(nodes_[n], cls);
      if (!inserted && find(it->second) != cls) {
        merge(it->second, cls);
        changed = true;
      }
    }
  }
  for (ClassId c = 0; c < parent_.size(); ++c) parent_[c] = find(c);
  for (auto& [n, cls] : hashcons_) cls = find(cls);

  for (auto& d : classes_) d.nodes.clear();
  std::unordered_map<ENode, NodeId, ENodeHash> first;
  for (NodeId n = 0; n < nodes_.size(); ++n) {
    if (first.emplace(nodes_[n], n).second) classes_[find(node_class_[n])].nodes.push_back(n);
  }
  reanalyze();
  dirty_ = false;
}

void EGraph::reanalyze() {
  const auto roots = classes();
  for (auto c : roots) {
    ClassData& d = classes_[c];
    d.effects = {};
    d.canonical_nan = false;
    for (auto n : d.nodes) {
      d.effects |= op_effects(nodes_[n].op);
      d.canonical_nan = d.canonical_nan || op_canonical_nan(nodes_[n].op);
    }
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto c : roots) {
      ClassData& d = classes_[c];
      Effects e = d.effects;
      for (auto n : d.nodes) {
        for (auto k : nodes_[n].kids) e |= inherited(classes_[k].effects);
      }
      if (!(e == d.effects)) {
        d.effects = e;
        changed = true;
      }
    }
  }
}

std::vector<ClassId> EGraph::classes() const {
  std::vector<ClassId> out;
  for (ClassId c = 0; c < parent_.size(); ++c) {
    if (parent_[c] == c) out.push_back(c);
  }
  return out;
}

std::size_t EGraph::num_classes() const { return classes().size(); }

void EGraph::compute_best() const {
  if (best_valid_) return;
  best_cost_.assign(parent_.size(), kInfinite);
  best_node_.assign(parent_.size(), 0);
  auto node_cost = [&](NodeId n) {
    std::size_t c = 1;
    for (auto k : nodes_[n].kids) c = std::min(kInfinite, c + best_cost_[find(k)]);
    return c;
  };
  const auto roots = classes();
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto c : roots) {
      for (auto n : classes_[c].nodes) {
        const std::size_t cost = node_cost(n);
        if (cost < best_cost_[c]) {
          best_cost_[c] = cost;
          changed = true;
        }
      }
    }
  }
  for (auto c : roots) {
    for (auto n : classes_[c].nodes) {
      if (node_cost(n) == best_cost_[c]) {
        best_node_[c] = n;
        break;
      }
    }
  }
  best_valid_ = true;
}

NodeId EGraph::best_node(ClassId c) const {
  compute_best();
  return best_node_[find(c)];
}

std::size_t EGraph::best_cost(ClassId c) const {
  compute_best();
  return best_cost_[find(c)];
}

bool EGraph::check_congruence() const {
  std::unordered_map<ENode, ClassId, ENodeHash> seen;
  for (NodeId n = 0; n < nodes_.size(); ++n) {
    const ENode canon = canonical(nodes_[n]);
    if (!(canon == nodes_[n])) return false;
    const ClassId cls = find(node_class_[n]);
    auto [it, inserted] = seen.emplace(canon, cls);
    if (!inserted && it->second != cls) return false;
  }
  for (auto c : classes()) {
    if (classes_[c].nodes.empty()) return false;
  }
  return true;
}

std::string EGraph::to_dot() const {
  std::ostringstream os;
  os << "digraph egraph {\n  compound=true;\n";
  for (auto c : classes()) {
    os << "  subgraph cluster_" << c << " {\n    style=dotted; label=\"e" << c << "\";\n";
    for (auto n : classes_[c].nodes) {
      std::string label;
      switch (nodes_[n].op.kind) {
        case ExprOp::Kind::Instr: label = print_instruction(nodes_[n].op.instr); break;
        case ExprOp::Kind::Container: label = "container"; break;
        case ExprOp::Kind::FreshTee: label = "local.tee $t" + std::to_string(nodes_[n].op.fresh); break;
        case ExprOp::Kind::FreshGet: label = "local.get $t" + std::to_string(nodes_[n].op.fresh); break;
        case ExprOp::Kind::FreshGlobalSet: label = "global.set $g" + std::to_string(nodes_[n].op.fresh); break;
      }
      os << "    n" << n << " [label=\"" << label << "\"];\n";
    }
    os << "  }\n";
  }
  for (auto c : classes()) {
    for (auto n : classes_[c].nodes) {
      for (auto k : nodes_[n].kids) {
        const ClassId kc = find(k);
        os << "  n" << n << " -> n" << classes_[kc].nodes.front() << " [lhead=cluster_" << kc << "];\n";
      }
    }
  }
  os << "}\n";
  return os.str();
}

std::vector<Bindings> ematch(const EGraph& g, const Pattern& p, ClassId c, const Bindings& seed) {
  std::vector<Bindings> out;
  c = g.find(c);
  const ClassData& d = g.data(c);
  switch (p.kind) {
    case Pattern::Kind::Var: {
      if (d.type != p.type) return out;
      if (seed.node[p.slot] != Bindings::kUnbound) {
        if (g.find(seed.node[p.slot]) == c) out.push_back(seed);
        return out;
      }
      Bindings b = seed;
      b.node[p.slot] = c;
      out.push_back(b);
      return out;
    }
    case Pattern::Kind::Const:
    case Pattern::Kind::ConstVar: {
      if (d.type != p.type) return out;
      const Opcode want = const_opcode(*p.type);
      for (auto n : d.nodes) {
        const ENode& en = g.node(n);
        if (en.op.kind != ExprOp::Kind::Instr || en.op.instr.op != want) continue;
        const std::uint64_t v = en.op.instr.value;
        if (p.kind == Pattern::Kind::Const) {
          if (v == p.bits) {
            out.push_back(seed);
            return out;
          }
        } else if (seed.has_value[p.slot]) {
          if (seed.value[p.slot] == v) {
            out.push_back(seed);
            return out;
          }
        } else {
          Bindings b = seed;
          b.value[p.slot] = v;
          b.has_value[p.slot] = true;
          out.push_back(b);
        }
      }
      return out;
    }
    case Pattern::Kind::Op: {
      for (auto n : d.nodes) {
        const ENode& en = g.node(n);
        if (en.kids.size() != p.kids.size() || !ops_match(p.op, en.op)) continue;
        std::vector<Bindings> partial{seed};
        for (std::size_t i = 0; i < p.kids.size() && !partial.empty(); ++i) {
          std::vector<Bindings> next;
          for (const auto& b : partial) {
            auto sub = ematch(g, p.kids[i], en.kids[i], b);
            next.insert(next.end(), sub.begin(), sub.end());
          }
          partial = std::move(next);
        }
        out.insert(out.end(), partial.begin(), partial.end());
      }
      return out;
    }
  }
  return out;
}

std::pair<EGraph, ClassId> egraph_build(const ExprTree& t, const std::vector<RewriteRule>& rules, Rng& rng,
                                        const EGraphConfig& cfg) {
  EGraph g;
  const ClassId root = g.add_tree(t);
  if (g.num_nodes() > cfg.node_cap) throw BudgetExceeded("e-graph node cap exceeded");
  for (int pass = 0; pass < cfg.passes; ++pass) {
    std::vector<Match> matches;
    for (auto c : g.classes()) {
      for (std::size_t r = 0; r < rules.size(); ++r) {
        for (auto& b : ematch(g, rules[r].lhs, c)) matches.push_back(Match{r, c, std::move(b)});
      }
    }
    bool progress = false;
    const std::size_t before = g.num_nodes();
    for (auto& m : matches) {
      const RewriteRule& rule = rules[m.rule];
      if (!rule.applicable(m.bindings, GraphFacts(g, m.bindings))) continue;
      if (rule.compute) rule.compute(m.bindings, rng);
      const std::uint32_t base = has_placeholder(rule.rhs) ? g.reserve_fresh(1) : 0;
      const ClassId made = instantiate(g, rule.rhs, m.bindings, base);
      progress = g.merge(m.cls, made) || progress;
      if (g.num_nodes() > cfg.node_cap) throw BudgetExceeded("e-graph node cap exceeded");
    }
    g.rebuild();
    if (!progress && g.num_nodes() == before) break;
  }
  const ClassId r = g.find(root);
  return {std::move(g), r};
}

std::size_t SequenceChooser::pick(std::size_t n) {
  if (pos_ >= seq_.size()) throw std::out_of_range("choice sequence exhausted");
  const std::size_t v = seq_[pos_++];
  if (v >= n) throw std::out_of_range("forced choice out of range");
  return v;
}

namespace {

ExprTree node_tree(const EGraph& g, NodeId n, std::vector<ExprTree> kids) {
  ExprTree t;
  t.op = g.node(n).op;
  t.type = g.node_type(n);
  t.children = std::move(kids);
  return t;
}

}  // namespace

ExprTree smallest_tree_from(const EGraph& g, ClassId c) {
  const NodeId n = g.best_node(c);
  std::vector<ExprTree> kids;
  for (auto k : g.node(n).kids) kids.push_back(smallest_tree_from(g, k));
  return node_tree(g, n, std::move(kids));
}

ExprTree traverse(const EGraph& g, ClassId c, int depth, Chooser& chooser) {
  if (depth <= 0) return smallest_tree_from(g, c);
  const auto& nodes = g.class_nodes(c);
  const NodeId n = nodes[chooser.pick(nodes.size())];
  std::vector<ExprTree> kids;
  for (auto k : g.node(n).kids) kids.push_back(traverse(g, k, depth - 1, chooser));
  return node_tree(g, n, std::move(kids));
}

ExprTree traverse(const EGraph& g, ClassId c, int depth, Rng& rng) {
  RngChooser chooser(rng);
  return traverse(g, c, depth, chooser);
}

}  // namespace wmutate
