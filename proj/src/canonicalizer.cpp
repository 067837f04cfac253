#include "wmutate/canonicalizer.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include "wmutate/codec.hpp"
#include "wmutate/dataflow.hpp"
#include "wmutate/egraph.hpp"
#include "wmutate/meta_rules.hpp"

namespace wmutate {
namespace {

std::set<std::uint32_t> unread_globals(const WasmModule& m) {
  std::set<std::uint32_t> out;
  const std::uint32_t ngi = m.num_imported(ExternKind::Global);
  for (std::uint32_t i = 0; i < m.globals.size(); ++i) out.insert(ngi + i);
  for (const auto& f : m.functions) {
    for (const auto& in : f.body.code) {
      if (in.op == Opcode::GlobalGet) out.erase(in.imm);
    }
  }
  for (const auto& e : m.exports) {
    if (e.kind == ExternKind::Global) out.erase(e.index);
  }
  for (const auto& g : m.globals) {
    if (g.init.instr.op == Opcode::GlobalGet) out.erase(g.init.instr.imm);
  }
  return out;
}

void drop_unread_global_writes(WasmModule& m) {
  const auto unread = unread_globals(m);
  for (auto& f : m.functions) {
    auto& code = f.body.code;
    std::vector<Instruction> next;
    next.reserve(code.size());
    for (const auto& in : code) {
      if (in.op == Opcode::GlobalSet && unread.count(in.imm)) {
        // A constant that is only written away vanishes together with the write.
        const bool is_const = !next.empty() && (next.back().op == Opcode::I32Const || next.back().op == Opcode::I64Const ||
                                                next.back().op == Opcode::F32Const || next.back().op == Opcode::F64Const);
        if (is_const) {
          next.pop_back();
        } else {
          next.push_back(Instruction::simple(Opcode::Drop));
        }
        continue;
      }
      if (in.op == Opcode::Nop) continue;
      next.push_back(in);
    }
    code = std::move(next);
    f.body.rebuild_brackets();
  }
}

void shrink_segments(WasmModule& m) {
  const std::uint32_t nfi = m.num_imported(ExternKind::Func);
  EGraphConfig cfg;
  cfg.passes = 1;
  for (std::uint32_t f = 0; f < m.functions.size(); ++f) {
    auto segments = extract_segments(m, nfi + f);
    std::vector<Segment> chosen;
    for (const auto& s : segments) {
      if (s.purity != Purity::Deterministic) continue;
      const bool nested = std::any_of(chosen.begin(), chosen.end(),
                                      [&](const Segment& c) { return s.start < c.end && c.start < s.end; });
      if (!nested) chosen.push_back(s);
    }
    // Splice back to front so earlier ranges keep their positions.
    std::sort(chosen.begin(), chosen.end(), [](const Segment& a, const Segment& b) { return a.start > b.start; });
    for (const auto& s : chosen) {
      ExprTree tree;
      try {
        tree = segment_to_expr(m, s);
      } catch (const UnsupportedShape&) {
        continue;
      }
      Rng rng(0);
      try {
        auto [g, root] = egraph_build(tree, builtin_rules(), rng, cfg);
        ExprTree best = smallest_tree_from(g, root);
        if (best.size() < tree.size()) splice_expr(m, nfi + f, s.start, s.end, best);
      } catch (const BudgetExceeded&) {
      }
    }
  }
}

}  // namespace

WasmModule normalize_module(const WasmModule& m) {
  WasmModule out = m;
  out.customs.clear();
  drop_unread_global_writes(out);
  shrink_segments(out);
  while (!dead_items(out).empty()) {
    Rng pick(0);
    WasmModule next = apply_remove_dead_item(out, pick);
    if (next == out) break;
    out = std::move(next);
  }
  normalize_layout(out);
  return out;
}

Bytes NormalizingCanonicalizer::apply(const Bytes& wasm) const {
  try {
    return encode_module(normalize_module(parse_module(wasm)));
  } catch (const Error& e) {
    throw CanonicalizerFailure(std::string("normalize: ") + e.what());
  }
}

Bytes CommandCanonicalizer::apply(const Bytes& wasm) const {
  static std::atomic<std::uint64_t> counter{0};
  const auto dir = std::filesystem::temp_directory_path();
  const std::string stem = "wmutate-canon-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
  const auto in = dir / (stem + ".in.wasm");
  const auto out = dir / (stem + ".out");
  {
    std::ofstream f(in, std::ios::binary);
    f.write(reinterpret_cast<const char*>(wasm.data()), static_cast<std::streamsize>(wasm.size()));
  }
  std::string cmd = template_;
  auto substitute = [&](const std::string& key, const std::string& value) {
    for (std::size_t pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key, pos + value.size())) {
      cmd.replace(pos, key.size(), value);
    }
  };
  substitute("{in}", in.string());
  substitute("{out}", out.string());
  const int status = std::system(cmd.c_str());
  Bytes result;
  bool ok = status == 0 && std::filesystem::exists(out);
  if (ok) {
    std::ifstream f(out, std::ios::binary);
    result.assign(std::istreambuf_iterator<char>(f), {});
  }
  std::error_code ec;
  std::filesystem::remove(in, ec);
  std::filesystem::remove(out, ec);
  if (!ok) throw CanonicalizerFailure("command failed with status " + std::to_string(status) + ": " + cmd);
  return result;
}

std::unique_ptr<Canonicalizer> make_canonicalizer(const std::string& spec) {
  if (spec == "identity") return std::make_unique<IdentityCanonicalizer>();
  if (spec == "normalize") return std::make_unique<NormalizingCanonicalizer>();
  if (spec.rfind("cmd:", 0) == 0) return std::make_unique<CommandCanonicalizer>(spec.substr(4));
  throw std::invalid_argument("unknown canonicalizer: " + spec);
}

}  // namespace wmutate
