#include "wmutate/trace.hpp"

#include <cstdio>
#include <ostream>

namespace wmutate {

bool traces_differ(const Trace& a, const Trace& b, TraceKind kind) {
  const bool full = a.mode() == TraceMode::Full && b.mode() == TraceMode::Full;
  if (kind == TraceKind::Instructions) {
    if (full) return a.instr_events() != b.instr_events();
    return a.instr_count() != b.instr_count() || a.instr_digest() != b.instr_digest();
  }
  if (full) return a.mem_events() != b.mem_events();
  return a.mem_count() != b.mem_count() || a.mem_digest() != b.mem_digest();
}

void dump_instr_trace(const Trace& t, std::ostream& os) {
  for (const auto& e : t.instr_events()) os << "[I] " << e.func << ':' << e.offset << ' ' << to_string(e.op) << '\n';
}

void dump_mem_trace(const Trace& t, std::ostream& os) {
  char buf[96];
  for (const auto& e : t.mem_events()) {
    std::snprintf(buf, sizeof buf, "[%s] 0x%llx size=%u value=0x%llx\n", e.kind == MemAccess::Read ? "Read" : "Writ",
                  static_cast<unsigned long long>(e.address), e.size, static_cast<unsigned long long>(e.value));
    os << buf;
  }
}

}  // namespace wmutate
