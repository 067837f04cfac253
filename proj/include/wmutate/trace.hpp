#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "wmutate/opcodes.hpp"

namespace wmutate {

struct InstrEvent {
  std::uint32_t func = 0;
  std::uint32_t offset = 0;  // instruction index inside the body
  Opcode op = Opcode::Nop;
  bool operator==(const InstrEvent&) const = default;
};

enum class MemAccess : std::uint8_t { Read, Write };

/// Linear-memory accesses carry their effective address. Global accesses
/// are reported in a separate space at kGlobalBase + 8 * index.
enum class MemSpace : std::uint8_t { Linear, Global };

inline constexpr std::uint64_t kGlobalBase = std::uint64_t(1) << 40;

struct MemEvent {
  MemAccess kind = MemAccess::Read;
  MemSpace space = MemSpace::Linear;
  std::uint64_t address = 0;
  std::uint32_t size = 0;
  std::uint64_t value = 0;
  bool operator==(const MemEvent&) const = default;
};

/// Digest keeps only per-stream event counts and rolling hashes, which is
/// enough for divergence checks; Full also keeps every event.
enum class TraceMode : std::uint8_t { None, Digest, Full };

enum class TraceKind : std::uint8_t { Instructions, Memory };

class Trace {
 public:
  explicit Trace(TraceMode mode = TraceMode::Digest) : mode_(mode) {}

  TraceMode mode() const { return mode_; }

  void record(const InstrEvent& e) {
    if (mode_ == TraceMode::None) return;
    instr_hash_ = mix(instr_hash_, (std::uint64_t(e.func) << 40) ^ (std::uint64_t(e.offset) << 8) ^
                                       static_cast<std::uint8_t>(e.op));
    ++instr_count_;
    if (mode_ == TraceMode::Full) instr_.push_back(e);
  }

  void record(const MemEvent& e) {
    if (mode_ == TraceMode::None) return;
    std::uint64_t h = mix(mem_hash_, e.address ^ (std::uint64_t(e.kind) << 62) ^ (std::uint64_t(e.space) << 61));
    mem_hash_ = mix(h, e.value ^ (std::uint64_t(e.size) << 56));
    ++mem_count_;
    if (mode_ == TraceMode::Full) mem_.push_back(e);
  }

  const std::vector<InstrEvent>& instr_events() const { return instr_; }
  const std::vector<MemEvent>& mem_events() const { return mem_; }
  std::uint64_t instr_count() const { return instr_count_; }
  std::uint64_t mem_count() const { return mem_count_; }
  std::uint64_t instr_digest() const { return instr_hash_; }
  std::uint64_t mem_digest() const { return mem_hash_; }

 private:
  static std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    std::uint64_t z = h ^ (v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  TraceMode mode_;
  std::vector<InstrEvent> instr_;
  std::vector<MemEvent> mem_;
  std::uint64_t instr_count_ = 0;
  std::uint64_t mem_count_ = 0;
  std::uint64_t instr_hash_ = 0;
  std::uint64_t mem_hash_ = 0;
};

/// Sequence inequality of the selected event stream. Full traces are
/// compared event by event; otherwise counts and digests are compared.
bool traces_differ(const Trace& a, const Trace& b, TraceKind kind);

/// Line-oriented dump: `[I] <func>:<offset> <opcode>` and
/// `[Read|Writ] 0x<addr> size=<n> value=0x<v>`. Requires a Full trace.
void dump_instr_trace(const Trace& t, std::ostream& os);
void dump_mem_trace(const Trace& t, std::ostream& os);

}  // namespace wmutate
