#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wmutate/errors.hpp"
#include "wmutate/module.hpp"
#include "wmutate/trace.hpp"

namespace wmutate {

struct Value {
  ValType type = ValType::I32;
  std::uint64_t bits = 0;
  bool operator==(const Value&) const = default;
};

enum class TrapKind {
  Unreachable,
  IntegerDivideByZero,
  IntegerOverflow,
  InvalidConversion,
  OutOfBoundsMemory,
  OutOfBoundsTable,
  UninitializedElement,
  IndirectCallTypeMismatch,
  CallStackExhausted,
};

std::string_view to_string(TrapKind k);

struct TrapInfo {
  TrapKind kind = TrapKind::Unreachable;
  std::uint32_t func = 0;
  std::uint32_t offset = 0;  // instruction index inside the function body
  bool operator==(const TrapInfo&) const = default;
};

struct ExecutionState {
  Bytes memory;                // memory 0 at the end of execution, empty if none
  std::vector<Value> globals;  // exported globals, in export order
  std::string output;          // bytes written through the print imports
  Trace trace;
  std::uint64_t steps = 0;
  bool fuel_exhausted = false;
  std::optional<TrapInfo> trap;

  bool completed() const { return !fuel_exhausted && !trap; }
};

/// Raised when no entry point exists.
class NoEntryPoint : public Error {
 public:
  using Error::Error;
};

/// Raised when an import cannot be satisfied by the host environment.
class LinkError : public Error {
 public:
  using Error::Error;
};

/// Host-side view handed to imported functions.
struct HostContext {
  std::string& output;
  Bytes& memory;
  std::uint64_t steps;
};

struct HostFunction {
  FuncType type;
  std::function<std::optional<std::uint64_t>(HostContext&, std::span<const std::uint64_t>)> fn;
};

class HostEnv {
 public:
  /// env.println(i32), env.print_i64(i64), env.print_f64(f64), env.putchar(i32)
  /// and env.timer() -> i64 returning the current step count.
  static HostEnv standard();

  void define(const std::string& module, const std::string& field, HostFunction f);
  const HostFunction* find(const std::string& module, const std::string& field) const;

 private:
  std::map<std::pair<std::string, std::string>, HostFunction> funcs_;
};

struct ExecOptions {
  std::uint64_t fuel = 50'000'000;
  TraceMode trace = TraceMode::Digest;
  std::uint32_t max_call_depth = 1024;
  std::uint32_t max_memory_pages = 256;
};

/// Instantiates `m` and runs its entry point: the start function if present,
/// otherwise the exported `_start` of type [] -> []. Traps and fuel
/// exhaustion are reported in the returned state.
ExecutionState execute(const WasmModule& m, const HostEnv& env, const ExecOptions& opts = {});

/// Memory bytes, exported globals (bit-exact) and output are identical.
bool states_equal(const ExecutionState& a, const ExecutionState& b);

/// Same termination: both completed, both ran out of fuel, or both trapped
/// with the same kind.
bool same_outcome(const ExecutionState& a, const ExecutionState& b);

}  // namespace wmutate
