#pragma once

#include <memory>
#include <string>

#include "wmutate/errors.hpp"
#include "wmutate/module.hpp"

namespace wmutate {

class CanonicalizerFailure : public Error {
 public:
  using Error::Error;
};

/// Deterministic bytes-to-bytes transform standing in for a compiler when
/// measuring how many variants stay distinct.
class Canonicalizer {
 public:
  virtual ~Canonicalizer() = default;
  virtual std::string name() const = 0;
  virtual Bytes apply(const Bytes& wasm) const = 0;
};

class IdentityCanonicalizer : public Canonicalizer {
 public:
  std::string name() const override { return "identity"; }
  Bytes apply(const Bytes& wasm) const override { return wasm; }
};

/// Strips custom sections, drops writes to globals nothing reads, removes
/// nops and dead items, and replaces every deterministic segment by the
/// smallest equivalent tree.
class NormalizingCanonicalizer : public Canonicalizer {
 public:
  std::string name() const override { return "normalize"; }
  Bytes apply(const Bytes& wasm) const override;
};

/// Runs an external command. `{in}` and `{out}` in the template are replaced
/// by temporary file paths; the command must write the canonical form to
/// `{out}` and exit with status 0.
class CommandCanonicalizer : public Canonicalizer {
 public:
  explicit CommandCanonicalizer(std::string command_template) : template_(std::move(command_template)) {}
  std::string name() const override { return "cmd:" + template_; }
  Bytes apply(const Bytes& wasm) const override;

 private:
  std::string template_;
};

/// "identity", "normalize" or "cmd:<template>".
std::unique_ptr<Canonicalizer> make_canonicalizer(const std::string& spec);

/// The module-level part of NormalizingCanonicalizer.
WasmModule normalize_module(const WasmModule& m);

}  // namespace wmutate
