#pragma once

#include <string>
#include <vector>

#include "wmutate/module.hpp"

namespace wmutate {

struct Diagnostic {
  std::string location;  // e.g. "func 3 @12" or "export 0"
  std::string message;
};

struct ValidationReport {
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return diagnostics.empty(); }
  std::string to_string() const;
};

/// Full MVP validation: module-level index and limit checks plus abstract
/// stack type checking of every function body.
ValidationReport static_validate(const WasmModule& m);

}  // namespace wmutate
