#pragma once

#include <string>

#include "wmutate/module.hpp"

namespace wmutate {

/// One-line text form of an instruction, e.g. "i32.load offset=4 align=2".
std::string print_instruction(const Instruction& in);
/// Debug listing of a module in a WAT-like layout. Not parseable.
std::string print_module(const WasmModule& m);

}  // namespace wmutate
