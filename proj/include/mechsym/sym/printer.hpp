#pragma once

#include <string>

#include "mechsym/sym/expr.hpp"

namespace mechsym::sym {

/// Infix rendering that the parser reads back, except for kernel nodes,
/// which print as `name@serial(args)` and are deliberately not parseable.
std::string to_string(const Expr& e);

}  // namespace mechsym::sym
