#pragma once

#include <map>

#include "mechsym/sym/expr.hpp"

namespace mechsym::sym {

/// Deterministic normal form: full polynomial expansion (positive integer
/// powers of sums are multiplied out), numeric folding, like-term
/// collection, and cos(u)^2 -> 1 - sin(u)^2. Idempotent.
Expr simplify(const Expr& e);

/// Replaces symbols by expressions. Substitution is simultaneous.
Expr substitute(const Expr& e, const std::map<Symbol, Expr>& repl);

}  // namespace mechsym::sym
