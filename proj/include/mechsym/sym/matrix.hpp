#pragma once

#include <cstddef>

#include "mechsym/sym/expr.hpp"

namespace mechsym::sym {

/// Cofactor expansion along the first row, simplified.
Expr determinant(const ExprMatrix& m);

/// m without row skip_r and column skip_c.
ExprMatrix minor_of(const ExprMatrix& m, std::size_t skip_r, std::size_t skip_c);

/// adj(m) / det(m), entrywise simplified. Meant for small matrices.
ExprMatrix adjugate_inverse(const ExprMatrix& m);

}  // namespace mechsym::sym
