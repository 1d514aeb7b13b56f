#pragma once

#include "mechsym/sym/expr.hpp"

namespace mechsym::sym {

/// The expression  integral_{lower}^{upper} integrand ds  backed by adaptive
/// quadrature. Derivatives are exact: the bounds contribute the integrand at
/// the bound, and every other symbol is differentiated under the integral
/// sign, which yields another quadrature node.
Expr definite_integral(const Expr& integrand, const Symbol& s, const Expr& lower, const Expr& upper);

}  // namespace mechsym::sym
