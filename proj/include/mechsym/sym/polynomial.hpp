#pragma once

#include <optional>
#include <random>
#include <vector>

#include "mechsym/sym/expr.hpp"

namespace mechsym::sym {

/// Coefficients c_0..c_n with e == sum c_k x^k and every c_k free of x,
/// or nullopt when e is not polynomial in x.
std::optional<std::vector<Expr>> polynomial_coefficients(const Expr& e, const Symbol& x);

/// sum c_k x^(k+1)/(k+1): the antiderivative vanishing at x = 0.
Expr integrate_polynomial(const std::vector<Expr>& coeffs, const Symbol& x);

/// Random polynomial in vars with at most `terms` monomials of total degree
/// <= degree and nonzero integer coefficients in [-coeff_range, coeff_range].
Expr random_polynomial(const std::vector<Symbol>& vars, int degree, int terms, std::mt19937_64& rng,
                       int coeff_range = 3);

}  // namespace mechsym::sym
