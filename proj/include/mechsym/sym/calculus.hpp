#pragma once

#include <stdexcept>
#include <vector>

#include "mechsym/sym/expr.hpp"
#include "mechsym/sym/variable_space.hpp"

namespace mechsym::sym {

/// Raised when total_derivative receives an expression containing qdd.
class JetOrderError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exact partial derivative, simplified.
Expr diff(const Expr& e, const Symbol& v);
/// Partial derivative without the final simplification pass.
Expr diff_raw(const Expr& e, const Symbol& v);

/// D_t = d_t + qd^i d_q^i + qdd^i d_qd^i. Rejects inputs that contain qdd.
Expr total_derivative(const Expr& e, const VariableSpace& space);

/// Total derivative on the jet of any finite order: every jet symbol of
/// order k contributes its order-(k+1) successor times the partial.
Expr jet_total_derivative(const Expr& e, const VariableSpace& space);

/// d_t + qd^i d_q^i + f^i d_qd^i, i.e. D_t with qdd replaced by the force.
Expr solution_derivative(const Expr& e, const VariableSpace& space, const std::vector<Expr>& force);

/// Gradient with respect to each symbol, simplified.
std::vector<Expr> gradient(const Expr& e, const std::vector<Symbol>& vars);

}  // namespace mechsym::sym
