#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mechsym/sym/check.hpp"
#include "mechsym/sym/evaluate.hpp"
#include "mechsym/sym/expr.hpp"
#include "mechsym/sym/variable_space.hpp"

namespace mechsym {

using sym::Expr;
using sym::ExprMatrix;
using sym::ExprVector;
using sym::Symbol;
using sym::VariableSpace;

/// Raised by LagrangianSystem::build when det(g) vanishes identically.
class DegenerateLagrangianError : public std::invalid_argument {
 public:
  DegenerateLagrangianError(const std::string& what, Expr det) : std::invalid_argument(what), det_(std::move(det)) {}
  const Expr& det() const { return det_; }

 private:
  Expr det_;
};

/// Largest N for which g^-1 is formed symbolically; above it the entries are
/// kernels that LU-factor g at each evaluation point.
inline constexpr int kSymbolicInverseMaxDof = 4;

/// A Lagrangian together with its Hessian g, inverse, force law f and the
/// mixed Hessian matrices used by the bracket. Immutable once built.
class LagrangianSystem {
 public:
  /// Throws std::invalid_argument when L depends on qdd or on undeclared
  /// symbols, DegenerateLagrangianError when det(g) == 0 identically.
  static LagrangianSystem build(VariableSpace space, Expr lagrangian, sym::Assignment parameter_values = {},
                                const sym::CheckOptions& opts = {});

  const VariableSpace& space() const { return space_; }
  int dof() const { return space_.dof(); }
  const Expr& lagrangian() const { return L_; }
  const ExprMatrix& g() const { return g_; }
  const ExprMatrix& g_inv() const { return g_inv_; }
  /// Determinant of g (symbolic for small N, a kernel otherwise).
  const Expr& det_g() const { return det_; }
  const ExprVector& force() const { return f_; }
  /// h_kl = d^2 L / dq^k dqd^l
  const ExprMatrix& h() const { return h_; }
  /// c^ij = ginv^ik ginv^jl (h_kl - h_lk)
  const ExprMatrix& c() const { return c_; }
  /// p_j = dL/dqd^j
  const ExprVector& momenta() const { return p_; }
  bool autonomous() const { return autonomous_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const sym::Assignment& parameter_values() const { return parameter_values_; }

  /// The on-shell derivative d_t + qd.d_q + f.d_qd.
  Expr Dt(const Expr& e) const;
  /// t, q, qd followed by every declared parameter.
  std::vector<Symbol> numeric_inputs() const;
  /// base with every parameter that has a value pinned to it.
  sym::CheckOptions pinned(const sym::CheckOptions& base) const;

 private:
  LagrangianSystem() : space_(1) {}
  VariableSpace space_;
  Expr L_;
  ExprMatrix g_, g_inv_, h_, c_;
  Expr det_;
  ExprVector f_, p_;
  bool autonomous_ = false;
  std::vector<std::string> warnings_;
  sym::Assignment parameter_values_;
};

/// Compiled evaluation of expressions at states (t, q, qd) with the
/// system's parameter values substituted.
class StateProgram {
 public:
  StateProgram(const LagrangianSystem& sys, const ExprVector& outputs);
  std::size_t size() const { return program_.output_count(); }
  bool run(double t, std::span<const double> q, std::span<const double> qd, std::span<double> out,
           std::string* why = nullptr) const;
  /// state = (q..., qd...)
  bool run(double t, std::span<const double> state, std::span<double> out, std::string* why = nullptr) const;

 private:
  int n_;
  sym::Program program_;
  std::vector<double> params_;
};

/// dL/dq^i - D_t(dL/dqd^i)
ExprVector el_residual(const LagrangianSystem& sys);
/// The identity residual_i == g_ij (f^j - qdd^j), checked on the jet.
sym::CheckResult check_el_identity(const LagrangianSystem& sys, const sym::CheckOptions& opts = {});
/// qd^i dL/dqd^i - L
Expr hamiltonian(const LagrangianSystem& sys);

struct GaugeShiftReport {
  bool ok = false;
  sym::CheckResult hessian;
  sym::CheckResult force;
};
/// Rebuilds with L + D_t A and compares g and f. A must depend on (t, q)
/// only; throws std::invalid_argument otherwise.
GaugeShiftReport gauge_shift_check(const LagrangianSystem& sys, const Expr& A, const sym::CheckOptions& opts = {});

/// Throws std::invalid_argument unless e depends at most on t, q, qd and
/// declared parameters.
void require_state_function(const LagrangianSystem& sys, const Expr& e, const std::string& what);

}  // namespace mechsym
