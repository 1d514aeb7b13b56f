#pragma once

#include <string>
#include <vector>

#include "mechsym/noether.hpp"

namespace mechsym {

/// ginv^ij (F1_qi F2_qdj - F2_qi F1_qdj) + c^ij F1_qdi F2_qdj
Expr pbracket(const LagrangianSystem& sys, const Expr& F1, const Expr& F2);

/// [[0, ginv], [-ginv, c]] over (q, qd).
ExprMatrix symplectic_matrix(const LagrangianSystem& sys);

/// d_t C + {C, H} == 0, with d_t at fixed momenta. That is the plain partial
/// derivative unless p depends on t explicitly.
sym::CheckResult conservation_via_bracket(const LagrangianSystem& sys, const Expr& C,
                                          const sym::CheckOptions& opts = {});

struct ActionCheck {
  bool ok = false;
  Expr action;   // X_(C) applied to F
  Expr bracket;  // {F, C}
  sym::CheckResult check;
};
/// The generator of C acting on F equals {F, C}.
ActionCheck verify_symmetry_action(const LagrangianSystem& sys, const Expr& C, const Expr& F,
                                   const sym::CheckOptions& opts = {});

struct PairActionCheck {
  bool ok = false;
  Expr x1_c2;    // X_(C1) applied to C2
  Expr x2_c1;    // X_(C2) applied to C1
  Expr bracket;  // {C2, C1}
  sym::CheckResult check;
};
/// X_(C1) C2 == -X_(C2) C1 == {C2, C1}
PairActionCheck verify_pair_action(const LagrangianSystem& sys, const Expr& C1, const Expr& C2,
                                   const sym::CheckOptions& opts = {});

struct CommutatorCheck {
  bool ok = false;
  ExprVector lhs;  // X_(C2) P1 - X_(C1) P2
  ExprVector rhs;  // ginv d_qd {C1, C2}
  sym::CheckResult check;
};
/// The commutator of the generators of C1 and C2 is the generator of {C1, C2}.
CommutatorCheck verify_commutator_homomorphism(const LagrangianSystem& sys, const Expr& C1, const Expr& C2,
                                               const sym::CheckOptions& opts = {});

enum class Closure { Zero, Constant, Linear, Nonlinear };
const char* closure_name(Closure c);

struct BracketTable {
  std::vector<std::string> names;
  ExprMatrix entries;
  std::vector<std::vector<Closure>> closure;
  /// Fitted coefficients of 1, C_1..C_m for Constant and Linear entries.
  std::vector<std::vector<std::vector<double>>> coefficients;
  std::vector<std::vector<double>> residual;
};
/// All pairwise brackets with a least-squares fit of each onto
/// span{1, C_1..C_m} at 200 sample points (relative residual < 1e-7).
BracketTable bracket_table(const LagrangianSystem& sys, const std::vector<ConservedQuantity>& family,
                           const sym::CheckOptions& opts = {});

enum class Dependence { Dependent, Independent, Inconclusive };
const char* dependence_name(Dependence d);

struct IndependenceReport {
  Dependence verdict = Dependence::Inconclusive;
  Expr lambda;              // V1.V2 / V1.V1 with V = (P, D_t P)
  int samples = 0;
  int parallel_samples = 0;  // points where V2 is parallel to V1
  int functional_samples = 0;  // points where grad lambda lies in span(grad C1, grad C2)
  sym::Assignment witness;
  std::string detail;
};
/// Dependent over the solution space iff the generator vectors are
/// parallel with a ratio that is a function of (C1, C2) alone.
IndependenceReport independence_over_solution_space(const LagrangianSystem& sys, const Expr& C1, const Expr& C2,
                                                    const sym::CheckOptions& opts = {});

}  // namespace mechsym
