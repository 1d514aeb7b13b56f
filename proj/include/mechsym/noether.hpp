#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mechsym/lagrangian.hpp"

namespace mechsym {

enum class IntegralKind { ConstantOfMotion, IntegralOfMotion };
enum class ConservationStatus { SymbolicVerified, NumericLocal, NumericGlobal, Failed };

const char* kind_name(IntegralKind k);
const char* status_name(ConservationStatus s);

struct ConservedQuantity {
  std::string name;
  Expr C;
  ExprVector multipliers;  // dC/dqd^i
  IntegralKind kind = IntegralKind::IntegralOfMotion;
  ConservationStatus status = ConservationStatus::Failed;
  Expr solution_rate;  // D_t C on shell; zero when conserved
  sym::CheckResult check;
};

/// Components P^i of the vertical field P^i d_q^i, plus an optional gauge
/// coefficient tau of the on-shell time derivative.
struct SymmetryGenerator {
  std::string name;
  ExprVector P;
  Expr tau = 0;
};

/// D_t P^i on shell.
ExprVector generator_rates(const LagrangianSystem& sys, const SymmetryGenerator& gen);
/// P^i dF/dq^i + (D_t P^i) dF/dqd^i: the on-shell action of the generator.
Expr generator_action(const LagrangianSystem& sys, const SymmetryGenerator& gen, const Expr& F);

struct EulerOperators {
  ExprVector E0, E1, E2;
};
/// E0 = F_q - D F_qd + D^2 F_qdd, E1 = F_qd - 2 D F_qdd, E2 = F_qdd, where D
/// is the total derivative on the full jet.
EulerOperators el_operators(const VariableSpace& space, const Expr& F);

ConservedQuantity is_conserved(const LagrangianSystem& sys, const Expr& C, const sym::CheckOptions& opts = {},
                               std::string name = {});

struct SymmetryCheck {
  bool ok = false;
  ExprVector residual;
  sym::CheckResult check;
};
/// D_t^2 P^i - (P^j df^i/dq^j + D_t P^j df^i/dqd^j) == 0 on shell.
SymmetryCheck is_eom_symmetry(const LagrangianSystem& sys, const SymmetryGenerator& gen,
                              const sym::CheckOptions& opts = {});

struct VariationalReport {
  bool verdict = false;
  Expr prolonged_lagrangian;  // P^i L_q^i + (D P^i) L_qd^i on the jet
  ExprVector residual;        // E0 of the above
  std::optional<Expr> W;
  sym::CheckResult check;
};
/// E0(pr X_P L) == 0 on the full jet. W = P^i L_qd^i - C is filled in when C
/// is given or can be rebuilt in closed form from the generator.
VariationalReport is_variational_symmetry(const LagrangianSystem& sys, const SymmetryGenerator& gen,
                                          const sym::CheckOptions& opts = {}, const Expr* C = nullptr);

/// P^i = ginv^ij dC/dqd^j
SymmetryGenerator c_to_p(const LagrangianSystem& sys, const Expr& C, std::string name = {});

struct BasePoint {
  double t = 0.0;
  std::vector<double> q, qd;  // empty means zeros
};

struct Reconstruction {
  bool ok = false;
  std::string failure;
  Expr C;                    // vanishes at the base point
  ExprVector gradient;       // C_t, C_q1..C_qN, C_qd1..C_qdN
  sym::CheckResult closure;  // witness of the first failing mixed-partial pair
  std::string closure_pair;
  sym::CheckResult path;     // agreement with the reversed path
  bool used_quadrature = false;
};
/// Rebuilds C from its gradient by a line integral from the base point along
/// t, then each q^k, then each qd^k. Legs polynomial in their variable are
/// integrated exactly; other legs become quadrature nodes.
Reconstruction p_to_c(const LagrangianSystem& sys, const SymmetryGenerator& gen, const BasePoint& base = {},
                      const sym::CheckOptions& opts = {});

struct SymmetryClass {
  enum class Tag { Point, Dynamical };
  Tag tag = Tag::Dynamical;
  Expr tau;         // point only
  ExprVector eta;   // point only
  std::string reason;
};
const char* class_name(SymmetryClass::Tag t);
/// Point iff dP^i/dqd^j == -tau delta^i_j with tau free of qd; then eta = P + tau qd.
SymmetryClass classify(const VariableSpace& space, const SymmetryGenerator& gen, const sym::CheckOptions& opts = {});

}  // namespace mechsym
