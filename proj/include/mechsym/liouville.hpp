#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mechsym/flows.hpp"
#include "mechsym/noether.hpp"

namespace mechsym {

/// The point in (t, q, qd) lies outside the region where the velocity
/// inversion branch is smooth, or the branch cannot be fixed.
class ChartError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// N conserved quantities in involution whose velocity Jacobian is invertible.
struct CommutingFamily {
  std::vector<ConservedQuantity> members;
  bool conserved = false;
  bool commuting = false;
  bool independent = false;
  int pair_i = -1, pair_j = -1;  // first pair with a non-vanishing bracket
  sym::CheckResult bracket_check;
  int jacobian_samples = 0;      // samples with |det dC/dqd| above the floor
  int jacobian_rejected = 0;     // samples where it vanished
  std::string failure;
  bool valid() const { return conserved && commuting && independent; }
};

/// Brackets are compared with zero by equals_numeric; the velocity Jacobian
/// must be nonsingular at more than 90% of the sampled states.
CommutingFamily verify_family(const LagrangianSystem& sys, const std::vector<ConservedQuantity>& members,
                              const sym::CheckOptions& opts = {});

struct InversionOptions {
  bool force_numeric = false;  // skip the closed-form solve and use Newton
  double newton_tol = 1e-12;
  int newton_max_iter = 100;
};

/// qd(t, q, C) on one branch. The values of the family members enter as the
/// parameters `constants` ($C1..$CN).
struct VelocityInversion {
  std::vector<Symbol> constants;
  ExprVector qd;
  bool symbolic = false;
  /// Per velocity component: +1 or -1 for a square-root branch, 0 for a
  /// linear solve or a Newton solution.
  std::vector<int> branch;
  /// For closed forms: member used to solve each component, in solve order.
  std::vector<int> solved_by;
  /// Square-root branches whose coefficients allow a half-line sample box:
  /// sign of qd^k on the chart, 0 otherwise.
  std::vector<int> velocity_sign;
  State seed;
};

/// Closed form when the family is triangular with each new member linear or
/// quadratic in one new velocity; otherwise damped Newton started from the
/// seed velocities. A seed is required whenever a square root appears.
VelocityInversion invert_velocities(const LagrangianSystem& sys, const CommutingFamily& family,
                                    const std::optional<State>& seed, const InversionOptions& opts = {});

/// Replaces the constants by the family members: (t, q, C) -> (t, q, qd).
Expr pullback(const CommutingFamily& family, const VelocityInversion& inv, const Expr& e);

/// Evaluates expressions in (t, q, C) and tests chart membership.
class ChartProgram {
 public:
  ChartProgram(const LagrangianSystem& sys, const CommutingFamily& family, const VelocityInversion& inv,
               const ExprVector& outputs);
  bool run(double t, std::span<const double> q, std::span<const double> c, std::span<double> out) const;
  /// Values of the family at a state.
  bool constants_at(const State& s, std::vector<double>& c) const;
  /// True when the inversion at C(state) reproduces the state's velocities.
  bool contains(const State& s, double tol = 1e-8) const;

 private:
  int n_;
  sym::Program members_;
  sym::Program inverse_;
  sym::Program outputs_;
  std::vector<double> params_;
};

/// Sample box for randomized checks restricted to the chart: half-lines for
/// pure square-root branches, a neighbourhood of the seed otherwise.
sym::CheckOptions chart_options(const LagrangianSystem& sys, const VelocityInversion& inv,
                                const sym::CheckOptions& base = {});

struct ChartBase {
  double t = 0.0;          // lower limit of the time quadrature
  std::vector<double> q;  // start of the q path; empty means zeros
};

struct GeneratingFunction {
  Expr S;  // S(t, q, C), zero at the base
  ChartBase base;
  bool used_quadrature = false;
};

/// Line integral of p_j(t, q, qd(t, q, C)) dq^j from the base along q1, then
/// q2, ... Legs in closed form when the integrand is polynomial or a
/// multiple of Q^(+-1/2) with Q quadratic in the leg variable; quadrature
/// otherwise. Throws ChartError when S cannot be evaluated at the seed.
GeneratingFunction generating_function(const LagrangianSystem& sys, const CommutingFamily& family,
                                       const VelocityInversion& inv, const ChartBase& base = {});

struct Angles {
  ExprVector theta;     // Theta^i(t, q, C)
  ExprVector pullback;  // Theta^i(t, q, qd)
  bool used_quadrature = false;
};

/// Theta^i = integral of g_jk dqd^k/dC_i dq^j along the same path as S.
Angles angles(const LagrangianSystem& sys, const CommutingFamily& family, const VelocityInversion& inv,
              const GeneratingFunction& gf);

struct ChartDrift {
  std::string name;
  double max_drift = 0.0;
  std::size_t nodes = 0;  // nodes inside the chart
  int chart_exits = 0;
};

struct LiouvilleIntegrals {
  std::vector<ConservedQuantity> integrals;
  std::vector<ChartDrift> drift;  // worst case over the validation trajectories
  Expr K;                         // non-autonomous only: K(t, C)
  ExprVector upsilon;             // non-autonomous only, in (t, q, qd)
  std::string reduction;          // non-autonomous only: "trivial", "ratio" or "unsupported"
  std::string note;
};

struct ValidationOptions {
  int trajectories = 10;
  double t_end = 2.0;
  double tol = 1e-10;
  double drift_tol = 1e-6;
  std::uint64_t seed = 0;
};

/// Requires an autonomous system whose first member is the energy. Returns
/// T = t - Theta^1 followed by Theta^2..Theta^N, each checked symbolically on
/// the chart box and numerically along trajectories.
LiouvilleIntegrals autonomous_integrals(const LagrangianSystem& sys, const CommutingFamily& family,
                                        const VelocityInversion& inv, const Angles& angles,
                                        const sym::CheckOptions& opts = {}, const ValidationOptions& vopts = {});

/// K = dS/dt + p.qd - L must not depend on q. Returns
/// Upsilon^i = integral of dK/dC_i dt - Theta^i and, for N = 2 with
/// t-independent dK/dC_i, F = (dK/dC_2) Upsilon^1 - (dK/dC_1) Upsilon^2.
LiouvilleIntegrals nonautonomous_integrals(const LagrangianSystem& sys, const CommutingFamily& family,
                                           const VelocityInversion& inv, const GeneratingFunction& gf,
                                           const Angles& angles, const sym::CheckOptions& opts = {},
                                           const ValidationOptions& vopts = {});

/// Spread of each expression along a trajectory, restarted whenever the
/// state leaves the chart.
std::vector<ChartDrift> drift_in_chart(const LagrangianSystem& sys, const CommutingFamily& family,
                                       const VelocityInversion& inv, const std::vector<ConservedQuantity>& integrals,
                                       const State& initial, double t_end, double tol);

struct ChartChecks {
  int dof = 0;
  sym::CheckResult canonical;  // {Theta^i, C_j} == delta
  int samples = 0;
  int min_rank = 0;            // rank of d(C, Theta)/d(q, qd) over the samples
  bool ok() const { return canonical.ok() && samples > 0 && min_rank == 2 * dof; }
};
ChartChecks check_chart(const LagrangianSystem& sys, const CommutingFamily& family, const VelocityInversion& inv,
                        const Angles& angles, const sym::CheckOptions& opts = {});

}  // namespace mechsym
