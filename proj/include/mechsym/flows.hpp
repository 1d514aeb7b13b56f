#pragma once

#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mechsym/noether.hpp"
#include "mechsym/numeric/ode.hpp"

namespace mechsym {

struct State {
  double t = 0.0;
  std::vector<double> q, qd;
};

/// Adaptive solution of qdd = f with its integrator bookkeeping.
struct Trajectory {
  int dof = 0;
  std::string integrator = "dopri45";
  double tol = 0.0;
  numeric::OdeSolution solution;

  std::size_t size() const { return solution.t.size(); }
  bool truncated() const { return solution.truncated; }
  const std::string& reason() const { return solution.reason; }
  State node(std::size_t k) const;
  /// Cubic Hermite dense output.
  State at(double t) const;
};

/// Dormand-Prince 5(4) with rtol = atol = tol. Stops, when given, are
/// landed on exactly. A domain error of f truncates the trajectory.
Trajectory integrate(const LagrangianSystem& sys, const State& initial, double t_end, double tol,
                     std::vector<double> stops = {});

/// Header t,q1..qN,qd1..qdN, one row per accepted node.
void write_csv(const Trajectory& traj, std::ostream& os);

struct MonitorOptions {
  double jump_threshold = 1e-3;  // relative size of a jump, times (1 + |C|)
  double quiet_error = 1e-8;     // local error a jump interval must stay under, times (1 + |C|)
  double drift_tol = 1e-6;       // allowed variation inside a smooth segment
};

struct IntegralVerdict {
  std::string name;
  ConservationStatus classification = ConservationStatus::Failed;
  double max_drift = 0.0;  // largest spread of C inside one smooth segment
  std::vector<double> jump_times;
  std::vector<double> jump_sizes;
  int rejected_jumps = 0;  // flagged intervals that bisection showed to be steep but continuous
  std::string detail;
};

struct ConservationVerdict {
  std::vector<IntegralVerdict> integrals;
  /// Times where q.qd changes sign from negative to positive.
  std::vector<double> radius_minima;
};

ConservationVerdict monitor(const LagrangianSystem& sys, const Trajectory& traj,
                            const std::vector<ConservedQuantity>& integrals, const MonitorOptions& opts = {});

struct FlowMap {
  std::string method;  // "ode", "gauge" or "series-k"
  std::vector<double> eps;
  std::vector<State> states;
  bool truncated = false;
  std::string reason;
};

/// Transports (q, qd) at fixed t along dq/deps = P, dqd/deps = D_t P. The
/// map is reported at every point of eps_grid (0 is always included).
FlowMap flow_ode(const LagrangianSystem& sys, const SymmetryGenerator& gen, const State& state, double eps_end,
                 double tol, std::vector<double> eps_grid = {});

/// Also moves t: dt/deps = tau, dq/deps = P + tau qd, dqd/deps = D_t P + tau f.
FlowMap flow_gauge(const LagrangianSystem& sys, const SymmetryGenerator& gen, const State& state, double eps_end,
                   double tol, std::vector<double> eps_grid = {});

/// Raised when a nested bracket exceeds the node budget.
class SeriesTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kSeriesNodeCap = 100000;

/// F + sum_{n=1..k} eps^n/n! T_n with T_n = {T_(n-1), C}.
class FlowSeries {
 public:
  FlowSeries(const LagrangianSystem& sys, const Expr& C, const Expr& F, int order,
             std::size_t node_cap = kSeriesNodeCap);
  const ExprVector& terms() const { return terms_; }
  int order() const { return static_cast<int>(terms_.size()) - 1; }
  /// Throws std::domain_error on an evaluation failure.
  double operator()(const State& s, double eps) const;

 private:
  ExprVector terms_;
  std::unique_ptr<StateProgram> program_;
};

struct GaugeEquivalence {
  bool ok = false;
  Expr difference;  // tau D_t C
  sym::CheckResult check;
};
/// Y_P(C) - X_P(C) = tau D_t C vanishes identically.
GaugeEquivalence verify_gauge_equivalence(const LagrangianSystem& sys, const SymmetryGenerator& gen, const Expr& tau,
                                          const Expr& C, const sym::CheckOptions& opts = {});

struct MappingReport {
  bool ok = false;  // every node transported and evaluated
  double h = 0.0;
  std::size_t nodes = 0;
  double max_residual = 0.0;   // |second difference of q* - f(q*, qd*)|
  double max_velocity_mismatch = 0.0;  // |central difference of q* - qd*|
  double at_time = 0.0;
  std::string reason;
};
/// Transports the trajectory node by node with the generator flow at
/// parameter eps and measures how far the image is from solving qdd = f.
MappingReport solution_mapping_check(const LagrangianSystem& sys, const SymmetryGenerator& gen,
                                     const Trajectory& traj, double eps, double tol);

}  // namespace mechsym
