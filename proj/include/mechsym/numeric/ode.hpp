#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mechsym::numeric {

/// dy/dt = rhs(t, y). Returns false (optionally with a reason) when the
/// right-hand side cannot be evaluated at this state.
using Rhs = std::function<bool(double t, std::span<const double> y, std::span<double> dy, std::string* why)>;

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double h0 = 0.0;  // 0 picks an initial step automatically
  double hmax = 0.0;  // 0 means unbounded
  std::size_t max_steps = 2'000'000;
  std::vector<double> stops;  // times the integrator must land on exactly
};

/// Accepted nodes of an adaptive run with per-step error bookkeeping and
/// cubic Hermite dense output.
struct OdeSolution {
  std::vector<double> t;
  std::vector<std::vector<double>> y;
  std::vector<std::vector<double>> dy;
  std::vector<double> local_error;  // local_error[k]: step from t[k-1] to t[k]; [0] = 0
  double global_error = 0.0;         // sum of local error estimates
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  bool truncated = false;
  std::string reason;

  bool empty() const { return t.empty(); }
  double t_front() const { return t.front(); }
  double t_back() const { return t.back(); }
  /// Hermite interpolation inside [t_front, t_back].
  std::vector<double> at(double time) const;
  /// Index k with t[k] <= time <= t[k+1].
  std::size_t segment(double time) const;
};

/// Dormand-Prince 5(4) with standard PI-free step control.
OdeSolution dopri45(const Rhs& rhs, double t0, std::vector<double> y0, double t1, const OdeOptions& opts = {});

/// Classical RK4 with n equal steps; returns the final state, or an empty
/// vector on an evaluation failure.
std::vector<double> rk4_fixed(const Rhs& rhs, double t0, std::vector<double> y0, double t1, int n);

}  // namespace mechsym::numeric
