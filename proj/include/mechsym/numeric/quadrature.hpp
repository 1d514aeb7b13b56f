#pragma once

#include <functional>
#include <optional>

namespace mechsym::numeric {

struct QuadratureResult {
  bool ok = false;
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive 15-point Gauss-Kronrod on [a, b] (endpoints are never sampled, so
/// integrable endpoint singularities are tolerated). The integrand returns
/// nullopt to signal a domain error, which fails the whole integral.
/// Refinement stops at error <= tol * max(1, L1) or after 2^min(max_depth, 12)
/// subintervals; a tanh-sinh pass is tried when that budget runs out.
QuadratureResult integrate(const std::function<std::optional<double>(double)>& f, double a, double b,
                           double tol = 1e-10, unsigned max_depth = 20);

}  // namespace mechsym::numeric
