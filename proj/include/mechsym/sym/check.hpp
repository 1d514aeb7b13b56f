#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mechsym/sym/evaluate.hpp"
#include "mechsym/sym/expr.hpp"

namespace mechsym::sym {

enum class Verdict { True, False, Inconclusive };
const char* verdict_name(Verdict v);

struct Box {
  double lo = -2.0;
  double hi = 2.0;
};

/// Settings for randomized identity checks. A sample is accepted when every
/// expression evaluates without a domain error; rejected draws are retried
/// up to 20 * trials times.
struct CheckOptions {
  int trials = 64;
  double tol = 1e-9;
  Box box;
  std::uint64_t seed = 0;
  std::map<std::string, Box> boxes;  // per-symbol overrides
  Assignment fixed;                  // symbols held at a value
};

struct CheckResult {
  Verdict verdict = Verdict::Inconclusive;
  Assignment witness;
  int samples = 0;
  int failing_index = -1;  // which pair failed
  double max_error = 0.0;
  std::string detail;
  bool ok() const { return verdict == Verdict::True; }
};

/// Deterministic uniform sampler over a product of boxes.
class Sampler {
 public:
  Sampler(std::vector<Symbol> symbols, const CheckOptions& opts);
  const std::vector<Symbol>& symbols() const { return symbols_; }
  void next(std::vector<double>& values);
  Assignment assignment(const std::vector<double>& values) const;

 private:
  double uniform();
  std::vector<Symbol> symbols_;
  std::vector<Box> boxes_;
  std::vector<std::optional<double>> fixed_;
  std::mt19937_64 rng_;
};

/// |a - b| <= tol * (1 + |a| + |b|) at `trials` random points.
CheckResult equals_numeric(const Expr& a, const Expr& b, const CheckOptions& opts = {});
/// All pairs must agree at every sample; failing_index names the first offender.
CheckResult check_pairs(const std::vector<std::pair<Expr, Expr>>& pairs, const CheckOptions& opts = {});
/// Every expression must vanish identically.
CheckResult check_zero(const std::vector<Expr>& exprs, const CheckOptions& opts = {});

}  // namespace mechsym::sym
