#include "mechsym/sym/check.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mechsym::sym {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::True: return "true";
    case Verdict::False: return "false";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

Sampler::Sampler(std::vector<Symbol> symbols, const CheckOptions& opts)
    : symbols_(std::move(symbols)), rng_(opts.seed) {
  for (const auto& s : symbols_) {
    auto b = opts.boxes.find(s.name);
    boxes_.push_back(b == opts.boxes.end() ? opts.box : b->second);
    auto f = opts.fixed.find(s.name);
    fixed_.push_back(f == opts.fixed.end() ? std::nullopt : std::optional<double>(f->second));
  }
}

double Sampler::uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

void Sampler::next(std::vector<double>& values) {
  values.resize(symbols_.size());
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    const double u = uniform();
    values[i] = fixed_[i] ? *fixed_[i] : boxes_[i].lo + (boxes_[i].hi - boxes_[i].lo) * u;
  }
}

Assignment Sampler::assignment(const std::vector<double>& values) const {
  Assignment a;
  for (std::size_t i = 0; i < symbols_.size(); ++i) a[symbols_[i].name] = values[i];
  return a;
}

namespace {

template <class T>
bool agree(T a, T b, double tol) {
  using std::fabs;
  return fabs(a - b) <= static_cast<T>(tol) * (1 + fabs(a) + fabs(b));
}

}  // namespace

CheckResult check_pairs(const std::vector<std::pair<Expr, Expr>>& pairs, const CheckOptions& opts) {
  CheckResult res;
  std::vector<Expr> outputs;
  outputs.reserve(pairs.size() * 2);
  for (const auto& [a, b] : pairs) {
    outputs.push_back(a);
    outputs.push_back(b);
  }
  std::vector<Symbol> syms;
  for (const auto& s : free_symbols(outputs)) syms.push_back(s);
  Program prog(outputs, syms);
  Sampler sampler(syms, opts);

  const int trials = std::max(1, opts.trials);
  const int max_attempts = 20 * trials;
  std::vector<double> x;
  std::vector<double> out(outputs.size());
  std::vector<long double> xl;
  std::vector<long double> outl(outputs.size());
  int attempts = 0;
  std::string last_error;
  while (res.samples < trials && attempts < max_attempts) {
    ++attempts;
    sampler.next(x);
    std::string why;
    if (!prog.run(x, out, &why)) {
      last_error = why;
      continue;
    }
    ++res.samples;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const double a = out[2 * k];
      const double b = out[2 * k + 1];
      const double err = std::fabs(a - b) / (1 + std::fabs(a) + std::fabs(b));
      if (agree(a, b, opts.tol)) {
        res.max_error = std::max(res.max_error, err);
        continue;
      }
      // Cancellation near singular sets can defeat double precision; the
      // point only counts as a counterexample if extended precision agrees.
      xl.assign(x.begin(), x.end());
      if (prog.run(xl, outl) && agree(outl[2 * k], outl[2 * k + 1], opts.tol)) {
        const long double al = outl[2 * k];
        const long double bl = outl[2 * k + 1];
        res.max_error = std::max(res.max_error, static_cast<double>(std::fabs(al - bl) / (1 + std::fabs(al) + std::fabs(bl))));
        continue;
      }
      res.verdict = Verdict::False;
      res.failing_index = static_cast<int>(k);
      res.witness = sampler.assignment(x);
      res.max_error = std::max(res.max_error, err);
      std::ostringstream os;
      os.precision(17);
      os << "lhs=" << a << " rhs=" << b;
      res.detail = os.str();
      return res;
    }
  }
  if (res.samples * 4 < trials) {
    res.verdict = Verdict::Inconclusive;
    std::ostringstream os;
    os << "only " << res.samples << " of " << trials << " samples were in the domain";
    if (!last_error.empty()) os << " (" << last_error << ")";
    res.detail = os.str();
    return res;
  }
  res.verdict = Verdict::True;
  return res;
}

CheckResult equals_numeric(const Expr& a, const Expr& b, const CheckOptions& opts) {
  return check_pairs({{a, b}}, opts);
}

CheckResult check_zero(const std::vector<Expr>& exprs, const CheckOptions& opts) {
  std::vector<std::pair<Expr, Expr>> pairs;
  pairs.reserve(exprs.size());
  for (const auto& e : exprs) pairs.emplace_back(e, Expr(0));
  return check_pairs(pairs, opts);
}

}  // namespace mechsym::sym
