#include "mechsym/sym/polynomial.hpp"

#include "mechsym/sym/simplify.hpp"

namespace mechsym::sym {

std::optional<std::vector<Expr>> polynomial_coefficients(const Expr& e, const Symbol& x) {
  const Expr s = simplify(e);
  const std::vector<Expr> terms = s.kind() == Kind::Add ? s.args() : std::vector<Expr>{s};
  std::vector<std::vector<Expr>> buckets;
  for (const auto& term : terms) {
    const std::vector<Expr> factors = term.kind() == Kind::Mul ? term.args() : std::vector<Expr>{term};
    long long k = 0;
    std::vector<Expr> rest;
    for (const auto& f : factors) {
      if (f.kind() == Kind::Symbol && f.symbol() == x) {
        k += 1;
      } else if (f.kind() == Kind::Pow && f.args()[0].kind() == Kind::Symbol && f.args()[0].symbol() == x &&
                 f.args()[1].is_number() && f.args()[1].number().is_integer() &&
                 f.args()[1].number().numerator() > 0) {
        k += f.args()[1].number().numerator();
      } else if (depends_on(f, x)) {
        return std::nullopt;
      } else {
        rest.push_back(f);
      }
    }
    if (buckets.size() <= static_cast<std::size_t>(k)) buckets.resize(static_cast<std::size_t>(k) + 1);
    buckets[static_cast<std::size_t>(k)].push_back(mul(std::move(rest)));
  }
  std::vector<Expr> coeffs;
  coeffs.reserve(buckets.size());
  for (auto& b : buckets) coeffs.push_back(add(std::move(b)));
  if (coeffs.empty()) coeffs.emplace_back(0);
  return coeffs;
}

Expr integrate_polynomial(const std::vector<Expr>& coeffs, const Symbol& x) {
  std::vector<Expr> terms;
  const Expr xv(x);
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    if (coeffs[k].is_zero()) continue;
    const long long n = static_cast<long long>(k) + 1;
    terms.push_back(mul({coeffs[k], pow(xv, Expr(n)), rational(1, n)}));
  }
  return simplify(add(std::move(terms)));
}

Expr random_polynomial(const std::vector<Symbol>& vars, int degree, int terms, std::mt19937_64& rng,
                       int coeff_range) {
  std::uniform_int_distribution<int> deg(0, degree);
  std::uniform_int_distribution<std::size_t> pick(0, vars.empty() ? 0 : vars.size() - 1);
  std::uniform_int_distribution<int> coeff(1, coeff_range);
  std::uniform_int_distribution<int> sign(0, 1);
  std::vector<Expr> out;
  for (int i = 0; i < terms; ++i) {
    std::vector<Expr> factors;
    int c = coeff(rng);
    if (sign(rng)) c = -c;
    factors.emplace_back(c);
    const int d = vars.empty() ? 0 : deg(rng);
    for (int j = 0; j < d; ++j) factors.emplace_back(vars[pick(rng)]);
    out.push_back(mul(std::move(factors)));
  }
  return add(std::move(out));
}

}  // namespace mechsym::sym
