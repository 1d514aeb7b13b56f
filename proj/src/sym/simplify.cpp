#include "mechsym/sym/simplify.hpp"

#include <unordered_map>

namespace mechsym::sym {
namespace {

bool is_cos_power(const Expr& f, Expr& arg, long long& n) {
  if (f.kind() != Kind::Pow) return false;
  const Expr& b = f.args()[0];
  const Expr& e = f.args()[1];
  if (b.kind() != Kind::Func || b.fn() != Fn::Cos) return false;
  if (!e.is_number() || !e.number().is_integer() || e.number().numerator() < 2) return false;
  arg = b.args()[0];
  n = e.number().numerator();
  return true;
}

class Expander {
 public:
  Expr run(const Expr& e) {
    auto it = memo_.find(e.get());
    if (it != memo_.end()) return it->second;
    Expr r = expand(e);
    memo_.emplace(e.get(), r);
    keep_.push_back(e);
    return r;
  }

 private:
  // Multiplies a list of already-expanded factors, distributing over sums.
  Expr distribute(const std::vector<Expr>& factors) {
    std::vector<Expr> acc{Expr(1)};
    for (const auto& f : factors) {
      std::vector<Expr> next;
      if (f.kind() == Kind::Add) {
        next.reserve(acc.size() * f.args().size());
        for (const auto& a : acc) {
          for (const auto& t : f.args()) next.push_back(a * t);
        }
      } else {
        next.reserve(acc.size());
        for (const auto& a : acc) next.push_back(a * f);
      }
      acc = std::move(next);
    }
    std::vector<Expr> terms;
    terms.reserve(acc.size());
    for (auto& t : acc) {
      Expr r = normalize_term(t);
      if (r.kind() == Kind::Add) {
        terms.insert(terms.end(), r.args().begin(), r.args().end());
      } else {
        terms.push_back(r);
      }
    }
    return add(std::move(terms));
  }

  static bool expandable_power(const Expr& f) {
    return f.kind() == Kind::Pow && f.args()[0].kind() == Kind::Add && f.args()[1].is_number() &&
           f.args()[1].number().is_integer() && f.args()[1].number().numerator() > 1;
  }

  // Merging like bases inside a product can recreate a sum factor, e.g.
  // sqrt(x+y)*sqrt(x+y); such products are multiplied out again.
  Expr normalize_term(const Expr& t) {
    if (t.kind() == Kind::Add) {
      std::vector<Expr> parts;
      for (const auto& a : t.args()) parts.push_back(normalize_term(a));
      return add(std::move(parts));
    }
    std::vector<Expr> factors = t.kind() == Kind::Mul ? t.args() : std::vector<Expr>{t};
    bool again = false;
    std::vector<Expr> out;
    for (const auto& f : factors) {
      if (f.kind() == Kind::Add) {
        again = true;
        out.push_back(f);
      } else if (expandable_power(f)) {
        again = true;
        const auto n = static_cast<std::size_t>(f.args()[1].number().numerator());
        for (std::size_t k = 0; k < n; ++k) out.push_back(f.args()[0]);
      } else {
        out.push_back(f);
      }
    }
    if (again) return distribute(out);
    return rewrite_trig(t);
  }

  // A product term whose factors contain cos(u)^n, n >= 2, is rewritten with
  // cos(u)^2 = 1 - sin(u)^2 and re-expanded.
  Expr rewrite_trig(const Expr& term) {
    std::vector<Expr> factors = term.kind() == Kind::Mul ? term.args() : std::vector<Expr>{term};
    bool hit = false;
    std::vector<Expr> out;
    for (const auto& f : factors) {
      Expr arg;
      long long n = 0;
      if (is_cos_power(f, arg, n)) {
        hit = true;
        const Expr one_minus = add({Expr(1), -pow(sin(arg), Expr(2))});
        for (long long k = 0; k < n / 2; ++k) out.push_back(one_minus);
        if (n % 2) out.push_back(cos(arg));
      } else {
        out.push_back(f);
      }
    }
    if (!hit) return term;
    return distribute(out);
  }

  Expr expand(const Expr& e) {
    switch (e.kind()) {
      case Kind::Number:
      case Kind::Symbol: return e;
      case Kind::Func: {
        std::vector<Expr> a;
        for (const auto& x : e.args()) a.push_back(run(x));
        return func(e.fn(), std::move(a));
      }
      case Kind::Kernel: {
        std::vector<Expr> a;
        for (const auto& x : e.args()) a.push_back(run(x));
        return call(e.kernel(), std::move(a));
      }
      case Kind::Add: {
        std::vector<Expr> a;
        for (const auto& x : e.args()) a.push_back(run(x));
        return normalize_term(add(std::move(a)));
      }
      case Kind::Mul: {
        std::vector<Expr> a;
        for (const auto& x : e.args()) a.push_back(run(x));
        return distribute(a);
      }
      case Kind::Pow: {
        Expr b = run(e.args()[0]);
        Expr x = run(e.args()[1]);
        if (x.is_number() && x.number().is_integer() && x.number().numerator() > 1 && b.kind() == Kind::Add) {
          std::vector<Expr> fs(static_cast<std::size_t>(x.number().numerator()), b);
          return distribute(fs);
        }
        return normalize_term(pow(b, x));
      }
    }
    return e;
  }

  std::unordered_map<const Node*, Expr> memo_;
  std::vector<Expr> keep_;
};

}  // namespace

Expr simplify(const Expr& e) {
  Expander x;
  return x.run(e);
}

Expr substitute(const Expr& e, const std::map<Symbol, Expr>& repl) {
  if (repl.empty()) return e;
  std::unordered_map<const Node*, Expr> memo;
  std::vector<Expr> keep;
  auto rec = [&](auto&& self, const Expr& x) -> Expr {
    auto it = memo.find(x.get());
    if (it != memo.end()) return it->second;
    Expr r;
    switch (x.kind()) {
      case Kind::Number: r = x; break;
      case Kind::Symbol: {
        auto f = repl.find(x.symbol());
        r = f == repl.end() ? x : f->second;
        break;
      }
      default: {
        std::vector<Expr> a;
        a.reserve(x.args().size());
        bool changed = false;
        for (const auto& c : x.args()) {
          a.push_back(self(self, c));
          changed = changed || a.back().get() != c.get();
        }
        if (!changed) {
          r = x;
        } else if (x.kind() == Kind::Add) {
          r = add(std::move(a));
        } else if (x.kind() == Kind::Mul) {
          r = mul(std::move(a));
        } else if (x.kind() == Kind::Pow) {
          r = pow(a[0], a[1]);
        } else if (x.kind() == Kind::Func) {
          r = func(x.fn(), std::move(a));
        } else {
          r = call(x.kernel(), std::move(a));
        }
      }
    }
    memo.emplace(x.get(), r);
    keep.push_back(x);
    return r;
  };
  return rec(rec, e);
}

}  // namespace mechsym::sym
