#include "mechsym/sym/calculus.hpp"

#include <unordered_map>

#include "mechsym/sym/simplify.hpp"

namespace mechsym::sym {
namespace {

class Differentiator {
 public:
  explicit Differentiator(const Symbol& v) : v_(v) {}

  Expr run(const Expr& e) {
    auto it = memo_.find(e.get());
    if (it != memo_.end()) return it->second;
    Expr r = rule(e);
    memo_.emplace(e.get(), r);
    keep_.push_back(e);
    return r;
  }

 private:
  Expr rule(const Expr& e) {
    switch (e.kind()) {
      case Kind::Number: return Expr(0);
      case Kind::Symbol: return e.symbol() == v_ ? Expr(1) : Expr(0);
      case Kind::Add: {
        std::vector<Expr> terms;
        for (const auto& a : e.args()) terms.push_back(run(a));
        return add(std::move(terms));
      }
      case Kind::Mul: {
        const auto& f = e.args();
        std::vector<Expr> terms;
        for (std::size_t i = 0; i < f.size(); ++i) {
          Expr di = run(f[i]);
          if (di.is_zero()) continue;
          std::vector<Expr> prod;
          prod.reserve(f.size());
          for (std::size_t j = 0; j < f.size(); ++j) prod.push_back(j == i ? di : f[j]);
          terms.push_back(mul(std::move(prod)));
        }
        return add(std::move(terms));
      }
      case Kind::Pow: {
        const Expr& b = e.args()[0];
        const Expr& x = e.args()[1];
        Expr db = run(b);
        Expr dx = run(x);
        if (dx.is_zero()) {
          if (db.is_zero()) return Expr(0);
          return mul({x, pow(b, x - Expr(1)), db});
        }
        return e * (dx * log(b) + x * db / b);
      }
      case Kind::Func: {
        const Expr& u = e.args()[0];
        if (e.fn() == Fn::Atan2) {
          const Expr& x = e.args()[1];
          Expr dy = run(u);
          Expr dx = run(x);
          if (dy.is_zero() && dx.is_zero()) return Expr(0);
          return (x * dy - u * dx) / (pow(u, Expr(2)) + pow(x, Expr(2)));
        }
        Expr du = run(u);
        if (du.is_zero()) return Expr(0);
        switch (e.fn()) {
          case Fn::Sin: return cos(u) * du;
          case Fn::Cos: return -sin(u) * du;
          case Fn::Tan: return (Expr(1) + pow(e, Expr(2))) * du;
          case Fn::Exp: return e * du;
          case Fn::Log: return du / u;
          case Fn::Abs: return u / e * du;
          default: break;
        }
        return Expr(0);
      }
      case Kind::Kernel: {
        const auto& a = e.args();
        std::vector<Expr> terms;
        for (std::size_t k = 0; k < a.size(); ++k) {
          Expr dk = run(a[k]);
          if (dk.is_zero()) continue;
          terms.push_back(e.kernel()->partial(static_cast<int>(k), a) * dk);
        }
        return add(std::move(terms));
      }
    }
    return Expr(0);
  }

  Symbol v_;
  std::unordered_map<const Node*, Expr> memo_;
  std::vector<Expr> keep_;
};

}  // namespace

Expr diff_raw(const Expr& e, const Symbol& v) {
  Differentiator d(v);
  return d.run(e);
}

Expr diff(const Expr& e, const Symbol& v) { return simplify(diff_raw(e, v)); }

Expr total_derivative(const Expr& e, const VariableSpace& space) {
  if (max_jet_order(e) >= 2) {
    throw JetOrderError("total_derivative: input depends on second derivatives; use jet_total_derivative");
  }
  return jet_total_derivative(e, space);
}

Expr jet_total_derivative(const Expr& e, const VariableSpace& space) {
  std::vector<Expr> terms;
  for (const auto& s : free_symbols(e)) {
    if (s.is_time()) {
      terms.push_back(diff_raw(e, s));
    } else if (s.is_jet()) {
      terms.push_back(Expr(space.jet(s.order + 1, s.index)) * diff_raw(e, s));
    }
  }
  return simplify(add(std::move(terms)));
}

Expr solution_derivative(const Expr& e, const VariableSpace& space, const std::vector<Expr>& force) {
  if (max_jet_order(e) >= 2) {
    throw JetOrderError("solution_derivative: input depends on second derivatives");
  }
  std::vector<Expr> terms;
  for (const auto& s : free_symbols(e)) {
    if (s.is_time()) {
      terms.push_back(diff_raw(e, s));
    } else if (s.is_jet() && s.order == 0) {
      terms.push_back(Expr(space.qd(s.index)) * diff_raw(e, s));
    } else if (s.is_jet() && s.order == 1) {
      terms.push_back(force.at(static_cast<std::size_t>(s.index)) * diff_raw(e, s));
    }
  }
  return simplify(add(std::move(terms)));
}

std::vector<Expr> gradient(const Expr& e, const std::vector<Symbol>& vars) {
  std::vector<Expr> out;
  out.reserve(vars.size());
  for (const auto& v : vars) out.push_back(diff(e, v));
  return out;
}

}  // namespace mechsym::sym
