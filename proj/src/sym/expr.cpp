#include "mechsym/sym/expr.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include "mechsym/sym/printer.hpp"

namespace mechsym::sym {
namespace {

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
}

void finalize_hash(Node& n) {
  std::size_t h = static_cast<std::size_t>(n.kind) * 1000003u;
  switch (n.kind) {
    case Kind::Number: h = mix(h, n.num.hash()); break;
    case Kind::Symbol: h = mix(h, std::hash<std::string>{}(n.sym.name)); break;
    case Kind::Func: h = mix(h, static_cast<std::size_t>(n.fn)); break;
    case Kind::Kernel: h = mix(h, static_cast<std::size_t>(n.kern->serial())); break;
    default: break;
  }
  for (const Expr& a : n.args) h = mix(h, a.hash());
  n.hash = h;
}

int cmp_symbol(const Symbol& a, const Symbol& b) {
  if (a.cls != b.cls) return a.cls < b.cls ? -1 : 1;
  if (a.order != b.order) return a.order < b.order ? -1 : 1;
  if (a.index != b.index) return a.index < b.index ? -1 : 1;
  const int c = a.name.compare(b.name);
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

int cmp_args(const std::vector<Expr>& a, const std::vector<Expr>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const int c = compare(a[i], b[i]);
    if (c != 0) return c;
  }
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  return 0;
}

Expr raw(Kind kind, std::vector<Expr> args) {
  Node n;
  n.kind = kind;
  n.args = std::move(args);
  return make_node(std::move(n));
}

const Expr& zero() {
  static const Expr z{0LL};
  return z;
}

bool is_negated(const Expr& e) {
  if (e.is_number()) return e.number().is_negative();
  if (e.kind() == Kind::Mul && e.args().front().is_number()) return e.args().front().number().is_negative();
  return false;
}

std::optional<double> fold_numeric(Fn f, const std::vector<Expr>& args) {
  const double x = args[0].number().to_double();
  double r = 0.0;
  switch (f) {
    case Fn::Sin: r = std::sin(x); break;
    case Fn::Cos: r = std::cos(x); break;
    case Fn::Tan: r = std::tan(x); break;
    case Fn::Exp: r = std::exp(x); break;
    case Fn::Log:
      if (x <= 0.0) return std::nullopt;
      r = std::log(x);
      break;
    case Fn::Abs: r = std::fabs(x); break;
    case Fn::Atan2: {
      const double y = x;
      const double xx = args[1].number().to_double();
      if (y == 0.0 && xx == 0.0) return std::nullopt;
      r = std::atan2(y, xx);
      break;
    }
  }
  if (!std::isfinite(r)) return std::nullopt;
  return r;
}

}  // namespace

const char* fn_name(Fn f) {
  switch (f) {
    case Fn::Sin: return "sin";
    case Fn::Cos: return "cos";
    case Fn::Tan: return "tan";
    case Fn::Exp: return "exp";
    case Fn::Log: return "log";
    case Fn::Atan2: return "atan2";
    case Fn::Abs: return "abs";
  }
  return "?";
}

Symbol Symbol::time() {
  Symbol s;
  s.cls = SymbolClass::Time;
  s.name = "t";
  return s;
}

Symbol Symbol::jet(int order, int index) {
  if (order < 0 || index < 0) throw std::invalid_argument("negative jet order or index");
  Symbol s;
  s.cls = SymbolClass::Jet;
  s.order = order;
  s.index = index;
  s.name = "q" + std::string(static_cast<std::size_t>(order), 'd') + std::to_string(index + 1);
  return s;
}

Symbol Symbol::param(std::string name) {
  Symbol s;
  s.cls = SymbolClass::Param;
  s.name = std::move(name);
  return s;
}

bool operator<(const Symbol& a, const Symbol& b) { return cmp_symbol(a, b) < 0; }

Kernel::Kernel() {
  static std::atomic<std::uint64_t> counter{0};
  serial_ = counter.fetch_add(1);
}

Expr make_node(Node&& n) {
  finalize_hash(n);
  return Expr(std::make_shared<const Node>(std::move(n)));
}

Expr::Expr() : Expr(Number(0)) {}
Expr::Expr(long long value) : Expr(Number(value)) {}

Expr::Expr(const Number& value) {
  Node n;
  n.kind = Kind::Number;
  n.num = value;
  finalize_hash(n);
  p_ = std::make_shared<const Node>(std::move(n));
}

Expr::Expr(const Symbol& s) {
  Node n;
  n.kind = Kind::Symbol;
  n.sym = s;
  finalize_hash(n);
  p_ = std::make_shared<const Node>(std::move(n));
}

Kind Expr::kind() const { return p_->kind; }
std::size_t Expr::hash() const { return p_->hash; }
bool Expr::is_zero() const { return p_->kind == Kind::Number && p_->num.is_zero(); }
bool Expr::is_one() const { return p_->kind == Kind::Number && p_->num.is_one(); }
const Number& Expr::number() const { return p_->num; }
const Symbol& Expr::symbol() const { return p_->sym; }
Fn Expr::fn() const { return p_->fn; }
const std::vector<Expr>& Expr::args() const { return p_->args; }
const std::shared_ptr<const Kernel>& Expr::kernel() const { return p_->kern; }

bool operator==(const Expr& a, const Expr& b) {
  if (a.p_ == b.p_) return true;
  if (a.hash() != b.hash()) return false;
  return compare(a, b) == 0;
}

int compare(const Expr& a, const Expr& b) {
  if (a.get() == b.get()) return 0;
  if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
  switch (a.kind()) {
    case Kind::Number: return sym::compare(a.number(), b.number());
    case Kind::Symbol: return cmp_symbol(a.symbol(), b.symbol());
    case Kind::Func:
      if (a.fn() != b.fn()) return a.fn() < b.fn() ? -1 : 1;
      return cmp_args(a.args(), b.args());
    case Kind::Kernel:
      if (a.kernel()->serial() != b.kernel()->serial()) {
        return a.kernel()->serial() < b.kernel()->serial() ? -1 : 1;
      }
      return cmp_args(a.args(), b.args());
    default: return cmp_args(a.args(), b.args());
  }
}

std::pair<Number, Expr> split_coefficient(const Expr& term) {
  if (term.is_number()) return {term.number(), Expr(1)};
  if (term.kind() == Kind::Mul && term.args().front().is_number()) {
    const auto& a = term.args();
    if (a.size() == 2) return {a[0].number(), a[1]};
    return {a[0].number(), raw(Kind::Mul, std::vector<Expr>(a.begin() + 1, a.end()))};
  }
  return {Number(1), term};
}

namespace {

Expr make_term(const Number& c, const Expr& rest) {
  if (c.is_one()) return rest;
  if (rest.kind() == Kind::Mul) {
    std::vector<Expr> args;
    args.reserve(rest.args().size() + 1);
    args.emplace_back(c);
    args.insert(args.end(), rest.args().begin(), rest.args().end());
    return raw(Kind::Mul, std::move(args));
  }
  return raw(Kind::Mul, {Expr(c), rest});
}

Expr mul_impl(std::vector<Expr> factors, bool allow_repass);

}  // namespace

Expr add(std::vector<Expr> terms) {
  std::vector<Expr> flat;
  flat.reserve(terms.size());
  for (auto& t : terms) {
    if (t.kind() == Kind::Add) {
      flat.insert(flat.end(), t.args().begin(), t.args().end());
    } else {
      flat.push_back(std::move(t));
    }
  }
  Number constant(0);
  std::vector<std::pair<Expr, Number>> items;
  items.reserve(flat.size());
  for (const auto& t : flat) {
    if (t.is_number()) {
      constant = constant + t.number();
    } else {
      auto [c, rest] = split_coefficient(t);
      items.emplace_back(rest, c);
    }
  }
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& x, const auto& y) { return compare(x.first, y.first) < 0; });
  std::vector<Expr> out;
  if (!constant.is_zero()) out.emplace_back(constant);
  for (std::size_t i = 0; i < items.size();) {
    Number c = items[i].second;
    std::size_t j = i + 1;
    while (j < items.size() && items[j].first == items[i].first) {
      c = c + items[j].second;
      ++j;
    }
    if (!c.is_zero()) out.push_back(make_term(c, items[i].first));
    i = j;
  }
  if (out.empty()) {
    return constant.is_exact() ? zero() : Expr(constant);
  }
  if (out.size() == 1) return out.front();
  return raw(Kind::Add, std::move(out));
}

Expr mul(std::vector<Expr> factors) { return mul_impl(std::move(factors), true); }

namespace {

Expr mul_impl(std::vector<Expr> factors, bool allow_repass) {
  std::vector<Expr> flat;
  flat.reserve(factors.size());
  for (auto& f : factors) {
    if (f.kind() == Kind::Mul) {
      flat.insert(flat.end(), f.args().begin(), f.args().end());
    } else {
      flat.push_back(std::move(f));
    }
  }
  Number c(1);
  std::vector<std::pair<Expr, Expr>> items;
  items.reserve(flat.size());
  for (const auto& f : flat) {
    if (f.is_number()) {
      c = c * f.number();
    } else if (f.kind() == Kind::Pow) {
      items.emplace_back(f.args()[0], f.args()[1]);
    } else {
      items.emplace_back(f, Expr(1));
    }
  }
  if (c.is_zero()) return Expr(c.is_exact() ? Number(0) : c);
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& x, const auto& y) { return compare(x.first, y.first) < 0; });
  std::vector<Expr> out;
  bool needs_repass = false;
  for (std::size_t i = 0; i < items.size();) {
    std::vector<Expr> exps{items[i].second};
    std::size_t j = i + 1;
    while (j < items.size() && items[j].first == items[i].first) {
      exps.push_back(items[j].second);
      ++j;
    }
    Expr p = exps.size() == 1 ? pow(items[i].first, exps.front()) : pow(items[i].first, add(std::move(exps)));
    if (p.is_number()) {
      c = c * p.number();
    } else if (p.kind() == Kind::Mul) {
      needs_repass = true;
      out.push_back(p);
    } else {
      out.push_back(p);
    }
    i = j;
  }
  if (needs_repass && allow_repass) {
    out.emplace_back(c);
    return mul_impl(std::move(out), false);
  }
  if (needs_repass) {
    // flatten without further merging
    std::vector<Expr> flat2;
    for (auto& f : out) {
      if (f.kind() == Kind::Mul) {
        for (const auto& g : f.args()) {
          if (g.is_number()) {
            c = c * g.number();
          } else {
            flat2.push_back(g);
          }
        }
      } else {
        flat2.push_back(f);
      }
    }
    out = std::move(flat2);
  }
  if (c.is_zero()) return Expr(c);
  std::stable_sort(out.begin(), out.end(), ExprLess{});
  if (out.empty()) return Expr(c);
  if (c.is_one() && out.size() == 1) return out.front();
  if (!c.is_one()) out.insert(out.begin(), Expr(c));
  return raw(Kind::Mul, std::move(out));
}

}  // namespace

Expr pow(const Expr& base, const Expr& exponent) {
  if (exponent.is_number()) {
    const Number& e = exponent.number();
    if (e.is_zero() && e.is_exact()) return Expr(1);
    if (e.is_one() && e.is_exact()) return base;
    if (base.is_number()) {
      const Number& b = base.number();
      if (e.is_integer()) {
        if (b.is_zero() && e.is_negative()) throw std::domain_error("division by zero");
        return Expr(Number::pow_int(b, e.numerator()));
      }
      if (!b.is_exact() || !e.is_exact()) {
        if (b.is_positive() || (b.is_zero() && e.is_positive())) {
          return Expr(Number::real(std::pow(b.to_double(), e.to_double())));
        }
        return raw(Kind::Pow, {base, exponent});
      }
      if (b.is_zero()) {
        if (e.is_negative()) throw std::domain_error("division by zero");
        return Expr(0);
      }
      if (b.is_one()) return Expr(1);
      if (b.is_positive()) {
        // exact root when available: (n/d)^(p/q)
        Number root;
        if (b.exact_root(e.denominator(), root)) return Expr(Number::pow_int(root, e.numerator()));
        // pull the integer part of the exponent out so the remaining power lies in (0,1)
        const long long p = e.numerator();
        const long long q = e.denominator();
        long long whole = p / q;
        long long frac = p % q;
        if (frac < 0) {
          frac += q;
          whole -= 1;
        }
        if (whole != 0) {
          return mul({Expr(Number::pow_int(b, whole)), raw(Kind::Pow, {base, Expr(Number::rational(frac, q))})});
        }
      }
      return raw(Kind::Pow, {base, exponent});
    }
    if (base.kind() == Kind::Pow && e.is_integer()) {
      return pow(base.args()[0], base.args()[1] * exponent);
    }
    if (base.kind() == Kind::Mul) {
      if (e.is_integer()) {
        std::vector<Expr> fs;
        fs.reserve(base.args().size());
        for (const auto& f : base.args()) fs.push_back(pow(f, exponent));
        return mul(std::move(fs));
      }
      const auto& a0 = base.args().front();
      if (a0.is_number() && a0.number().is_positive() && !a0.number().is_one()) {
        auto [c, rest] = split_coefficient(base);
        return mul({pow(Expr(c), exponent), pow(rest, exponent)});
      }
    }
    if (base.kind() == Kind::Func && base.fn() == Fn::Abs && e.is_integer() && e.numerator() % 2 == 0) {
      return pow(base.args()[0], exponent);
    }
    return raw(Kind::Pow, {base, exponent});
  }
  if (base.is_one()) return Expr(1);
  return raw(Kind::Pow, {base, exponent});
}

Expr func(Fn f, std::vector<Expr> args) {
  const std::size_t want = f == Fn::Atan2 ? 2 : 1;
  if (args.size() != want) throw std::invalid_argument(std::string("wrong arity for ") + fn_name(f));
  bool all_num = true;
  bool any_float = false;
  for (const auto& a : args) {
    all_num = all_num && a.is_number();
    any_float = any_float || (a.is_number() && !a.number().is_exact());
  }
  if (all_num && any_float) {
    if (auto v = fold_numeric(f, args)) return Expr(Number::real(*v));
  }
  const Expr& x = args[0];
  switch (f) {
    case Fn::Sin:
      if (x.is_zero()) return Expr(0);
      if (is_negated(x)) return -func(Fn::Sin, {-x});
      break;
    case Fn::Tan:
      if (x.is_zero()) return Expr(0);
      if (is_negated(x)) return -func(Fn::Tan, {-x});
      break;
    case Fn::Cos:
      if (x.is_zero()) return Expr(1);
      if (is_negated(x)) return func(Fn::Cos, {-x});
      break;
    case Fn::Exp:
      if (x.is_zero()) return Expr(1);
      break;
    case Fn::Log:
      if (x.is_one()) return Expr(0);
      if (x.kind() == Kind::Func && x.fn() == Fn::Exp) return x.args()[0];
      break;
    case Fn::Abs:
      if (x.is_number()) return x.number().is_negative() ? Expr(-x.number()) : x;
      if (is_negated(x)) return func(Fn::Abs, {-x});
      if (x.kind() == Kind::Func && (x.fn() == Fn::Exp || x.fn() == Fn::Abs)) return x;
      if (x.kind() == Kind::Pow && x.args()[1].is_number() && x.args()[1].number().is_integer() &&
          x.args()[1].number().numerator() % 2 == 0) {
        return x;
      }
      break;
    case Fn::Atan2:
      if (args[0].is_zero() && args[1].is_number() && args[1].number().is_positive()) return Expr(0);
      break;
  }
  Node n;
  n.kind = Kind::Func;
  n.fn = f;
  n.args = std::move(args);
  return make_node(std::move(n));
}

Expr call(std::shared_ptr<const Kernel> k, std::vector<Expr> args) {
  if (static_cast<int>(args.size()) != k->arity()) {
    throw std::invalid_argument("kernel " + k->name() + " called with wrong arity");
  }
  Node n;
  n.kind = Kind::Kernel;
  n.kern = std::move(k);
  n.args = std::move(args);
  return make_node(std::move(n));
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return add({a, b});
}
Expr operator-(const Expr& a, const Expr& b) {
  if (b.is_zero()) return a;
  return add({a, -b});
}
Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_one()) return b;
  if (b.is_one()) return a;
  return mul({a, b});
}
Expr operator/(const Expr& a, const Expr& b) { return mul({a, pow(b, Expr(-1))}); }
Expr operator-(const Expr& a) {
  if (a.is_number()) return Expr(-a.number());
  return mul({Expr(-1), a});
}
Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }
Expr& operator-=(Expr& a, const Expr& b) { return a = a - b; }
Expr& operator*=(Expr& a, const Expr& b) { return a = a * b; }

Expr rational(long long n, long long d) { return Expr(Number::rational(n, d)); }
Expr sin(const Expr& x) { return func(Fn::Sin, {x}); }
Expr cos(const Expr& x) { return func(Fn::Cos, {x}); }
Expr tan(const Expr& x) { return func(Fn::Tan, {x}); }
Expr exp(const Expr& x) { return func(Fn::Exp, {x}); }
Expr log(const Expr& x) { return func(Fn::Log, {x}); }
Expr sqrt(const Expr& x) { return pow(x, rational(1, 2)); }
Expr abs(const Expr& x) { return func(Fn::Abs, {x}); }
Expr atan2(const Expr& y, const Expr& x) { return func(Fn::Atan2, {y, x}); }

namespace {

void collect_symbols(const Expr& e, std::set<Symbol>& out, std::unordered_set<const Node*>& seen) {
  if (!seen.insert(e.get()).second) return;
  if (e.kind() == Kind::Symbol) {
    out.insert(e.symbol());
    return;
  }
  for (const auto& a : e.args()) collect_symbols(a, out, seen);
}

}  // namespace

std::set<Symbol> free_symbols(const Expr& e) {
  std::set<Symbol> out;
  std::unordered_set<const Node*> seen;
  collect_symbols(e, out, seen);
  return out;
}

std::set<Symbol> free_symbols(std::span<const Expr> es) {
  std::set<Symbol> out;
  std::unordered_set<const Node*> seen;
  for (const auto& e : es) collect_symbols(e, out, seen);
  return out;
}

bool depends_on(const Expr& e, const Symbol& s) { return free_symbols(e).count(s) > 0; }

int max_jet_order(const Expr& e) {
  int m = -1;
  for (const auto& s : free_symbols(e)) {
    if (s.is_jet()) m = std::max(m, s.order);
  }
  return m;
}

std::size_t node_count(const Expr& e, std::size_t cap) {
  std::unordered_set<const Node*> seen;
  std::vector<const Expr*> stack{&e};
  while (!stack.empty()) {
    const Expr* x = stack.back();
    stack.pop_back();
    if (!seen.insert(x->get()).second) continue;
    if (seen.size() > cap) return seen.size();
    for (const auto& a : x->args()) stack.push_back(&a);
  }
  return seen.size();
}

std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << to_string(e); }

}  // namespace mechsym::sym
