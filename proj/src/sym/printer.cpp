#include "mechsym/sym/printer.hpp"

#include "mechsym/sym/number.hpp"

namespace mechsym::sym {
namespace {

constexpr int kAdd = 1;
constexpr int kMul = 2;
constexpr int kPow = 4;
constexpr int kAtom = 5;

struct Rendered {
  std::string text;
  int prec;
};

Rendered render(const Expr& e);

std::string wrap(const Expr& e, int min_prec) {
  Rendered r = render(e);
  if (r.prec < min_prec) return "(" + r.text + ")";
  return r.text;
}

bool negative_coefficient(const Expr& e) {
  if (e.is_number()) return e.number().is_negative();
  if (e.kind() == Kind::Mul && e.args().front().is_number()) return e.args().front().number().is_negative();
  return false;
}

Rendered render_number(const Number& n) {
  std::string s = n.to_string();
  if (n.is_negative()) return {s, kMul};
  if (n.is_exact() && !n.is_integer()) return {s, kMul};
  if (!n.is_exact() && s.find_first_of("eE") != std::string::npos) return {s, kMul};
  return {s, kAtom};
}

// Splits x^e into (base, |e|) when e is a negative number.
bool denominator_factor(const Expr& f, Expr& out) {
  if (f.kind() != Kind::Pow) return false;
  const Expr& ex = f.args()[1];
  if (!ex.is_number() || !ex.number().is_negative()) return false;
  out = pow(f.args()[0], Expr(-ex.number()));
  return true;
}

Rendered render_mul(const Expr& e) {
  Number c(1);
  std::vector<std::string> num;
  std::vector<std::string> den;
  std::size_t den_items = 0;
  for (const auto& f : e.args()) {
    if (f.is_number()) {
      c = f.number();
      continue;
    }
    Expr d;
    if (denominator_factor(f, d)) {
      den.push_back(wrap(d, kPow));
      ++den_items;
    } else {
      num.push_back(wrap(f, kMul + 1));
    }
  }
  std::string sign;
  if (c.is_negative()) {
    sign = "-";
    c = -c;
  }
  if (c.is_exact()) {
    if (c.numerator() != 1) num.insert(num.begin(), std::to_string(c.numerator()));
    if (c.denominator() != 1) {
      den.insert(den.begin(), std::to_string(c.denominator()));
      ++den_items;
    }
  } else if (!c.is_one()) {
    num.insert(num.begin(), c.to_string());
  }
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += "*";
      s += v[i];
    }
    return s;
  };
  std::string text = num.empty() ? "1" : join(num);
  if (!den.empty()) {
    text += "/";
    text += den_items > 1 ? "(" + join(den) + ")" : join(den);
  }
  return {sign + text, kMul};
}

Rendered render_pow(const Expr& e) {
  const Expr& b = e.args()[0];
  const Expr& x = e.args()[1];
  if (x.is_number() && x.number().is_exact()) {
    const Number& n = x.number();
    if (n.numerator() == 1 && n.denominator() == 2) return {"sqrt(" + render(b).text + ")", kAtom};
    if (n.is_negative()) {
      Expr d = pow(b, Expr(-n));
      return {"1/" + wrap(d, kPow), kMul};
    }
  }
  std::string base = wrap(b, kAtom);
  std::string ex = wrap(x, kAtom);
  return {base + "^" + ex, kPow};
}

Rendered render(const Expr& e) {
  switch (e.kind()) {
    case Kind::Number: return render_number(e.number());
    case Kind::Symbol: return {e.symbol().name, kAtom};
    case Kind::Func: {
      std::string s = fn_name(e.fn());
      s += "(";
      for (std::size_t i = 0; i < e.args().size(); ++i) {
        if (i) s += ", ";
        s += render(e.args()[i]).text;
      }
      return {s + ")", kAtom};
    }
    case Kind::Kernel: {
      std::string s = e.kernel()->name() + "@" + std::to_string(e.kernel()->serial()) + "(";
      for (std::size_t i = 0; i < e.args().size(); ++i) {
        if (i) s += ", ";
        s += render(e.args()[i]).text;
      }
      return {s + ")", kAtom};
    }
    case Kind::Pow: return render_pow(e);
    case Kind::Mul: return render_mul(e);
    case Kind::Add: {
      std::vector<Expr> terms;
      Expr constant;
      bool has_constant = false;
      for (const auto& t : e.args()) {
        if (t.is_number()) {
          constant = t;
          has_constant = true;
        } else {
          terms.push_back(t);
        }
      }
      if (has_constant) terms.push_back(constant);
      std::string s;
      for (std::size_t i = 0; i < terms.size(); ++i) {
        const Expr& t = terms[i];
        if (negative_coefficient(t)) {
          s += i ? " - " : "-";
          s += wrap(-t, kMul);
        } else {
          if (i) s += " + ";
          s += wrap(t, kMul);
        }
      }
      return {s, kAdd};
    }
  }
  return {"?", kAtom};
}

}  // namespace

std::string to_string(const Expr& e) { return render(e).text; }

}  // namespace mechsym::sym
