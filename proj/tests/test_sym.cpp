#include <cmath>
#include <random>

#include "doctest.h"
#include "mechsym/sym/calculus.hpp"
#include "mechsym/sym/check.hpp"
#include "mechsym/sym/evaluate.hpp"
#include "mechsym/sym/parser.hpp"
#include "mechsym/sym/polynomial.hpp"
#include "mechsym/sym/printer.hpp"
#include "mechsym/sym/simplify.hpp"

using namespace mechsym::sym;

namespace {

Expr P(const std::string& s, const VariableSpace& sp) { return parse_or_throw(s, sp); }

double value(const Expr& e, const Assignment& a) {
  Evaluation r = eval(e, a);
  REQUIRE(r.ok());
  return r.value;
}

// Random smooth expression over the given symbols; every function used is
// defined on the whole sampling box.
Expr random_expr(const std::vector<Symbol>& vars, std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, 7);
  if (depth == 0) return random_polynomial(vars, 2, 3, rng);
  const Expr a = random_expr(vars, rng, depth - 1);
  const Expr b = random_expr(vars, rng, depth - 1);
  switch (pick(rng)) {
    case 0: return a + b;
    case 1: return a * b;
    case 2: return sin(a) * b;
    case 3: return cos(a) + b;
    case 4: return sqrt(Expr(1) + pow(a, Expr(2))) * b;
    case 5: return exp(a / (Expr(4) + pow(b, Expr(2))));
    case 6: return atan2(a, Expr(3) + pow(b, Expr(2)));
    default: return pow(a, Expr(2)) - b / (Expr(2) + pow(a, Expr(2)));
  }
}

std::vector<Symbol> state_vars(const VariableSpace& sp) { return sp.state_symbols(); }

}  // namespace

TEST_CASE("numbers stay exact through arithmetic") {
  const Number a = Number::rational(1, 3);
  const Number b = Number::rational(1, 6);
  CHECK((a + b) == Number::rational(1, 2));
  CHECK((a * b) == Number::rational(1, 18));
  CHECK((a / b) == Number(2));
  CHECK(Number::pow_int(Number::rational(2, 3), -2) == Number::rational(9, 4));
  Number r;
  CHECK(Number::rational(9, 4).exact_root(2, r));
  CHECK(r == Number::rational(3, 2));
  CHECK_FALSE(Number(2).exact_root(2, r));
  const Number big(4'000'000'000'000'000'000LL);
  CHECK_FALSE((big * big).is_exact());
  CHECK((big * big).to_double() == doctest::Approx(1.6e37));
}

TEST_CASE("parse maps the grammar onto expression trees") {
  VariableSpace sp(1);
  const Expr e = P("qd1^2/2", sp);
  CHECK(e == pow(sp.QD(0), Expr(2)) * rational(1, 2));
  const Expr f = P("sin(q1)*t", sp);
  CHECK(f.kind() == Kind::Mul);
  CHECK(f == sin(sp.Q(0)) * sp.T());
  CHECK(P("0.1 + 0.2", sp) == rational(3, 10));
  CHECK(P("1.5e-3", sp) == rational(3, 2000));
  CHECK(P("-q1^2", sp) == -pow(sp.Q(0), Expr(2)));
  CHECK(P("2^3^2", sp) == Expr(512));
  CHECK(P("d(q1)", sp) == sp.QD(0));
  CHECK(P("d(qd1)", sp) == sp.QDD(0));
  CHECK(P("q1 ^ -1", sp) == pow(sp.Q(0), Expr(-1)));
}

TEST_CASE("parse reports unknown identifiers and syntax errors with spans") {
  VariableSpace sp(1, {}, {"m"});
  ParseResult r = parse("q2", sp);
  REQUIRE_FALSE(r.ok());
  REQUIRE(r.diagnostics.size() == 1);
  CHECK(r.diagnostics[0].message.find("q2") != std::string::npos);
  CHECK(r.diagnostics[0].begin == 0);
  CHECK(r.diagnostics[0].end == 2);

  ParseResult s = parse("m*qd1 + ", sp);
  REQUIRE_FALSE(s.ok());
  CHECK(s.diagnostics.back().begin <= 8);
  CHECK(s.diagnostics.back().end <= 8);

  ParseResult u = parse("foo + bar(q1)", sp);
  REQUIRE_FALSE(u.ok());
  CHECK(u.diagnostics.size() == 2);
  CHECK_FALSE(parse("1/0", sp).ok());
  CHECK_FALSE(parse("sin(q1, q1)", sp).ok());
  CHECK_FALSE(parse("q1 $ 2", sp).ok());
  CHECK_THROWS_AS(parse_or_throw("qdd2", sp), ParseError);
}

TEST_CASE("variable space rejects clashing names") {
  VariableSpace sp(2);
  CHECK_THROWS(sp.add_parameter("q1"));
  CHECK_THROWS(sp.add_parameter("qd7"));
  CHECK_THROWS(sp.add_parameter("sin"));
  CHECK_THROWS(sp.add_parameter("t"));
  sp.add_parameter("omega");
  CHECK_THROWS(sp.add_parameter("omega"));
  CHECK(sp.resolve("omega").has_value());
  CHECK_FALSE(sp.resolve("q3").has_value());
  CHECK_THROWS(sp.q(2));
}

TEST_CASE("partial derivatives") {
  VariableSpace sp(1);
  CHECK(diff(P("qd1^2/2", sp), sp.qd(0)) == sp.QD(0));
  CHECK(diff(P("sin(q1)*t", sp), sp.t()) == sin(sp.Q(0)));
  CHECK(diff(P("qd1^2/2", sp), sp.q(0)).is_zero());
  CHECK(diff(P("atan2(q1, qd1)", sp), sp.q(0)) ==
        simplify(sp.QD(0) / (pow(sp.Q(0), Expr(2)) + pow(sp.QD(0), Expr(2)))));
}

TEST_CASE("total and on-solution derivatives") {
  VariableSpace sp(1);
  CHECK(total_derivative(sp.Q(0), sp) == sp.QD(0));
  CHECK(total_derivative(P("qd1^2/2", sp), sp) == sp.QD(0) * sp.QDD(0));
  CHECK(total_derivative(P("t*q1", sp), sp) == P("q1 + t*qd1", sp));
  CHECK_THROWS_AS(total_derivative(sp.QDD(0), sp), JetOrderError);
  CHECK(jet_total_derivative(sp.QDD(0), sp) == Expr(sp.jet(3, 0)));

  CHECK(solution_derivative(sp.QD(0), sp, {Expr(0)}).is_zero());
  CHECK(solution_derivative(P("qd1^2/2 + q1^2/2", sp), sp, {-sp.Q(0)}).is_zero());
  CHECK(solution_derivative(sp.Q(0), sp, {P("sin(q1)", sp)}) == sp.QD(0));
}

TEST_CASE("evaluation reports domain errors instead of NaN") {
  VariableSpace sp(1);
  CHECK(value(P("qd1^2/2", sp), {{"qd1", 2.0}}) == 2.0);
  Evaluation r = eval(P("sqrt(q1)", sp), {{"q1", -1.0}});
  CHECK(r.code == EvalCode::DomainError);
  CHECK(value(P("atan2(q1, qd1)", sp), {{"q1", 0.0}, {"qd1", 1.0}}) == 0.0);
  CHECK(eval(P("log(q1)", sp), {{"q1", 0.0}}).code == EvalCode::DomainError);
  CHECK(eval(P("1/q1", sp), {{"q1", 0.0}}).code == EvalCode::DomainError);
  CHECK(eval(P("atan2(q1, qd1)", sp), {{"q1", 0.0}, {"qd1", 0.0}}).code == EvalCode::DomainError);
  CHECK(eval(P("q1 + qd1", sp), {{"q1", 0.0}}).code == EvalCode::MissingSymbol);
  CHECK(value(P("(q1^2)^(1/2)", sp), {{"q1", -3.0}}) == doctest::Approx(3.0));
}

TEST_CASE("equals_numeric verdicts") {
  VariableSpace sp(1);
  CHECK(equals_numeric(P("sin(q1)^2 + cos(q1)^2", sp), Expr(1)).verdict == Verdict::True);
  CheckResult r = equals_numeric(sp.QD(0), sp.Q(0));
  CHECK(r.verdict == Verdict::False);
  CHECK(r.witness.count("q1") == 1);
  CHECK(r.witness.count("qd1") == 1);
  CHECK(r.witness.at("q1") != r.witness.at("qd1"));
  CheckOptions neg;
  neg.box = {-2.0, -1.0};
  CHECK(equals_numeric(P("log(q1)", sp), P("log(q1)", sp), neg).verdict == Verdict::Inconclusive);
  CheckOptions narrow;
  narrow.boxes["q1"] = {0.5, 1.5};
  CHECK(equals_numeric(P("log(q1)", sp), P("log(q1)", sp), narrow).ok());
}

TEST_CASE("simplification normal form") {
  VariableSpace sp(2);
  const Expr x = sp.Q(0);
  const Expr y = sp.Q(1);
  CHECK(simplify(pow(x + y, Expr(2)) - pow(x, Expr(2)) - pow(y, Expr(2))) == Expr(2) * x * y);
  CHECK(simplify(pow(sin(x), Expr(2)) + pow(cos(x), Expr(2))) == Expr(1));
  CHECK(simplify(sqrt(x + y) * sqrt(x + y)) == x + y);
  CHECK(simplify(x / x) == Expr(1));
  CHECK(simplify(pow(sqrt(x), Expr(2))) == x);
  CHECK(simplify(sin(-x)) == -sin(x));
  CHECK(simplify(cos(-x)) == cos(x));
  CHECK(pow(Expr(8), rational(1, 3)) == Expr(2));
  CHECK(pow(Expr(2), rational(3, 2)) == Expr(2) * sqrt(Expr(2)));

  std::mt19937_64 rng(7);
  for (int i = 0; i < 40; ++i) {
    const Expr e = random_expr(state_vars(sp), rng, 2);
    const Expr s = simplify(e);
    CHECK(simplify(s) == s);
    CHECK(equals_numeric(e, s).ok());
  }
}

TEST_CASE("printing then parsing preserves value") {
  VariableSpace sp(2, {}, {"k"});
  std::vector<Symbol> vars = state_vars(sp);
  vars.push_back(Symbol::param("k"));
  std::mt19937_64 rng(11);
  for (int i = 0; i < 60; ++i) {
    const Expr e = random_expr(vars, rng, 2);
    const std::string text = to_string(e);
    ParseResult r = parse(text, sp);
    REQUIRE_MESSAGE(r.ok(), text);
    CHECK_MESSAGE(equals_numeric(e, *r.expr).ok(), text);
  }
  CHECK(to_string(P("-q1 + 3/2*qd2 - 2", sp)) == "-q1 + 3*qd2/2 - 2");
  CHECK(to_string(P("1/sqrt(q1^2 + q2^2)", sp)) == "1/sqrt(q1^2 + q2^2)");
  CHECK(to_string(P("0.25*t", sp)) == "t/4");
}

TEST_CASE("derivative properties on generated expressions") {
  VariableSpace sp(2);
  const std::vector<Symbol> vars = state_vars(sp);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> coef(-5, 5);
  for (int i = 0; i < 15; ++i) {
    const Expr e1 = random_expr(vars, rng, 2);
    const Expr e2 = random_expr(vars, rng, 1);
    const Expr a(coef(rng));
    const Expr b(coef(rng));
    for (const auto& v : vars) {
      CHECK(equals_numeric(diff(a * e1 + b * e2, v), a * diff(e1, v) + b * diff(e2, v)).ok());
    }
    for (int j = 0; j < sp.dof(); ++j) {
      // [D_t, d/dqd^j] F = -dF/dq^j
      const Expr lhs = total_derivative(diff(e1, sp.qd(j)), sp) - diff(total_derivative(e1, sp), sp.qd(j));
      CHECK(equals_numeric(lhs, -diff(e1, sp.q(j))).ok());
    }
    for (std::size_t x = 0; x < vars.size(); ++x) {
      for (std::size_t y = x + 1; y < vars.size(); ++y) {
        CHECK(equals_numeric(diff(diff(e1, vars[x]), vars[y]), diff(diff(e1, vars[y]), vars[x])).ok());
      }
    }
  }
}

TEST_CASE("derivatives agree with central differences") {
  VariableSpace sp(1);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    const Expr e = random_expr(state_vars(sp), rng, 2);
    const Expr d = diff(e, sp.q(0));
    Assignment at{{"t", 0.3}, {"q1", -0.7}, {"qd1", 0.4}};
    const double h = 1e-5;
    Assignment up = at;
    Assignment dn = at;
    up["q1"] += h;
    dn["q1"] -= h;
    const double fd = (value(e, up) - value(e, dn)) / (2 * h);
    CHECK(value(d, at) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("polynomial coefficient extraction") {
  VariableSpace sp(1, {}, {"a"});
  auto c = polynomial_coefficients(P("a*q1^2 + 3*q1 - t", sp), sp.q(0));
  REQUIRE(c.has_value());
  REQUIRE(c->size() == 3);
  CHECK((*c)[0] == -sp.T());
  CHECK((*c)[1] == Expr(3));
  CHECK((*c)[2] == Expr(Symbol::param("a")));
  CHECK_FALSE(polynomial_coefficients(P("sin(q1)", sp), sp.q(0)).has_value());
  CHECK(integrate_polynomial(*c, sp.q(0)) == simplify(P("a*q1^3/3 + 3*q1^2/2 - t*q1", sp)));
}

TEST_CASE("compiled programs share subexpressions and support long double") {
  VariableSpace sp(1);
  const Expr e = P("sin(q1)^2 + sin(q1)", sp);
  Program prog({e, sp.Q(0)}, {sp.q(0)});
  std::vector<long double> in{0.5L};
  std::vector<long double> out(2);
  REQUIRE(prog.run(in, out));
  CHECK(static_cast<double>(out[0]) == doctest::Approx(std::sin(0.5) * std::sin(0.5) + std::sin(0.5)));
  CHECK_THROWS_AS(Program({e}, {}), MissingSymbolError);
}
