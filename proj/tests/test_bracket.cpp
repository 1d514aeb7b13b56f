#include <random>

#include "doctest.h"
#include "mechsym/bracket.hpp"
#include "mechsym/sym/calculus.hpp"
#include "mechsym/sym/polynomial.hpp"
#include "mechsym/sym/simplify.hpp"
#include "systems.hpp"

using namespace mechsym;
using sym::check_zero;
using sym::equals_numeric;
using testsys::ex;

namespace {

bool same(const Expr& a, const Expr& b) { return equals_numeric(a, b).ok(); }

ConservedQuantity cq(const LagrangianSystem& sys, const std::string& name, const std::string& C) {
  return is_conserved(sys, ex(sys, C), {}, name);
}

// A system with velocity-dependent g and a non-zero mixed Hessian.
LagrangianSystem coupled() {
  return testsys::make(2, "(1 + q2^2)*qd1^2/2 + qd1*qd2/4 + qd2^2/2 + q1*qd2 - q1^2*q2");
}

}  // namespace

TEST_CASE("pbracket examples") {
  const auto fp = testsys::free1d();
  CHECK(pbracket(fp, ex(fp, "q1"), ex(fp, "qd1")).is_one());
  const auto osc = testsys::osc1d();
  const Expr F = ex(osc, "sin(q1)*qd1 + t");
  CHECK(pbracket(osc, F, F).is_zero());
  const Expr A = ex(osc, "qd1*cos(t) + q1*sin(t)");
  const Expr B = ex(osc, "q1*cos(t) - qd1*sin(t)");
  CHECK(pbracket(osc, B, A).is_one());
}

TEST_CASE("symplectic matrix is skew") {
  for (const auto& sys : {testsys::osc2d(), coupled(), testsys::kepler()}) {
    const auto J = symplectic_matrix(sys);
    for (std::size_t i = 0; i < J.size(); ++i)
      for (std::size_t j = 0; j < J.size(); ++j) CHECK(check_zero({J[i][j] + J[j][i]}).ok());
  }
}

TEST_CASE("conservation_via_bracket agrees with is_conserved") {
  const auto osc = testsys::osc1d();
  const auto fp = testsys::free1d();
  CHECK(conservation_via_bracket(osc, ex(osc, "qd1^2/2 + q1^2/2")).ok());
  CHECK(conservation_via_bracket(fp, ex(fp, "q1 - t*qd1")).ok());
  CHECK_FALSE(conservation_via_bracket(osc, ex(osc, "q1")).ok());
  const auto c = coupled();
  for (const char* C : {"q1", "qd1", "(1 + q2^2)*qd1^2/2 + qd1*qd2/4 + qd2^2/2 + q1^2*q2"}) {
    CHECK(conservation_via_bracket(c, ex(c, C)).ok() ==
          (is_conserved(c, ex(c, C)).status == ConservationStatus::SymbolicVerified));
  }
}

TEST_CASE("conservation_via_bracket when the momenta depend on time") {
  // free particle plus the total derivative of t*q1^2: p1 = qd1 + 2 t q1
  const auto gs = testsys::make(2, "(qd1^2 + qd2^2)/2 + q1^2 + 2*t*q1*qd1");
  for (const char* C : {"qd1", "qd2", "q1 - t*qd1", "q1*qd2 - q2*qd1", "q1", "qd1 + 2*t*q1"}) {
    CHECK(conservation_via_bracket(gs, ex(gs, C)).ok() ==
          (is_conserved(gs, ex(gs, C)).status == ConservationStatus::SymbolicVerified));
  }
  CHECK(conservation_via_bracket(gs, ex(gs, "qd1")).ok());
  CHECK_FALSE(conservation_via_bracket(gs, ex(gs, "qd1 + 2*t*q1")).ok());
}

TEST_CASE("verify_symmetry_action examples") {
  const auto fp = testsys::free1d();
  auto a = verify_symmetry_action(fp, ex(fp, "qd1"), ex(fp, "q1"));
  CHECK(a.ok);
  CHECK(a.bracket.is_one());
  const auto osc = testsys::osc1d();
  a = verify_symmetry_action(osc, ex(osc, "qd1^2/2 + q1^2/2"), ex(osc, "q1"));
  CHECK(a.ok);
  CHECK(same(a.bracket, ex(osc, "qd1")));
  std::mt19937_64 rng(2);
  const auto vars = osc.space().state_symbols();
  for (int k = 0; k < 10; ++k) {
    CHECK(verify_symmetry_action(osc, ex(osc, "qd1^2/2 + q1^2/2"), sym::random_polynomial(vars, 3, 5, rng)).ok);
  }
}

TEST_CASE("verify_pair_action examples") {
  const auto fp = testsys::free1d();
  auto p = verify_pair_action(fp, ex(fp, "qd1"), ex(fp, "q1 - t*qd1"));
  CHECK(p.ok);
  CHECK(p.bracket.is_one());
  p = verify_pair_action(fp, ex(fp, "qd1"), ex(fp, "qd1"));
  CHECK(p.ok);
  CHECK(p.bracket.is_zero());
  const auto osc = testsys::osc1d();
  p = verify_pair_action(osc, ex(osc, "qd1^2/2 + q1^2/2"), ex(osc, "(qd1^2/2 + q1^2/2)^3"));
  CHECK(p.ok);
  CHECK(p.bracket.is_zero());
}

TEST_CASE("verify_commutator_homomorphism examples") {
  const auto fp = testsys::free1d();
  auto c = verify_commutator_homomorphism(fp, ex(fp, "qd1"), ex(fp, "qd1^2/2"));
  CHECK(c.ok);
  CHECK(check_zero(c.lhs).ok());
  c = verify_commutator_homomorphism(fp, ex(fp, "qd1"), ex(fp, "q1 - t*qd1"));
  CHECK(c.ok);
  CHECK(check_zero(c.lhs).ok());
  const auto osc2 = testsys::osc2d();
  c = verify_commutator_homomorphism(osc2, ex(osc2, "qd1*qd2 + q1*q2"), ex(osc2, "q1*qd2 - q2*qd1"));
  CHECK(c.ok);
  CHECK_FALSE(check_zero(c.lhs).ok());
  // the sign convention is pinned down by a non-abelian pair
  const auto fp2 = testsys::free2d();
  c = verify_commutator_homomorphism(fp2, ex(fp2, "qd1"), ex(fp2, "q1*qd2 - q2*qd1"));
  CHECK(c.ok);
  CHECK_FALSE(check_zero(c.rhs).ok());
}

TEST_CASE("bracket_table closure tags") {
  const auto osc = testsys::osc1d();
  auto tab = bracket_table(osc, {cq(osc, "E", "qd1^2/2 + q1^2/2")});
  CHECK(tab.entries[0][0].is_zero());
  CHECK(tab.closure[0][0] == Closure::Zero);
  const auto fp = testsys::free1d();
  tab = bracket_table(fp, {cq(fp, "p", "qd1"), cq(fp, "G", "q1 - t*qd1")});
  CHECK(tab.closure[0][1] == Closure::Constant);
  CHECK(tab.coefficients[0][1][0] == doctest::Approx(-1.0));
  CHECK(tab.entries[1][0].is_one());
  const auto fp2 = testsys::free2d();
  tab = bracket_table(fp2, {cq(fp2, "p1", "qd1"), cq(fp2, "p2", "qd2"), cq(fp2, "Lz", "q1*qd2 - q2*qd1")});
  CHECK(tab.closure[0][1] == Closure::Zero);
  CHECK(tab.closure[0][2] == Closure::Linear);
  CHECK(tab.closure[1][2] == Closure::Linear);
  CHECK(same(tab.entries[0][2], ex(fp2, "-qd2")));
  CHECK(tab.coefficients[0][2][2] == doctest::Approx(-1.0));
  // a quadratic bracket is not linear in the family
  tab = bracket_table(fp2, {cq(fp2, "p1", "qd1"), cq(fp2, "G2", "(q1 - t*qd1)^2")});
  CHECK(tab.closure[0][1] == Closure::Nonlinear);
  tab = bracket_table(fp2, {cq(fp2, "p1", "qd1"), cq(fp2, "G", "q1 - t*qd1"), cq(fp2, "G2", "(q1 - t*qd1)^2")});
  CHECK(tab.closure[0][1] == Closure::Constant);
  CHECK(tab.closure[0][2] == Closure::Linear);
  CHECK(tab.coefficients[0][2][2] == doctest::Approx(-2.0));
  CHECK(tab.closure[1][2] == Closure::Zero);
  tab = bracket_table(fp2, {cq(fp2, "p2", "qd2"), cq(fp2, "G", "(q1 - t*qd1)*(q2 - t*qd2)^2")});
  CHECK(tab.closure[0][1] == Closure::Nonlinear);
}

TEST_CASE("independence over the solution space") {
  const auto osc = testsys::osc1d();
  const Expr E = ex(osc, "qd1^2/2 + q1^2/2");
  auto r = independence_over_solution_space(osc, E, E * E);
  CHECK(r.verdict == Dependence::Dependent);
  CHECK(same(r.lambda, 2 * E));
  r = independence_over_solution_space(osc, E, E + 1);
  CHECK(r.verdict == Dependence::Dependent);
  const auto fp = testsys::free1d();
  r = independence_over_solution_space(fp, ex(fp, "qd1"), ex(fp, "q1 - t*qd1"));
  CHECK(r.verdict == Dependence::Independent);
  const auto fp2 = testsys::free2d();
  r = independence_over_solution_space(fp2, ex(fp2, "qd1"), ex(fp2, "qd2"));
  CHECK(r.verdict == Dependence::Independent);
}

TEST_CASE("bracket axioms on random polynomials") {
  std::mt19937_64 rng(9);
  for (const auto& sys : {testsys::free2d(), testsys::osc2d(), coupled()}) {
    const auto vars = sys.space().state_symbols();
    for (int k = 0; k < 5; ++k) {
      const Expr F = sym::random_polynomial(vars, 2, 4, rng);
      const Expr G = sym::random_polynomial(vars, 2, 4, rng);
      const Expr H = sym::random_polynomial(vars, 2, 4, rng);
      CHECK(check_zero({pbracket(sys, F, G) + pbracket(sys, G, F)}).ok());
      CHECK(same(pbracket(sys, F, G * H), G * pbracket(sys, F, H) + pbracket(sys, F, G) * H));
      CHECK(same(pbracket(sys, F, 3 * G - H), 3 * pbracket(sys, F, G) - pbracket(sys, F, H)));
      const Expr jac = pbracket(sys, pbracket(sys, F, G), H) + pbracket(sys, pbracket(sys, G, H), F) +
                       pbracket(sys, pbracket(sys, H, F), G);
      CHECK(equals_numeric(jac, Expr(0), {.tol = 1e-8}).ok());
    }
  }
}

TEST_CASE("canonical pairs with the momenta") {
  for (const auto& sys : {coupled(), testsys::kepler(), testsys::make(2, "exp(q1)*qd1^2/2 + qd2^2/2 + q2*qd1")}) {
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const auto J = static_cast<std::size_t>(j);
        CHECK(same(pbracket(sys, sys.space().Q(i), sys.momenta()[J]), Expr(i == j ? 1 : 0)));
        CHECK(check_zero({pbracket(sys, sys.momenta()[static_cast<std::size_t>(i)], sys.momenta()[J])}).ok());
        CHECK(check_zero({pbracket(sys, sys.space().Q(i), sys.space().Q(j))}).ok());
      }
    }
  }
}
