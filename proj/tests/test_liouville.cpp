#include <cmath>

#include "doctest.h"
#include "mechsym/bracket.hpp"
#include "mechsym/liouville.hpp"
#include "mechsym/sym/calculus.hpp"
#include "systems.hpp"

using namespace mechsym;
using sym::equals_numeric;
using testsys::ex;

namespace {

std::vector<ConservedQuantity> members(const LagrangianSystem& sys, const std::vector<std::string>& Cs) {
  std::vector<ConservedQuantity> out;
  for (std::size_t i = 0; i < Cs.size(); ++i) out.push_back(is_conserved(sys, ex(sys, Cs[i]), {}, "C" + std::to_string(i + 1)));
  return out;
}

struct Pipeline {
  CommutingFamily family;
  VelocityInversion inv;
  GeneratingFunction gf;
  Angles theta;
};

Pipeline run(const LagrangianSystem& sys, const std::vector<std::string>& Cs, const State& seed,
             InversionOptions io = {}) {
  Pipeline p;
  p.family = verify_family(sys, members(sys, Cs));
  REQUIRE(p.family.valid());
  p.inv = invert_velocities(sys, p.family, seed, io);
  p.gf = generating_function(sys, p.family, p.inv);
  p.theta = angles(sys, p.family, p.inv, p.gf);
  return p;
}

// Boxes for checks in (t, q, C): C well inside the allowed range.
sym::CheckOptions constant_box(double qlo, double qhi, double clo, double chi) {
  sym::CheckOptions o;
  o.boxes["q1"] = {qlo, qhi};
  o.boxes["q2"] = {qlo, qhi};
  o.boxes["$C1"] = {clo, chi};
  o.boxes["$C2"] = {clo, chi};
  return o;
}

Expr C1() { return Expr(Symbol::param("$C1")); }

const State kSeed1{0, {0}, {1}};

}  // namespace

TEST_CASE("verify_family examples") {
  const auto osc = testsys::osc1d();
  auto fam = verify_family(osc, members(osc, {"qd1^2/2 + q1^2/2"}));
  CHECK(fam.valid());
  const auto osc2 = testsys::osc2d();
  fam = verify_family(osc2, members(osc2, {"(qd1^2 + q1^2)/2", "(qd2^2 + q2^2)/2"}));
  CHECK(fam.valid());
  CHECK(fam.jacobian_samples > 0);
  const auto fp2 = testsys::free2d();
  fam = verify_family(fp2, members(fp2, {"qd1", "q1"}));
  CHECK_FALSE(fam.valid());
  CHECK_FALSE(fam.commuting);
  CHECK(fam.pair_i == 0);
  CHECK(fam.pair_j == 1);
  // commuting but dependent
  fam = verify_family(fp2, members(fp2, {"qd1", "2*qd1"}));
  CHECK(fam.commuting);
  CHECK_FALSE(fam.independent);
  CHECK_FALSE(fam.valid());
  // wrong size
  fam = verify_family(fp2, members(fp2, {"qd1"}));
  CHECK_FALSE(fam.valid());
}

TEST_CASE("invert_velocities examples") {
  const auto osc = testsys::osc1d();
  const auto fam = verify_family(osc, members(osc, {"qd1^2/2 + q1^2/2"}));
  const auto o = constant_box(-1, 1, 0.6, 2);
  auto inv = invert_velocities(osc, fam, kSeed1);
  CHECK(inv.symbolic);
  CHECK(inv.branch[0] == 1);
  CHECK(equals_numeric(inv.qd[0], sym::sqrt(2 * C1() - osc.space().Q(0) * osc.space().Q(0)), o).ok());
  inv = invert_velocities(osc, fam, State{0, {0.2}, {-0.5}});
  CHECK(inv.branch[0] == -1);
  CHECK(equals_numeric(inv.qd[0], -sym::sqrt(2 * C1() - osc.space().Q(0) * osc.space().Q(0)), o).ok());
  CHECK_THROWS_AS(invert_velocities(osc, fam, std::nullopt), ChartError);
  CHECK_THROWS_AS(invert_velocities(osc, fam, State{0, {1}, {0}}), ChartError);  // on the branch point

  const auto fp = testsys::free1d();
  const auto ffam = verify_family(fp, members(fp, {"qd1"}));
  inv = invert_velocities(fp, ffam, std::nullopt);
  CHECK(inv.qd[0] == C1());

  const auto osc2 = testsys::osc2d();
  const auto fam2 = verify_family(osc2, members(osc2, {"(qd1^2 + q1^2)/2", "(qd2^2 + q2^2)/2"}));
  inv = invert_velocities(osc2, fam2, State{0, {0.1, 0.2}, {0.9, -0.7}});
  CHECK(inv.branch == std::vector<int>{1, -1});
  CHECK(equals_numeric(inv.qd[1], -sym::sqrt(2 * Expr(Symbol::param("$C2")) - osc2.space().Q(1) * osc2.space().Q(1)), o)
            .ok());
}

TEST_CASE("Newton inversion agrees with the closed form") {
  const auto sys = testsys::make(2, "(qd1^2 + qd2^2 - q1^2 - q2^2)/2");
  const auto fam = verify_family(sys, members(sys, {"(qd1^2 + qd2^2 + q1^2 + q2^2)/2", "(qd2^2 + q2^2)/2"}));
  const State seed{0, {0.1, 0.2}, {0.9, 0.7}};
  const auto closed = invert_velocities(sys, fam, seed);
  InversionOptions io;
  io.force_numeric = true;
  const auto newton = invert_velocities(sys, fam, seed, io);
  CHECK_FALSE(newton.symbolic);
  sym::CheckOptions o;
  o.boxes["q1"] = o.boxes["q2"] = {-0.2, 0.3};
  o.boxes["$C1"] = {1.5, 1.8};
  o.boxes["$C2"] = {0.4, 0.6};
  o.trials = 16;
  for (int k = 0; k < 2; ++k) {
    CHECK(equals_numeric(closed.qd[static_cast<std::size_t>(k)], newton.qd[static_cast<std::size_t>(k)], o).ok());
    // implicit derivatives match the exact ones
    for (const auto& v : {Symbol::param("$C1"), Symbol::param("$C2"), sys.space().q(0)}) {
      CHECK(equals_numeric(sym::diff(closed.qd[static_cast<std::size_t>(k)], v),
                           sym::diff(newton.qd[static_cast<std::size_t>(k)], v), o)
                .ok());
    }
  }
}

TEST_CASE("generating_function examples") {
  const auto osc = testsys::osc1d();
  auto p = run(osc, {"qd1^2/2 + q1^2/2"}, kSeed1);
  CHECK_FALSE(p.gf.used_quadrature);
  const Expr q = osc.space().Q(0);
  const Expr r = sym::sqrt(2 * C1() - q * q);
  // (q sqrt(2E - q^2) + 2E arcsin(q / sqrt(2E))) / 2
  const Expr arcsin = sym::atan2(q / sym::sqrt(2 * C1()), sym::sqrt(1 - q * q / (2 * C1())));
  const auto o = constant_box(-0.9, 0.9, 0.5, 2);
  CHECK(equals_numeric(p.gf.S, (q * r + 2 * C1() * arcsin) / 2, o).ok());
  CHECK(equals_numeric(p.theta.theta[0], arcsin, o).ok());

  const auto fp = testsys::free1d();
  p = run(fp, {"qd1"}, kSeed1);
  CHECK(equals_numeric(p.gf.S, C1() * fp.space().Q(0)).ok());

  const auto osc2 = testsys::osc2d();
  p = run(osc2, {"(qd1^2 + q1^2)/2", "(qd2^2 + q2^2)/2"}, State{0, {0.1, 0.2}, {0.9, 0.7}});
  const Expr C2(Symbol::param("$C2"));
  const Expr q2 = osc2.space().Q(1);
  const Expr piece1 = (q * r + 2 * C1() * arcsin) / 2;
  const Expr r2 = sym::sqrt(2 * C2 - q2 * q2);
  const Expr piece2 = (q2 * r2 + 2 * C2 * sym::atan2(q2 / sym::sqrt(2 * C2), sym::sqrt(1 - q2 * q2 / (2 * C2)))) / 2;
  CHECK(equals_numeric(p.gf.S, piece1 + piece2, o).ok());
  // separable angles depend on their own pair only
  CHECK_FALSE(sym::depends_on(p.theta.theta[0], osc2.space().q(1)));
  CHECK_FALSE(sym::depends_on(p.theta.theta[1], osc2.space().q(0)));

  // a base outside the chart
  CHECK_THROWS_AS(generating_function(osc, run(osc, {"qd1^2/2 + q1^2/2"}, State{0, {0}, {0.5}}).family,
                                      invert_velocities(osc, verify_family(osc, members(osc, {"qd1^2/2 + q1^2/2"})),
                                                        State{0, {0}, {0.5}}),
                                      ChartBase{0, {3.0}}),
                  ChartError);
}

TEST_CASE("dS/dq reproduces the momenta and dS/dC the angles") {
  struct Case {
    LagrangianSystem sys;
    std::vector<std::string> Cs;
    State seed;
    bool quadrature;
  };
  const std::vector<Case> cases = {
      {testsys::osc1d(), {"qd1^2/2 + q1^2/2"}, kSeed1, false},
      {testsys::make(1, "qd1^2/2 + q1^2/2"), {"qd1^2/2 - q1^2/2"}, kSeed1, false},  // log form
      {testsys::make(1, "qd1^2/2 - q1"), {"qd1^2/2 + q1"}, kSeed1, false},          // linear radicand
      {testsys::make(1, "qd1^2/2 - q1^4/4"), {"qd1^2/2 + q1^4/4"}, kSeed1, true},
      {testsys::make(1, "(1 + q1^2)*qd1^2/2"), {"(1 + q1^2)*qd1^2/2"}, kSeed1, true},
      {testsys::osc2d(), {"(qd1^2 + qd2^2 + q1^2 + q2^2)/2", "(qd2^2 + q2^2)/2"}, State{0, {0.1, 0.2}, {0.9, 0.7}},
       false},
  };
  for (const auto& c : cases) {
    const auto p = run(c.sys, c.Cs, c.seed);
    CHECK(p.gf.used_quadrature == c.quadrature);
    const auto o = chart_options(c.sys, p.inv, {.trials = 24});
    for (int j = 0; j < c.sys.dof(); ++j) {
      const Expr dS = pullback(p.family, p.inv, sym::diff(p.gf.S, c.sys.space().q(j)));
      CHECK(equals_numeric(dS, c.sys.momenta()[static_cast<std::size_t>(j)], o).ok());
    }
    for (std::size_t i = 0; i < p.inv.constants.size(); ++i) {
      const Expr dS = pullback(p.family, p.inv, sym::diff(p.gf.S, p.inv.constants[i]));
      CHECK(equals_numeric(dS, p.theta.pullback[i], {.trials = 24, .tol = 1e-8, .boxes = o.boxes}).ok());
    }
  }
}

TEST_CASE("autonomous integrals") {
  const auto osc = testsys::osc1d();
  auto p = run(osc, {"qd1^2/2 + q1^2/2"}, kSeed1);
  auto li = autonomous_integrals(osc, p.family, p.inv, p.theta);
  REQUIRE(li.integrals.size() == 1);
  CHECK(li.integrals[0].name == "T");
  CHECK(li.integrals[0].status == ConservationStatus::SymbolicVerified);
  CHECK(li.integrals[0].kind == IntegralKind::IntegralOfMotion);
  CHECK(li.drift[0].max_drift < 1e-8);
  // quarter period from q = 0 stays on the qd > 0 branch
  const auto d = drift_in_chart(osc, p.family, p.inv, li.integrals, kSeed1, M_PI / 2, 1e-11);
  CHECK(d[0].max_drift < 1e-8);
  CHECK(d[0].nodes > 10);
  CHECK(d[0].chart_exits == 0);
  // a full period leaves the chart at the turning points
  const auto full = drift_in_chart(osc, p.family, p.inv, li.integrals, kSeed1, 2 * M_PI, 1e-11);
  CHECK(full[0].chart_exits >= 1);
  CHECK(full[0].max_drift < 1e-8);

  // energy of the free particle
  const auto fp = testsys::free1d();
  p = run(fp, {"qd1^2/2"}, kSeed1);
  li = autonomous_integrals(fp, p.family, p.inv, p.theta);
  CHECK(li.integrals[0].status == ConservationStatus::SymbolicVerified);
  CHECK(equals_numeric(li.integrals[0].C, ex(fp, "t - q1/qd1"), {.boxes = {{"qd1", {0.1, 2}}}}).ok());

  // the first member must be the energy
  const auto osc2 = testsys::osc2d();
  p = run(osc2, {"(qd1^2 + q1^2)/2", "(qd2^2 + q2^2)/2"}, State{0, {0.1, 0.2}, {0.9, 0.7}});
  CHECK_THROWS_AS(autonomous_integrals(osc2, p.family, p.inv, p.theta), std::invalid_argument);

  p = run(osc2, {"(qd1^2 + qd2^2 + q1^2 + q2^2)/2", "(qd2^2 + q2^2)/2"}, State{0, {0.1, 0.2}, {0.9, 0.7}});
  li = autonomous_integrals(osc2, p.family, p.inv, p.theta);
  REQUIRE(li.integrals.size() == 2);
  CHECK(li.integrals[1].name == "Theta2");
  CHECK(li.integrals[1].kind == IntegralKind::ConstantOfMotion);
  for (const auto& cq : li.integrals) CHECK(cq.status == ConservationStatus::SymbolicVerified);
  for (const auto& dr : li.drift) CHECK(dr.max_drift < 1e-6);
  const auto checks = check_chart(osc2, p.family, p.inv, p.theta, {.trials = 20, .tol = 1e-7});
  CHECK(checks.ok());
  CHECK(checks.samples == 20);
  CHECK(checks.min_rank == 4);

  // non-autonomous input is refused
  const auto driven = testsys::make(1, "qd1^2/2 + t*q1");
  p = run(driven, {"qd1 - t^2/2"}, kSeed1);
  CHECK_THROWS_AS(autonomous_integrals(driven, p.family, p.inv, p.theta), std::invalid_argument);
}

TEST_CASE("integrals through quadrature and Newton kernels") {
  const auto quartic = testsys::make(1, "qd1^2/2 - q1^4/4");
  auto p = run(quartic, {"qd1^2/2 + q1^4/4"}, kSeed1);
  auto li = autonomous_integrals(quartic, p.family, p.inv, p.theta, {}, {.trajectories = 4});
  CHECK(li.integrals[0].status == ConservationStatus::SymbolicVerified);
  CHECK(li.drift[0].max_drift < 1e-8);
  CHECK(check_chart(quartic, p.family, p.inv, p.theta, {.trials = 10, .tol = 1e-7}).ok());

  const auto osc = testsys::osc1d();
  InversionOptions io;
  io.force_numeric = true;
  p = run(osc, {"qd1^2/2 + q1^2/2"}, kSeed1, io);
  li = autonomous_integrals(osc, p.family, p.inv, p.theta, {.trials = 16}, {.trajectories = 2, .t_end = 1.0});
  CHECK(li.integrals[0].status == ConservationStatus::SymbolicVerified);
  CHECK(li.drift[0].max_drift < 1e-8);
}

TEST_CASE("non-autonomous integrals") {
  const auto driven = testsys::make(1, "qd1^2/2 + t*q1");
  auto p = run(driven, {"qd1 - t^2/2"}, kSeed1);
  auto li = nonautonomous_integrals(driven, p.family, p.inv, p.gf, p.theta);
  REQUIRE(li.integrals.size() == 1);
  CHECK(li.reduction == "trivial");
  CHECK(li.integrals[0].status == ConservationStatus::SymbolicVerified);
  CHECK(li.drift[0].max_drift < 1e-6);
  CHECK_FALSE(sym::depends_on(li.K, driven.space().q(0)));

  // gauge-shifted free particle: constant dK/dC gives one more constant of motion
  const auto shifted = testsys::make(2, "(qd1^2 + qd2^2)/2 + q1^2 + 2*t*q1*qd1");
  p = run(shifted, {"qd1", "qd2"}, State{0, {0.3, 0.1}, {1, 0.5}});
  li = nonautonomous_integrals(shifted, p.family, p.inv, p.gf, p.theta);
  CHECK(li.reduction == "ratio");
  REQUIRE(li.integrals.size() == 3);
  CHECK(li.integrals[2].name == "F");
  CHECK(li.integrals[2].kind == IntegralKind::ConstantOfMotion);
  CHECK(equals_numeric(li.integrals[2].C, ex(shifted, "q2*qd1 - q1*qd2")).ok());
  for (const auto& cq : li.integrals) CHECK(cq.status == ConservationStatus::SymbolicVerified);

  // t-dependent coefficients are not reduced
  const auto driven2 = testsys::make(2, "(qd1^2 + qd2^2)/2 + t*q1 + t*q2");
  p = run(driven2, {"qd1 - t^2/2", "qd2 - t^2/2"}, State{0, {0, 0}, {1, 1}});
  li = nonautonomous_integrals(driven2, p.family, p.inv, p.gf, p.theta);
  CHECK(li.reduction == "unsupported");
  CHECK(li.integrals.size() == 2);

  const auto osc = testsys::osc1d();
  p = run(osc, {"qd1^2/2 + q1^2/2"}, kSeed1);
  CHECK_THROWS_AS(nonautonomous_integrals(osc, p.family, p.inv, p.gf, p.theta), std::invalid_argument);
}

TEST_CASE("the upsilon integrand is the rate of the angle at fixed C") {
  const auto shifted = testsys::make(2, "(qd1^2 + qd2^2)/2 + q1^2 + 2*t*q1*qd1");
  const auto p = run(shifted, {"qd1", "qd2"}, State{0, {0.3, 0.1}, {1, 0.5}});
  const auto li = nonautonomous_integrals(shifted, p.family, p.inv, p.gf, p.theta);
  const auto& S = shifted.space();
  for (std::size_t i = 0; i < 2; ++i) {
    Expr rate = sym::diff(p.theta.theta[i], S.t());
    for (int j = 0; j < 2; ++j) rate += sym::diff(p.theta.theta[i], S.q(j)) * p.inv.qd[static_cast<std::size_t>(j)];
    CHECK(equals_numeric(rate, sym::diff(li.K, p.inv.constants[i])).ok());
  }
}

TEST_CASE("energy generates time translation") {
  for (const auto& sys : {testsys::osc1d(), testsys::osc2d(), testsys::kepler(), testsys::free2d()}) {
    const auto gen = c_to_p(sys, hamiltonian(sys));
    for (int i = 0; i < sys.dof(); ++i) CHECK(gen.P[static_cast<std::size_t>(i)] == sys.space().QD(i));
    SymmetryGenerator shift = gen;
    shift.tau = Expr(-1);
    State s{0.4, std::vector<double>(static_cast<std::size_t>(sys.dof()), 0.7),
            std::vector<double>(static_cast<std::size_t>(sys.dof()), 0.3)};
    const auto fm = flow_gauge(sys, shift, s, 1.5, 1e-11);
    CHECK(fm.states.back().t == doctest::Approx(0.4 - 1.5));
    for (int i = 0; i < sys.dof(); ++i) {
      CHECK(std::abs(fm.states.back().q[static_cast<std::size_t>(i)] - 0.7) < 1e-9);
      CHECK(std::abs(fm.states.back().qd[static_cast<std::size_t>(i)] - 0.3) < 1e-9);
    }
  }
}

TEST_CASE("family generators commute") {
  const auto osc2 = testsys::osc2d();
  const auto fam = verify_family(osc2, members(osc2, {"(qd1^2 + qd2^2 + q1^2 + q2^2)/2", "(qd2^2 + q2^2)/2"}));
  const auto h = verify_commutator_homomorphism(osc2, fam.members[0].C, fam.members[1].C);
  CHECK(h.ok);
  CHECK(sym::check_zero(h.lhs).ok());
}
