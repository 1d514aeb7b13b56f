#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mechsym/bracket.hpp"
#include "mechsym/flows.hpp"
#include "mechsym/sym/polynomial.hpp"
#include "systems.hpp"

using namespace mechsym;
using testsys::ex;
using testsys::exs;

namespace {

SymmetryGenerator gen(const LagrangianSystem& sys, const std::vector<std::string>& p, const std::string& tau = "0") {
  return SymmetryGenerator{"", exs(sys, p), ex(sys, tau)};
}

double value(const LagrangianSystem& sys, const Expr& C, const State& s) {
  const StateProgram prog(sys, {C});
  double out = 0;
  REQUIRE(prog.run(s.t, s.q, s.qd, {&out, 1}));
  return out;
}

}  // namespace

TEST_CASE("ode integrator basics") {
  numeric::Rhs decay = [](double, std::span<const double> y, std::span<double> dy, std::string*) {
    dy[0] = -y[0];
    return true;
  };
  numeric::OdeOptions o;
  o.rtol = o.atol = 1e-11;
  o.stops = {0.5, 1.25};
  const auto sol = numeric::dopri45(decay, 0.0, {1.0}, 2.0, o);
  CHECK(sol.y.back()[0] == doctest::Approx(std::exp(-2.0)).epsilon(1e-9));
  CHECK(std::find(sol.t.begin(), sol.t.end(), 0.5) != sol.t.end());
  CHECK(std::find(sol.t.begin(), sol.t.end(), 1.25) != sol.t.end());
  CHECK(sol.at(0.7)[0] == doctest::Approx(std::exp(-0.7)).epsilon(1e-7));
  CHECK(sol.global_error > 0);
  const auto back = numeric::dopri45(decay, 1.0, {1.0}, 0.0, o);
  CHECK(back.y.back()[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-9));
  const auto rk = numeric::rk4_fixed(decay, 0.0, {1.0}, 1.0, 100);
  CHECK(rk[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
}

TEST_CASE("integrate examples") {
  const auto osc = testsys::osc1d();
  auto traj = integrate(osc, {0, {1}, {0}}, 2 * M_PI, 1e-10);
  const auto end = traj.node(traj.size() - 1);
  CHECK(std::abs(end.q[0] - 1) < 1e-8);
  CHECK(std::abs(end.qd[0]) < 1e-8);
  const auto mid = traj.at(1.0);
  CHECK(std::abs(mid.q[0] - std::cos(1.0)) < 1e-7);
  const auto fp = testsys::free1d();
  traj = integrate(fp, {0, {0}, {1}}, 3.0, 1e-10);
  CHECK(traj.node(traj.size() - 1).q[0] == doctest::Approx(3.0));
  // radial infall reaches the singularity
  const auto kep = testsys::kepler();
  traj = integrate(kep, {0, {1, 0}, {0, 0}}, 5.0, 1e-10);
  CHECK(traj.truncated());
  CHECK_FALSE(traj.reason().empty());
  CHECK(traj.node(traj.size() - 1).t < 5.0);
}

TEST_CASE("re-integration at half tolerance stays within the error estimate") {
  const auto kep = testsys::kepler();
  const State s{0, {1, 0}, {0, 1.2}};
  const auto a = integrate(kep, s, 10.0, 1e-9);
  const auto b = integrate(kep, s, 10.0, 5e-10);
  double diff = 0;
  for (std::size_t i = 0; i < 4; ++i) diff = std::max(diff, std::abs(a.solution.y.back()[i] - b.solution.y.back()[i]));
  CHECK(diff < 10 * a.solution.global_error);
  for (std::size_t k = 1; k < a.size(); ++k) CHECK(a.solution.local_error[k] <= 1e-9 * (1 + 10));
}

TEST_CASE("csv export") {
  const auto osc = testsys::osc2d();
  const auto traj = integrate(osc, {0, {1, 0}, {0, 1}}, 0.5, 1e-8);
  std::ostringstream os;
  write_csv(traj, os);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "t,q1,q2,qd1,qd2");
  int rows = 0;
  for (std::string line; std::getline(is, line);) ++rows;
  CHECK(rows == static_cast<int>(traj.size()));
}

TEST_CASE("monitor: oscillator energy is globally conserved") {
  const auto osc = testsys::osc1d();
  const auto traj = integrate(osc, {0, {1}, {0}}, 20.0, 1e-11);
  const auto E = is_conserved(osc, ex(osc, "qd1^2/2 + q1^2/2"), {}, "E");
  const auto q = is_conserved(osc, ex(osc, "q1"), {}, "q");
  const auto v = monitor(osc, traj, {E, q});
  CHECK(v.integrals[0].classification == ConservationStatus::NumericGlobal);
  CHECK(v.integrals[0].max_drift < 1e-8);
  CHECK(v.integrals[1].classification == ConservationStatus::Failed);
}

TEST_CASE("monitor: a wrapped angle jumps, and bisection separates jumps from steep slopes") {
  // atan2(q2, q1) on a circular orbit of the 2D oscillator is smooth except
  // for the 2 pi wrap; the angle minus t is locally conserved.
  const auto osc = testsys::osc2d();
  const auto traj = integrate(osc, {0, {1, 0}, {0, 1}}, 15.0, 1e-11);
  const auto phase = is_conserved(osc, ex(osc, "atan2(q2, q1) - t"), {}, "phase");
  const auto v = monitor(osc, traj, {phase});
  CHECK(v.integrals[0].classification == ConservationStatus::NumericLocal);
  REQUIRE(v.integrals[0].jump_times.size() == 2);
  CHECK(v.integrals[0].jump_times[0] == doctest::Approx(M_PI).epsilon(1e-8));
  CHECK(v.integrals[0].jump_sizes[0] == doctest::Approx(-2 * M_PI).epsilon(1e-6));
}

TEST_CASE("flow_ode examples and group property") {
  const auto fp = testsys::free1d();
  auto fm = flow_ode(fp, gen(fp, {"1"}), {0, {0}, {1}}, 3.0, 1e-10);
  CHECK(fm.states.back().q[0] == doctest::Approx(3.0));
  CHECK(fm.states.back().qd[0] == doctest::Approx(1.0));
  CHECK(fm.eps.front() == 0.0);
  const auto osc = testsys::osc1d();
  const auto P = gen(osc, {"qd1"});
  fm = flow_ode(osc, P, {0, {1}, {0}}, 0.7, 1e-11, {-0.4, 0.3});
  REQUIRE(fm.eps.size() == 4);
  for (std::size_t k = 0; k < fm.eps.size(); ++k) {
    CHECK(std::abs(fm.states[k].q[0] - std::cos(fm.eps[k])) < 1e-9);
    CHECK(std::abs(fm.states[k].qd[0] + std::sin(fm.eps[k])) < 1e-9);
  }
  CHECK(fm.states[1].q[0] == 1.0);  // eps = 0 is the input state
  // eps1 then eps2 equals eps1 + eps2
  const auto rot = gen(testsys::free2d(), {"-q2", "q1"});
  const auto fp2 = testsys::free2d();
  const State s{0.5, {1, 0.3}, {0.2, -0.7}};
  const auto one = flow_ode(fp2, rot, s, 0.4, 1e-11).states.back();
  const auto two = flow_ode(fp2, rot, one, 0.5, 1e-11).states.back();
  const auto direct = flow_ode(fp2, rot, s, 0.9, 1e-11).states.back();
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(std::abs(two.q[i] - direct.q[i]) < 1e-9);
    CHECK(std::abs(two.qd[i] - direct.qd[i]) < 1e-9);
  }
  // a quantity is invariant under its own flow
  const Expr Lz = ex(fp2, "q1*qd2 - q2*qd1");
  CHECK(std::abs(value(fp2, Lz, direct) - value(fp2, Lz, s)) < 1e-9);
}

TEST_CASE("flow_series examples") {
  const auto fp = testsys::free1d();
  FlowSeries s(fp, ex(fp, "qd1"), ex(fp, "q1"), 3);
  CHECK(s.terms()[1].is_one());
  CHECK(s.terms()[2].is_zero());
  CHECK(s({0, {0.25}, {2}}, 0.5) == doctest::Approx(0.75));
  const auto osc = testsys::osc1d();
  const Expr E = ex(osc, "qd1^2/2 + q1^2/2");
  FlowSeries fixed(osc, E, E, 4);
  CHECK(fixed({0, {0.3}, {0.1}}, 2.0) == doctest::Approx(0.05));
  // factorial convergence towards the ODE flow
  const State st{0, {0.8}, {0.3}};
  const auto ode = flow_ode(osc, c_to_p(osc, E), st, 0.3, 1e-13).states.back();
  double prev = 1;
  for (int k : {2, 4, 6, 8}) {
    const double err = std::abs(FlowSeries(osc, E, ex(osc, "q1"), k)(st, 0.3) - ode.q[0]);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-10);
}

TEST_CASE("flow_series enforces the node budget") {
  const auto sys = testsys::make(2, "qd1^2/2 + qd2^2/2 - exp(q1)*sin(q2)");
  const Expr C = ex(sys, "qd1*q2^2 + exp(q1)*qd2^3");
  const Expr F = ex(sys, "q1*qd2");
  try {
    FlowSeries(sys, C, F, 12, 300);
    FAIL("expected SeriesTooLarge");
  } catch (const SeriesTooLarge& e) {
    CHECK(std::string(e.what()).find("bracket 8") != std::string::npos);
  }
  CHECK_NOTHROW(FlowSeries(sys, C, F, 7, 300));
  CHECK(kSeriesNodeCap == 100000);
}

TEST_CASE("flow_gauge examples") {
  const auto osc = testsys::osc1d();
  const auto E = gen(osc, {"qd1"}, "-1");
  auto fm = flow_gauge(osc, E, {0.3, {0.6}, {-0.2}}, 2.0, 1e-10);
  CHECK(fm.states.back().t == doctest::Approx(0.3 - 2.0));
  CHECK(fm.states.back().q[0] == 0.6);
  CHECK(fm.states.back().qd[0] == -0.2);
  // tau = 0 is the plain flow
  const auto plain = gen(osc, {"qd1"});
  const auto a = flow_gauge(osc, plain, {0, {1}, {0}}, 0.5, 1e-11).states.back();
  const auto b = flow_ode(osc, plain, {0, {1}, {0}}, 0.5, 1e-11).states.back();
  CHECK(a.t == 0.0);
  CHECK(std::abs(a.q[0] - b.q[0]) < 1e-12);
}

TEST_CASE("gauge equivalence") {
  const auto osc = testsys::osc1d();
  const auto P = gen(osc, {"qd1"});
  CHECK(verify_gauge_equivalence(osc, P, ex(osc, "q1*t + qd1^2"), ex(osc, "qd1^2/2 + q1^2/2")).ok);
  const auto bad = verify_gauge_equivalence(osc, P, ex(osc, "q1 + 2"), ex(osc, "q1"));
  CHECK_FALSE(bad.ok);
  CHECK(sym::equals_numeric(bad.difference, ex(osc, "(q1 + 2)*qd1")).ok());
  // same action on solutions: C agrees between the two flows
  const auto fp = testsys::free1d();
  const auto trans = gen(fp, {"1"}, "qd1");
  const Expr C = ex(fp, "q1 - t*qd1");
  const State s{0.2, {0.5}, {1.5}};
  const auto y = flow_gauge(fp, trans, s, 0.8, 1e-11).states.back();
  const auto x = flow_ode(fp, trans, s, 0.8, 1e-11).states.back();
  CHECK(std::abs(value(fp, C, y) - value(fp, C, x)) < 1e-9);
  CHECK(std::abs(y.t - s.t) > 0.5);
}

TEST_CASE("solution mapping check") {
  const auto osc = testsys::osc1d();
  const auto traj = integrate(osc, {0, {1}, {0}}, 3.0, 1e-12);
  auto rep = solution_mapping_check(osc, gen(osc, {"qd1"}), traj, 0.5, 1e-12);
  REQUIRE(rep.ok);
  CHECK(rep.h == doctest::Approx(1e-3));
  CHECK(rep.max_residual < 1e-6);
  const auto bad = solution_mapping_check(osc, gen(osc, {"q1^2"}), traj, 0.5, 1e-12);
  REQUIRE(bad.ok);
  CHECK(bad.max_residual > 1e-2);
  const auto fp = testsys::free1d();
  const auto line = integrate(fp, {0, {0}, {1}}, 2.0, 1e-12);
  rep = solution_mapping_check(fp, gen(fp, {"1"}), line, 1.5, 1e-12);
  REQUIRE(rep.ok);
  CHECK(rep.max_residual < 1e-6);
}
