// Acceptance run over the golden system files. Prints one PASS/FAIL line per
// criterion and exits non-zero if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mechsym/bracket.hpp"
#include "mechsym/cli.hpp"
#include "mechsym/flows.hpp"
#include "mechsym/io.hpp"
#include "mechsym/liouville.hpp"
#include "mechsym/sym/calculus.hpp"
#include "mechsym/sym/number.hpp"
#include "mechsym/sym/polynomial.hpp"
#include "mechsym/sym/printer.hpp"
#include "mechsym/sym/simplify.hpp"

using namespace mechsym;

namespace {

const std::string kData = MECHSYM_DATA_DIR;
const std::vector<std::string> kGolden = {"free1d", "free2d", "osc1d", "osc2d", "kepler", "perturbed_kepler", "driven"};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

io::SystemFile load(const std::string& name) { return io::load_system(kData + "/systems/" + name + ".json"); }

std::vector<io::SystemFile>& golden() {
  static std::vector<io::SystemFile> files = [] {
    std::vector<io::SystemFile> out;
    for (const auto& n : kGolden) out.push_back(load(n));
    return out;
  }();
  return files;
}

sym::CheckOptions opts(const io::SystemFile& f, int trials, double tol, std::uint64_t seed = 0) {
  sym::CheckOptions o;
  o.trials = trials;
  o.tol = tol;
  o.seed = seed;
  return f.check_options(o);
}

Expr number(double v) { return Expr(sym::Number::from_double(v)); }

// C with the state symbols replaced by the base point.
Expr at_base(const LagrangianSystem& sys, const Expr& C, const BasePoint& b) {
  std::map<Symbol, Expr> at;
  const auto& S = sys.space();
  at[S.t()] = number(b.t);
  for (int i = 0; i < sys.dof(); ++i) {
    const auto I = static_cast<std::size_t>(i);
    at[S.q(i)] = number(b.q.empty() ? 0.0 : b.q[I]);
    at[S.qd(i)] = number(b.qd.empty() ? 0.0 : b.qd[I]);
  }
  return sym::simplify(sym::substitute(C, at));
}

double value(const LagrangianSystem& sys, const Expr& e, const State& s) {
  const StateProgram p(sys, {e});
  double out = NAN;
  if (!p.run(s.t, s.q, s.qd, std::span<double>(&out, 1))) return NAN;
  return out;
}

// A state inside the sample boxes of each golden file; for the perturbed
// problem, a chart where the apsis angle is single valued.
State probe(const io::SystemFile& f) {
  if (f.N == 1) return {0.3, {0.6}, {-0.2}};
  if (f.name.find("perturbed") != std::string::npos) return {0.3, {1.75, 0.75}, {0.2, 0.75}};
  return {0.3, {1.0, 0.5}, {0.2, 0.9}};
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, const std::function<Outcome()>& body) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fs", seconds_since(t0));
  std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << " " << name << ": " << o.detail << " (" << buf << ")"
            << std::endl;
  if (!o.pass) ++failures;
}

Outcome noether_roundtrip() {
  const auto t0 = Clock::now();
  int checked = 0;
  std::string bad;
  for (const auto& f : golden()) {
    const auto& sys = *f.system;
    const auto o = opts(f, 64, 1e-9);
    for (const auto& c : f.conserved) {
      const auto rec = p_to_c(sys, c_to_p(sys, c.expr, c.name), f.base, o);
      const bool ok = rec.ok && sym::equals_numeric(rec.C, c.expr - at_base(sys, c.expr, f.base), o).ok();
      if (!ok && bad.empty()) bad = f.name + "/" + c.name + (rec.ok ? "" : ": " + rec.failure);
      ++checked;
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << checked << " quantities rebuilt in " << secs << " s";
  if (!bad.empty()) d << ", first mismatch " << bad;
  return {bad.empty() && secs < 10.0, d.str()};
}

Outcome symmetry_action_suite() {
  std::mt19937_64 rng(21);
  int checked = 0;
  std::string bad;
  for (const auto& f : golden()) {
    const auto& sys = *f.system;
    const auto vars = sys.space().state_symbols();
    const auto o = opts(f, 64, 1e-9);
    for (const auto& c : f.conserved) {
      for (int k = 0; k < 20; ++k) {
        const Expr F = sym::random_polynomial(vars, 3, 4, rng);
        const auto r = verify_symmetry_action(sys, c.expr, F, o);
        if (!r.ok && bad.empty()) bad = f.name + "/" + c.name + " with F = " + sym::to_string(F);
        ++checked;
      }
    }
  }
  return {bad.empty(), std::to_string(checked) + " (system, C, F) triples" + (bad.empty() ? "" : ", failed " + bad)};
}

Outcome commutator_suite() {
  int checked = 0;
  std::string bad;
  for (const auto& f : golden()) {
    const auto& sys = *f.system;
    const auto o = opts(f, 64, 1e-9);
    for (std::size_t i = 0; i < f.conserved.size(); ++i) {
      for (std::size_t j = i + 1; j < f.conserved.size(); ++j) {
        const auto r = verify_commutator_homomorphism(sys, f.conserved[i].expr, f.conserved[j].expr, o);
        if (!r.ok && bad.empty()) bad = f.name + "/" + f.conserved[i].name + "," + f.conserved[j].name;
        ++checked;
      }
    }
  }
  // free particle: {q - t qd, qd} = 1 and both sides are the zero generator
  const auto& fp = golden()[0];
  const auto& sys = *fp.system;
  const Expr p = fp.find_conserved("p")->expr, G = fp.find_conserved("G")->expr;
  const auto r = verify_commutator_homomorphism(sys, p, G, opts(fp, 64, 1e-9));
  const bool constant = sym::equals_numeric(pbracket(sys, G, p), Expr(1)).ok();
  const bool zero = sym::check_zero(r.lhs).ok() && sym::check_zero(r.rhs).ok();
  std::ostringstream d;
  d << checked << " pairs; free particle {G, p} = 1: " << (constant ? "yes" : "no")
    << ", zero generator on both sides: " << (zero ? "yes" : "no");
  if (!bad.empty()) d << ", failed " << bad;
  return {bad.empty() && r.ok && constant && zero, d.str()};
}

Outcome bracket_axioms() {
  std::mt19937_64 rng(33);
  int trials = 0;
  std::string bad;
  for (const auto& f : golden()) {
    const auto& sys = *f.system;
    const auto vars = sys.space().state_symbols();
    auto o = opts(f, 1, 1e-8);
    for (int k = 0; k < 100; ++k) {
      o.seed = static_cast<std::uint64_t>(k);
      const Expr F = sym::random_polynomial(vars, 2, 3, rng);
      const Expr G = sym::random_polynomial(vars, 2, 3, rng);
      const Expr H = sym::random_polynomial(vars, 2, 3, rng);
      const bool anti = sym::equals_numeric(pbracket(sys, F, G), -pbracket(sys, G, F), o).ok();
      const bool leibniz =
          sym::equals_numeric(pbracket(sys, F, G * H), G * pbracket(sys, F, H) + pbracket(sys, F, G) * H, o).ok();
      const Expr jac = pbracket(sys, pbracket(sys, F, G), H) + pbracket(sys, pbracket(sys, G, H), F) +
                       pbracket(sys, pbracket(sys, H, F), G);
      const bool jacobi = sym::equals_numeric(jac, Expr(0), o).ok();
      if (!(anti && leibniz && jacobi) && bad.empty()) {
        bad = f.name + (anti ? "" : " antisymmetry") + (leibniz ? "" : " Leibniz") + (jacobi ? "" : " Jacobi");
      }
      ++trials;
    }
  }
  return {bad.empty(), std::to_string(trials) + " random triples, 100 per system" + (bad.empty() ? "" : ", failed " + bad)};
}

Outcome lrl_phenomenology() {
  const auto t0 = Clock::now();
  std::ostringstream d;
  bool ok = true;
  {
    const auto f = load("kepler");
    const auto& sys = *f.system;
    const auto& ts = *f.find_trajectory("ellipse");
    const double E = value(sys, f.find_conserved("H")->expr, ts.initial);
    const auto traj = integrate(sys, ts.initial, ts.t_end, 1e-10);
    std::vector<ConservedQuantity> lrl;
    for (const char* n : {"A1", "A2"}) lrl.push_back({n, f.find_conserved(n)->expr});
    const auto v = monitor(sys, traj, lrl);
    d << "Kepler E = " << E << ", " << v.radius_minima.size() << " periapses;";
    ok = ok && std::abs(E + 0.3) < 1e-6 && !traj.truncated() && v.radius_minima.size() == 5;
    for (const auto& iv : v.integrals) {
      d << " " << iv.name << " drift " << iv.max_drift << " jumps " << iv.jump_times.size() << " "
        << status_name(iv.classification) << ";";
      ok = ok && iv.max_drift < 1e-7 && iv.jump_times.empty() && iv.classification == ConservationStatus::NumericGlobal;
    }
  }
  {
    const auto f = load("perturbed_kepler");
    const auto& sys = *f.system;
    const auto& ts = *f.find_trajectory("rosette");
    const auto traj = integrate(sys, ts.initial, ts.t_end, 1e-10);
    const auto v = monitor(sys, traj, {{"apsis", f.find_conserved("apsis")->expr}});
    const auto& iv = v.integrals.front();
    d << " perturbed: " << iv.jump_times.size() << " jumps vs " << v.radius_minima.size() << " radius minima, drift "
      << iv.max_drift << " " << status_name(iv.classification);
    ok = ok && !traj.truncated() && !v.radius_minima.empty() && iv.jump_times.size() == v.radius_minima.size() &&
         iv.max_drift < 1e-6 && iv.classification == ConservationStatus::NumericLocal;
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 30.0, d.str()};
}

Outcome energy_time_translation() {
  std::ostringstream d;
  bool ok = true;
  int systems = 0;
  double worst = 0.0;
  for (const auto& f : golden()) {
    const auto& sys = *f.system;
    if (!sys.autonomous()) continue;
    ++systems;
    auto gen = c_to_p(sys, hamiltonian(sys), "H");
    for (int i = 0; i < sys.dof(); ++i) ok = ok && gen.P[static_cast<std::size_t>(i)] == sys.space().QD(i);
    gen.tau = Expr(-1);
    const State s = probe(f);
    const auto fm = flow_gauge(sys, gen, s, 2.0, 1e-12, {0.5, 1.0, 1.5});
    ok = ok && !fm.truncated && fm.states.size() == 5;
    for (std::size_t k = 0; k < fm.states.size(); ++k) {
      const auto& y = fm.states[k];
      ok = ok && std::abs(y.t - (s.t - fm.eps[k])) < 1e-9;
      double moved = 0.0;
      for (std::size_t i = 0; i < y.q.size(); ++i) moved += std::abs(y.q[i] - s.q[i]) + std::abs(y.qd[i] - s.qd[i]);
      worst = std::max(worst, moved);
    }
  }
  d << systems << " autonomous systems with P == qd; largest |dq| + |dqd| up to eps = 2: " << worst;
  return {ok && systems == 6 && worst < 1e-9, d.str()};
}

Outcome liouville_pipeline() {
  std::ostringstream d;
  bool ok = true;
  {
    const auto f = load("osc1d");
    const auto& sys = *f.system;
    std::vector<ConservedQuantity> members{is_conserved(sys, f.find_conserved("E")->expr, {}, "E")};
    const auto fam = verify_family(sys, members);
    const auto inv = invert_velocities(sys, fam, f.liouville->seed);
    const auto gf = generating_function(sys, fam, inv);
    const auto an = angles(sys, fam, inv, gf);
    const auto li = autonomous_integrals(sys, fam, inv, an);
    // qd > 0 for the whole quarter period starting at phase -pi/4
    const State start{0.0, {-std::sqrt(0.5)}, {std::sqrt(0.5)}};
    const auto drift = drift_in_chart(sys, fam, inv, {li.integrals.front()}, start, M_PI / 2, 1e-12);
    d << "1D: T drift " << drift.front().max_drift << " with " << drift.front().chart_exits << " chart exits;";
    ok = ok && fam.valid() && drift.front().chart_exits == 0 && drift.front().nodes > 10 &&
         drift.front().max_drift < 1e-8;
  }
  {
    const auto f = load("osc2d");
    const auto& sys = *f.system;
    std::vector<ConservedQuantity> members;
    for (const auto& n : f.liouville->family) members.push_back(is_conserved(sys, f.find_conserved(n)->expr, {}, n));
    const auto fam = verify_family(sys, members);
    const auto inv = invert_velocities(sys, fam, f.liouville->seed);
    const auto gf = generating_function(sys, fam, inv);
    const auto an = angles(sys, fam, inv, gf);
    const auto li = autonomous_integrals(sys, fam, inv, an);
    int produced = 0;
    for (const auto& m : members) produced += m.status == ConservationStatus::SymbolicVerified;
    for (const auto& q : li.integrals) produced += q.status != ConservationStatus::Failed;
    sym::CheckOptions o;
    o.trials = 20;
    o.tol = 1e-7;
    const auto chart = check_chart(sys, fam, inv, an, o);
    d << " 2D: " << produced << " integrals, rank " << chart.min_rank << " at " << chart.samples
      << " samples, canonical " << sym::verdict_name(chart.canonical.verdict);
    ok = ok && produced == 4 && chart.samples == 20 && chart.min_rank == 4 && chart.canonical.ok();
  }
  return {ok, d.str()};
}

Outcome series_ode_agreement() {
  const auto f = load("osc1d");
  const auto& sys = *f.system;
  const Expr E = f.find_conserved("E")->expr;
  const State s{0.0, {1.0}, {0.0}};
  const auto ode = flow_ode(sys, c_to_p(sys, E), s, 0.1, 1e-12).states.back();
  const FlowSeries q(sys, E, sys.space().Q(0), 8), qd(sys, E, sys.space().QD(0), 8);
  const double gap = std::max(std::abs(q(s, 0.1) - ode.q[0]), std::abs(qd(s, 0.1) - ode.qd[0]));
  std::ostringstream d;
  d << "order 8 series vs ODE at eps = 0.1: " << gap;
  return {gap < 1e-12, d.str()};
}

Outcome gauge_equivalence() {
  std::mt19937_64 rng(55);
  int symbolic = 0;
  double worst = 0.0;
  std::string bad;
  auto& files = golden();
  for (int k = 0; k < 50; ++k) {
    const auto& f = files[static_cast<std::size_t>(k) % files.size()];
    const auto& sys = *f.system;
    const Expr tau = sym::random_polynomial(sys.space().state_symbols(), 2, 3, rng, 1);
    const auto& first = f.conserved.front();
    SymmetryGenerator gen = c_to_p(sys, first.expr, first.name);
    const State s = probe(f);
    const auto x = flow_ode(sys, gen, s, 0.2, 1e-12).states.back();
    gen.tau = tau;
    const auto y = flow_gauge(sys, gen, s, 0.2, 1e-12).states.back();
    for (const auto& c : f.conserved) {
      const auto r = verify_gauge_equivalence(sys, gen, tau, c.expr, opts(f, 64, 1e-9));
      symbolic += r.ok;
      if (!r.ok && bad.empty()) bad = f.name + "/" + c.name + " tau = " + sym::to_string(tau);
      const double gap = std::abs(value(sys, c.expr, x) - value(sys, c.expr, y));
      if (!(gap < 1e-7) && bad.empty()) bad = f.name + "/" + c.name + " flows differ by " + std::to_string(gap);
      if (std::isfinite(gap)) worst = std::max(worst, gap);
    }
  }
  std::ostringstream d;
  d << "50 random tau, " << symbolic << " symbolic checks, largest C gap between flows " << worst;
  if (!bad.empty()) d << ", failed " << bad;
  return {bad.empty(), d.str()};
}

Outcome negative_controls() {
  std::ostringstream d;
  bool ok = true;
  const auto fp = load("free1d");
  const auto& sys = *fp.system;
  const auto o = opts(fp, 64, 1e-9);
  const SymmetryGenerator scaling{"scaling", {sys.space().Q(0)}, 0};
  const bool var = is_variational_symmetry(sys, scaling, o).verdict;
  const bool eom = is_eom_symmetry(sys, scaling, o).ok;
  // q^2 is not a symmetry of qdd = 0 at all
  const SymmetryGenerator square{"square", {sys.space().Q(0) * sys.space().Q(0)}, 0};
  const bool eom_square = is_eom_symmetry(sys, square, o).ok;
  d << "scaling: variational " << var << ", eom " << eom << "; q^2: eom " << eom_square << ";";
  ok = ok && !var && eom && !eom_square;

  const Expr q = sys.space().Q(0);
  const bool conserved = is_conserved(sys, q, o).status != ConservationStatus::Failed;
  const bool via_bracket = conservation_via_bracket(sys, q, o).ok();
  const auto traj = integrate(sys, {0, {0}, {1}}, 2.0, 1e-10);
  const auto mon = monitor(sys, traj, {{"q", q}}).integrals.front();
  d << " C = q: symbolic " << conserved << ", bracket " << via_bracket << ", numeric "
    << status_name(mon.classification) << ";";
  ok = ok && !conserved && !via_bracket && mon.classification == ConservationStatus::Failed;

  bool rejected = false;
  try {
    io::parse_system(R"({"name": "degenerate", "N": 1, "lagrangian": "qd1"})");
  } catch (const DegenerateLagrangianError&) {
    rejected = true;
  }
  std::ostringstream out, err;
  const int code = cli::run({"check", kData + "/negative/degenerate.json"}, out, err);
  d << " L = qd1 rejected at build: " << rejected << ", CLI exit " << code;
  ok = ok && rejected && code == 1;
  return {ok, d.str()};
}

}  // namespace

int main() {
  std::cout << std::boolalpha;
  criterion(1, "Noether roundtrip over the golden corpus", noether_roundtrip);
  criterion(2, "generator action equals the bracket", symmetry_action_suite);
  criterion(3, "commutator of generators is the generator of the bracket", commutator_suite);
  criterion(4, "bracket axioms", bracket_axioms);
  criterion(5, "LRL vector global on Kepler, local on the perturbed orbit", lrl_phenomenology);
  criterion(6, "energy generates time translation", energy_time_translation);
  criterion(7, "action-angle pipeline on oscillators", liouville_pipeline);
  criterion(8, "bracket series matches the ODE flow", series_ode_agreement);
  criterion(9, "gauge-extended flows act identically on solutions", gauge_equivalence);
  criterion(10, "negative controls", negative_controls);
  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
  return failures == 0 ? 0 : 1;
}
