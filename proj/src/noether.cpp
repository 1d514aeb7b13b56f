#include "mechsym/noether.hpp"

#include <map>

#include "mechsym/sym/calculus.hpp"
#include "mechsym/sym/integral.hpp"
#include "mechsym/sym/polynomial.hpp"
#include "mechsym/sym/printer.hpp"
#include "mechsym/sym/simplify.hpp"

namespace mechsym {
namespace {

using sym::diff;
using sym::simplify;
using sym::substitute;

std::size_t sz(int i) { return static_cast<std::size_t>(i); }

Expr num(double x) { return Expr(sym::Number::from_double(x)); }

std::vector<double> or_zeros(const std::vector<double>& v, int n) {
  return v.empty() ? std::vector<double>(sz(n), 0.0) : v;
}

}  // namespace

const char* kind_name(IntegralKind k) {
  return k == IntegralKind::ConstantOfMotion ? "constant-of-motion" : "integral-of-motion";
}

const char* status_name(ConservationStatus s) {
  switch (s) {
    case ConservationStatus::SymbolicVerified: return "symbolic-verified";
    case ConservationStatus::NumericLocal: return "numeric-local";
    case ConservationStatus::NumericGlobal: return "numeric-global";
    case ConservationStatus::Failed: return "failed";
  }
  return "?";
}

const char* class_name(SymmetryClass::Tag t) { return t == SymmetryClass::Tag::Point ? "point" : "dynamical"; }

ExprVector generator_rates(const LagrangianSystem& sys, const SymmetryGenerator& gen) {
  ExprVector out;
  for (const auto& p : gen.P) out.push_back(sys.Dt(p));
  return out;
}

Expr generator_action(const LagrangianSystem& sys, const SymmetryGenerator& gen, const Expr& F) {
  const auto rates = generator_rates(sys, gen);
  const auto& S = sys.space();
  Expr out = 0;
  for (int i = 0; i < sys.dof(); ++i) {
    out += gen.P[sz(i)] * diff(F, S.q(i)) + rates[sz(i)] * diff(F, S.qd(i));
  }
  return simplify(out);
}

EulerOperators el_operators(const VariableSpace& space, const Expr& F) {
  EulerOperators ops;
  for (int i = 0; i < space.dof(); ++i) {
    const Expr Fq = diff(F, space.q(i));
    const Expr Fqd = diff(F, space.qd(i));
    const Expr Fqdd = diff(F, space.qdd(i));
    const Expr DFqd = sym::jet_total_derivative(Fqd, space);
    const Expr DFqdd = sym::jet_total_derivative(Fqdd, space);
    const Expr DDFqdd = sym::jet_total_derivative(DFqdd, space);
    ops.E0.push_back(simplify(Fq - DFqd + DDFqdd));
    ops.E1.push_back(simplify(Fqd - 2 * DFqdd));
    ops.E2.push_back(Fqdd);
  }
  return ops;
}

ConservedQuantity is_conserved(const LagrangianSystem& sys, const Expr& C, const sym::CheckOptions& opts,
                               std::string name) {
  require_state_function(sys, C, "conserved quantity");
  const auto o = sys.pinned(opts);
  ConservedQuantity cq;
  cq.name = std::move(name);
  cq.C = C;
  for (int i = 0; i < sys.dof(); ++i) cq.multipliers.push_back(diff(C, sys.space().qd(i)));
  cq.kind = sym::check_zero({diff(C, sys.space().t())}, o).ok() ? IntegralKind::ConstantOfMotion
                                                                 : IntegralKind::IntegralOfMotion;
  cq.solution_rate = sys.Dt(C);
  cq.check = sym::check_zero({cq.solution_rate}, o);
  cq.status = cq.check.ok() ? ConservationStatus::SymbolicVerified : ConservationStatus::Failed;
  return cq;
}

SymmetryCheck is_eom_symmetry(const LagrangianSystem& sys, const SymmetryGenerator& gen,
                              const sym::CheckOptions& opts) {
  const auto& S = sys.space();
  const auto rates = generator_rates(sys, gen);
  SymmetryCheck out;
  for (int i = 0; i < sys.dof(); ++i) {
    const Expr& fi = sys.force()[sz(i)];
    Expr r = sys.Dt(rates[sz(i)]);
    for (int j = 0; j < sys.dof(); ++j) {
      r -= gen.P[sz(j)] * diff(fi, S.q(j)) + rates[sz(j)] * diff(fi, S.qd(j));
    }
    out.residual.push_back(simplify(r));
  }
  out.check = sym::check_zero(out.residual, sys.pinned(opts));
  out.ok = out.check.ok();
  return out;
}

VariationalReport is_variational_symmetry(const LagrangianSystem& sys, const SymmetryGenerator& gen,
                                          const sym::CheckOptions& opts, const Expr* C) {
  const auto& S = sys.space();
  VariationalReport rep;
  Expr pr = 0;
  for (int i = 0; i < sys.dof(); ++i) {
    pr += gen.P[sz(i)] * diff(sys.lagrangian(), S.q(i)) +
          sym::total_derivative(gen.P[sz(i)], S) * sys.momenta()[sz(i)];
  }
  rep.prolonged_lagrangian = simplify(pr);
  rep.residual = el_operators(S, rep.prolonged_lagrangian).E0;
  rep.check = sym::check_zero(rep.residual, sys.pinned(opts));
  rep.verdict = rep.check.ok();
  if (!rep.verdict) return rep;

  std::optional<Expr> c;
  if (C) {
    c = *C;
  } else {
    const auto rec = p_to_c(sys, gen, {}, opts);
    if (rec.ok && !rec.used_quadrature) c = rec.C;
  }
  if (c) {
    Expr w = -*c;
    for (int i = 0; i < sys.dof(); ++i) w += gen.P[sz(i)] * sys.momenta()[sz(i)];
    rep.W = simplify(w);
  }
  return rep;
}

SymmetryGenerator c_to_p(const LagrangianSystem& sys, const Expr& C, std::string name) {
  SymmetryGenerator gen;
  gen.name = std::move(name);
  const auto N = sz(sys.dof());
  ExprVector grad;
  for (int j = 0; j < sys.dof(); ++j) grad.push_back(diff(C, sys.space().qd(j)));
  for (std::size_t i = 0; i < N; ++i) {
    Expr p = 0;
    for (std::size_t j = 0; j < N; ++j) p += sys.g_inv()[i][j] * grad[j];
    gen.P.push_back(simplify(p));
  }
  return gen;
}

Reconstruction p_to_c(const LagrangianSystem& sys, const SymmetryGenerator& gen, const BasePoint& base,
                      const sym::CheckOptions& opts) {
  const auto& S = sys.space();
  const int n = sys.dof();
  const auto N = sz(n);
  const auto o = sys.pinned(opts);
  Reconstruction rec;

  // C_qd = g P, S = f.g.P, C_q = -(dS/dqd + d_t G + qd.d_q G), C_t = -S - qd.C_q
  ExprVector G(N);
  for (std::size_t k = 0; k < N; ++k) {
    Expr gk = 0;
    for (std::size_t j = 0; j < N; ++j) gk += sys.g()[k][j] * gen.P[j];
    G[k] = simplify(gk);
  }
  Expr source = 0;
  for (std::size_t k = 0; k < N; ++k) source += sys.force()[k] * G[k];
  source = simplify(source);
  ExprVector Cq(N);
  for (int k = 0; k < n; ++k) {
    Expr c = diff(source, S.qd(k)) + diff(G[sz(k)], S.t());
    for (int i = 0; i < n; ++i) c += S.QD(i) * diff(G[sz(k)], S.q(i));
    Cq[sz(k)] = simplify(-c);
  }
  Expr Ct = -source;
  for (int i = 0; i < n; ++i) Ct -= S.QD(i) * Cq[sz(i)];
  Ct = simplify(Ct);

  rec.gradient.push_back(Ct);
  rec.gradient.insert(rec.gradient.end(), Cq.begin(), Cq.end());
  rec.gradient.insert(rec.gradient.end(), G.begin(), G.end());
  const auto vars = S.state_symbols();

  // closure: d_a C_b == d_b C_a for every pair
  std::vector<std::pair<Expr, Expr>> pairs;
  std::vector<std::string> labels;
  for (std::size_t a = 0; a < vars.size(); ++a) {
    for (std::size_t b = a + 1; b < vars.size(); ++b) {
      pairs.emplace_back(diff(rec.gradient[b], vars[a]), diff(rec.gradient[a], vars[b]));
      labels.push_back("d/d" + vars[a].name + " C_" + vars[b].name + " vs d/d" + vars[b].name + " C_" +
                       vars[a].name);
    }
  }
  rec.closure = sym::check_pairs(pairs, o);
  if (!rec.closure.ok()) {
    if (rec.closure.failing_index >= 0) rec.closure_pair = labels[sz(rec.closure.failing_index)];
    rec.failure = rec.closure.verdict == sym::Verdict::False
                      ? "gradient is not closed (" + rec.closure_pair + "): not a variational symmetry"
                      : "closure check inconclusive: " + rec.closure.detail;
    return rec;
  }

  const Symbol s = Symbol::param("$s");
  const double t0 = base.t;
  const auto q0 = or_zeros(base.q, n);
  const auto qd0 = or_zeros(base.qd, n);
  if (q0.size() != N || qd0.size() != N) {
    rec.failure = "base point has the wrong dimension";
    return rec;
  }

  auto leg = [&](const Expr& component, std::map<Symbol, Expr> fixed, const Symbol& var, const Expr& lower,
                 const Expr& upper) -> Expr {
    fixed[var] = Expr(s);
    const Expr integrand = simplify(substitute(component, fixed));
    if (integrand.is_zero()) return Expr(0);
    if (auto coeffs = sym::polynomial_coefficients(integrand, s)) {
      const Expr F = sym::integrate_polynomial(*coeffs, s);
      return substitute(F, {{s, upper}}) - substitute(F, {{s, lower}});
    }
    std::map<Symbol, Expr> params;
    for (const auto& sy : sym::free_symbols(integrand)) {
      if (!sy.is_param() || sy == s) continue;
      auto it = sys.parameter_values().find(sy.name);
      if (it == sys.parameter_values().end()) {
        throw std::invalid_argument("leg along " + var.name + " needs quadrature but parameter " + sy.name +
                                    " has no value");
      }
      params.emplace(sy, num(it->second));
    }
    rec.used_quadrature = true;
    return sym::definite_integral(substitute(integrand, params), s, lower, upper);
  };

  // value of a state coordinate on the path: index into vars
  auto build = [&](bool forward) -> Expr {
    // cur: the coordinates already moved to their final (symbolic) value
    std::map<Symbol, Expr> at_base;
    at_base[S.t()] = num(t0);
    for (int i = 0; i < n; ++i) {
      at_base[S.q(i)] = num(q0[sz(i)]);
      at_base[S.qd(i)] = num(qd0[sz(i)]);
    }
    std::vector<std::size_t> order(vars.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = forward ? k : order.size() - 1 - k;
    std::map<Symbol, Expr> point = at_base;
    Expr total = 0;
    for (std::size_t k : order) {
      const Symbol& v = vars[k];
      std::map<Symbol, Expr> fixed = point;
      fixed.erase(v);
      total += leg(rec.gradient[k], fixed, v, at_base[v], Expr(v));
      point[v] = Expr(v);
    }
    return simplify(total);
  };

  try {
    rec.C = build(true);
    const Expr reversed = build(false);
    rec.path = sym::equals_numeric(rec.C, reversed, o);
  } catch (const std::invalid_argument& e) {
    rec.failure = e.what();
    return rec;
  }
  if (rec.path.verdict == sym::Verdict::False) {
    rec.failure = "line integral depends on the path";
    return rec;
  }
  rec.ok = true;
  return rec;
}

SymmetryClass classify(const VariableSpace& space, const SymmetryGenerator& gen, const sym::CheckOptions& opts) {
  SymmetryClass out;
  const int n = space.dof();
  const Expr tau = simplify(-diff(gen.P[0], space.qd(0)));
  std::vector<Expr> must_vanish;
  for (int j = 0; j < n; ++j) must_vanish.push_back(diff(tau, space.qd(j)));
  if (!sym::check_zero(must_vanish, opts).ok()) {
    out.reason = "tau = " + sym::to_string(tau) + " depends on the velocities";
    return out;
  }
  must_vanish.clear();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Expr d = diff(gen.P[sz(i)], space.qd(j));
      if (i == j) d = d + tau;
      must_vanish.push_back(simplify(d));
    }
  }
  const auto pattern = sym::check_zero(must_vanish, opts);
  if (!pattern.ok()) {
    out.reason = "dP/dqd is not a multiple of the identity";
    return out;
  }
  ExprVector eta;
  must_vanish.clear();
  for (int i = 0; i < n; ++i) {
    eta.push_back(simplify(gen.P[sz(i)] + tau * space.QD(i)));
    for (int j = 0; j < n; ++j) must_vanish.push_back(diff(eta.back(), space.qd(j)));
  }
  if (!sym::check_zero(must_vanish, opts).ok()) {
    out.reason = "eta depends on the velocities";
    return out;
  }
  out.tag = SymmetryClass::Tag::Point;
  out.tau = tau;
  out.eta = std::move(eta);
  return out;
}

}  // namespace mechsym
