#include "mechsym/liouville.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <mutex>

#include "mechsym/bracket.hpp"
#include "mechsym/sym/calculus.hpp"
#include "mechsym/sym/integral.hpp"
#include "mechsym/sym/matrix.hpp"
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

// Parameter values in declaration order; throws if an output needs a
// parameter without a value.
std::vector<double> parameter_values(const LagrangianSystem& sys, const ExprVector& outputs) {
  std::vector<double> out;
  for (const auto& p : sys.space().parameters()) {
    auto it = sys.parameter_values().find(p);
    if (it != sys.parameter_values().end()) {
      out.push_back(it->second);
      continue;
    }
    for (const auto& e : outputs) {
      if (sym::depends_on(e, Symbol::param(p))) throw std::invalid_argument("parameter " + p + " has no numeric value");
    }
    out.push_back(0.0);
  }
  return out;
}

std::vector<Symbol> parameter_symbols(const LagrangianSystem& sys) {
  std::vector<Symbol> out;
  for (const auto& p : sys.space().parameters()) out.push_back(Symbol::param(p));
  return out;
}

// t, q..., $C..., params...
std::vector<Symbol> chart_inputs(const LagrangianSystem& sys, const VelocityInversion& inv) {
  std::vector<Symbol> in{sys.space().t()};
  for (int i = 0; i < sys.dof(); ++i) in.push_back(sys.space().q(i));
  in.insert(in.end(), inv.constants.begin(), inv.constants.end());
  const auto ps = parameter_symbols(sys);
  in.insert(in.end(), ps.begin(), ps.end());
  return in;
}

std::map<Symbol, Expr> velocity_map(const LagrangianSystem& sys, const VelocityInversion& inv) {
  std::map<Symbol, Expr> m;
  for (int k = 0; k < sys.dof(); ++k) m[sys.space().qd(k)] = inv.qd[sz(k)];
  return m;
}

// ---------------------------------------------------------------------------
// Newton-backed inversion. All N components share one solver; the kernel for
// component k returns x_k. Derivatives follow from the implicit function
// theorem with the symbolic velocity Jacobian.

struct NewtonGroup;

class NewtonKernel final : public sym::Kernel {
 public:
  NewtonKernel(std::shared_ptr<NewtonGroup> g, std::size_t k) : group_(std::move(g)), k_(k) {}
  std::string name() const override { return "qd" + std::to_string(k_ + 1) + "_newton"; }
  int arity() const override;
  std::optional<double> evaluate(std::span<const double> args) const override;
  Expr partial(int a, std::span<const Expr> args) const override;

 private:
  std::shared_ptr<NewtonGroup> group_;
  std::size_t k_;
};

struct NewtonGroup {
  int n = 0;
  VariableSpace space{1};
  ExprVector members;  // parameter values substituted
  std::vector<double> seed;
  InversionOptions opts;
  std::unique_ptr<sym::Program> program;  // C_m then dC_m/dqd_l, inputs t, q, qd
  ExprMatrix jac;                         // dC_m/dqd_l
  ExprMatrix jac_inv;                     // built on first use
  mutable std::mutex mu;
  mutable std::map<std::vector<double>, std::optional<std::vector<double>>> cache;
  std::vector<std::weak_ptr<const NewtonKernel>> kernels;

  std::optional<std::vector<double>> solve(std::span<const double> args) {
    std::vector<double> key(args.begin(), args.end());
    {
      std::lock_guard<std::mutex> lock(mu);
      auto it = cache.find(key);
      if (it != cache.end()) return it->second;
    }
    const auto N = sz(n);
    std::vector<double> in(1 + 2 * N);
    in[0] = args[0];
    for (std::size_t i = 0; i < N; ++i) in[1 + i] = args[1 + i];
    const double* c = args.data() + 1 + N;
    double cscale = 1.0;
    for (std::size_t i = 0; i < N; ++i) cscale = std::max(cscale, 1.0 + std::abs(c[i]));
    std::vector<double> out(N + N * N);
    auto residual = [&](const std::vector<double>& x, Eigen::VectorXd& F, Eigen::MatrixXd& J) {
      for (std::size_t i = 0; i < N; ++i) in[1 + N + i] = x[i];
      if (!program->run(std::span<const double>(in), out)) return false;
      F.resize(n);
      J.resize(n, n);
      for (std::size_t m = 0; m < N; ++m) {
        F(static_cast<Eigen::Index>(m)) = out[m] - c[m];
        for (std::size_t l = 0; l < N; ++l)
          J(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(l)) = out[N + m * N + l];
      }
      return true;
    };
    std::optional<std::vector<double>> result;
    std::vector<double> x = seed;
    Eigen::VectorXd F;
    Eigen::MatrixXd J;
    if (residual(x, F, J)) {
      for (int it = 0; it < opts.newton_max_iter; ++it) {
        const double norm = F.lpNorm<Eigen::Infinity>();
        if (norm <= opts.newton_tol * cscale) {
          result = x;
          break;
        }
        const Eigen::VectorXd dx = J.fullPivLu().solve(-F);
        if (!dx.allFinite()) break;
        bool accepted = false;
        for (double lambda = 1.0; lambda > 1e-6; lambda *= 0.5) {
          std::vector<double> trial = x;
          for (std::size_t i = 0; i < N; ++i) trial[i] += lambda * dx(static_cast<Eigen::Index>(i));
          Eigen::VectorXd Ft;
          Eigen::MatrixXd Jt;
          if (residual(trial, Ft, Jt) && Ft.lpNorm<Eigen::Infinity>() < norm) {
            x = std::move(trial);
            F = std::move(Ft);
            J = std::move(Jt);
            accepted = true;
            break;
          }
        }
        if (!accepted) {
          if (norm <= 1e3 * opts.newton_tol * cscale) result = x;  // stalled at round-off
          break;
        }
      }
    }
    std::lock_guard<std::mutex> lock(mu);
    if (cache.size() > 4096) cache.clear();
    cache.emplace(std::move(key), result);
    return result;
  }

  std::shared_ptr<const NewtonKernel> kernel(const std::shared_ptr<NewtonGroup>& self, std::size_t k) {
    std::lock_guard<std::mutex> lock(mu);
    if (auto p = kernels[k].lock()) return p;
    auto p = std::make_shared<const NewtonKernel>(self, k);
    kernels[k] = p;
    return p;
  }

  const ExprMatrix& inverse_jacobian() {
    std::lock_guard<std::mutex> lock(mu);
    if (jac_inv.empty()) jac_inv = sym::adjugate_inverse(jac);
    return jac_inv;
  }
};

int NewtonKernel::arity() const { return 1 + 2 * group_->n; }

std::optional<double> NewtonKernel::evaluate(std::span<const double> args) const {
  const auto x = group_->solve(args);
  if (!x) return std::nullopt;
  return (*x)[k_];
}

Expr NewtonKernel::partial(int a, std::span<const Expr> args) const {
  const int n = group_->n;
  const auto N = sz(n);
  const auto& S = group_->space;
  std::vector<Expr> argv(args.begin(), args.end());
  std::map<Symbol, Expr> at;
  at[S.t()] = argv[0];
  for (int i = 0; i < n; ++i) {
    at[S.q(i)] = argv[1 + sz(i)];
    at[S.qd(i)] = sym::call(group_->kernel(group_, sz(i)), argv);
  }
  // x = x(t, q, c) with C(t, q, x) = c, so dx/da = -J^-1 (dC/da - dc/da).
  ExprVector b(N);
  if (a <= n) {
    const Symbol v = a == 0 ? S.t() : S.q(a - 1);
    for (std::size_t m = 0; m < N; ++m) b[m] = diff(group_->members[m], v);
  } else {
    for (std::size_t m = 0; m < N; ++m) b[m] = Expr(m == sz(a - 1 - n) ? -1 : 0);
  }
  const auto& Jinv = group_->inverse_jacobian();
  Expr out = 0;
  for (std::size_t m = 0; m < N; ++m) out -= Jinv[k_][m] * b[m];
  return simplify(substitute(out, at));
}

// ---------------------------------------------------------------------------
// Antiderivatives along one leg.

// a * Q^e with Q = alpha + beta s + gamma s^2, e = +-1/2, a free of s.
struct RootTerm {
  Expr a;
  std::vector<Expr> q;
  bool inverse = false;
};

std::optional<RootTerm> match_root(const Expr& base, const Expr& exponent, const Symbol& s) {
  if (!exponent.is_number()) return std::nullopt;
  const auto& e = exponent.number();
  const bool half = e == sym::Number::rational(1, 2);
  const bool minus_half = e == sym::Number::rational(-1, 2);
  if (!half && !minus_half) return std::nullopt;
  auto coeffs = sym::polynomial_coefficients(base, s);
  if (!coeffs || coeffs->size() < 2 || coeffs->size() > 3) return std::nullopt;
  RootTerm r;
  r.q = *coeffs;
  r.q.resize(3, Expr(0));
  if (!r.q[2].is_number()) return std::nullopt;  // the sign of gamma picks the form
  r.inverse = minus_half;
  r.a = Expr(1);
  return r;
}

std::optional<RootTerm> match_root_term(const Expr& term, const Symbol& s) {
  if (term.kind() == sym::Kind::Pow) return match_root(term.args()[0], term.args()[1], s);
  if (term.kind() != sym::Kind::Mul) return std::nullopt;
  std::optional<RootTerm> found;
  std::vector<Expr> rest;
  for (const auto& f : term.args()) {
    if (!sym::depends_on(f, s)) {
      rest.push_back(f);
      continue;
    }
    if (found || f.kind() != sym::Kind::Pow) return std::nullopt;
    found = match_root(f.args()[0], f.args()[1], s);
    if (!found) return std::nullopt;
  }
  if (found) found->a = sym::mul(rest);
  return found;
}

// Antiderivative in s of a * Q^(+-1/2).
Expr root_antiderivative(const RootTerm& r, const Symbol& s) {
  const Expr S(s);
  const Expr& alpha = r.q[0];
  const Expr& beta = r.q[1];
  const Expr& gamma = r.q[2];
  const Expr Q = alpha + beta * S + gamma * S * S;
  const Expr root = sym::sqrt(Q);
  if (gamma.is_zero()) {
    // linear Q
    if (r.inverse) return r.a * 2 * root / beta;
    return r.a * 2 * Q * root / (3 * beta);
  }
  const bool negative = gamma.number().is_negative();
  const Expr k = negative ? -gamma : gamma;
  const Expr rk = sym::sqrt(k);
  const Expr u = S + beta / (2 * gamma);
  const Expr R = alpha - beta * beta / (4 * gamma);
  // Q = R - k u^2 (gamma < 0) or R + k u^2 (gamma > 0)
  const Expr angle = negative ? sym::atan2(rk * u, root) : sym::log(sym::abs(rk * u + root));
  if (r.inverse) return r.a * angle / rk;
  return r.a * (u * root / 2 + R * angle / (2 * rk));
}

struct LegIntegrator {
  Symbol s = Symbol::param("$s");
  bool used_quadrature = false;

  // integral of integrand(s) from lower to upper
  Expr operator()(const Expr& integrand_in, const Expr& lower, const Expr& upper) {
    const Expr integrand = simplify(integrand_in);
    if (integrand.is_zero()) return Expr(0);
    if (auto F = antiderivative(integrand)) {
      return simplify(substitute(*F, {{s, upper}}) - substitute(*F, {{s, lower}}));
    }
    used_quadrature = true;
    return sym::definite_integral(integrand, s, lower, upper);
  }

  std::optional<Expr> antiderivative(const Expr& integrand) const {
    if (auto coeffs = sym::polynomial_coefficients(integrand, s)) return sym::integrate_polynomial(*coeffs, s);
    std::vector<Expr> terms =
        integrand.kind() == sym::Kind::Add ? integrand.args() : std::vector<Expr>{integrand};
    Expr F = 0;
    for (const auto& term : terms) {
      if (auto coeffs = sym::polynomial_coefficients(term, s)) {
        F += sym::integrate_polynomial(*coeffs, s);
        continue;
      }
      auto r = match_root_term(term, s);
      if (!r) return std::nullopt;
      F += root_antiderivative(*r, s);
    }
    return F;
  }
};

// Point on leg j of the axis path: q_i final for i < j, s for i == j, base
// value for i > j.
std::map<Symbol, Expr> leg_point(const VariableSpace& S, int j, const std::vector<double>& q0, const Symbol& s) {
  std::map<Symbol, Expr> m;
  for (int i = 0; i < S.dof(); ++i) {
    if (i < j) continue;
    m[S.q(i)] = i == j ? Expr(s) : num(q0[sz(i)]);
  }
  return m;
}

Expr path_integral(const LagrangianSystem& sys, const ExprVector& one_form, const std::vector<double>& q0,
                   LegIntegrator& legs) {
  // one_form[j] is the coefficient of dq^j as a function of (t, q, C)
  Expr total = 0;
  for (int j = 0; j < sys.dof(); ++j) {
    const auto at = leg_point(sys.space(), j, q0, legs.s);
    total += legs(substitute(one_form[sz(j)], at), num(q0[sz(j)]), sys.space().Q(j));
  }
  return simplify(total);
}

std::vector<State> chart_samples(const LagrangianSystem& sys, const ChartProgram& chart, const sym::CheckOptions& o,
                                 int wanted) {
  const int n = sys.dof();
  sym::Sampler sampler(sys.space().state_symbols(), o);
  std::vector<State> out;
  std::vector<double> v;
  for (int draw = 0; draw < 20 * wanted && static_cast<int>(out.size()) < wanted; ++draw) {
    sampler.next(v);
    State s;
    s.t = v[0];
    s.q.assign(v.begin() + 1, v.begin() + 1 + n);
    s.qd.assign(v.begin() + 1 + n, v.begin() + 1 + 2 * n);
    if (chart.contains(s)) out.push_back(std::move(s));
  }
  return out;
}

void validate(const LagrangianSystem& sys, const CommutingFamily& family, const VelocityInversion& inv,
              const sym::CheckOptions& opts, const ValidationOptions& vopts, LiouvilleIntegrals& res) {
  const ChartProgram chart(sys, family, inv, {});
  auto o = chart_options(sys, inv, opts);
  o.seed = vopts.seed;
  auto starts = chart_samples(sys, chart, o, vopts.trajectories);
  std::vector<std::future<std::vector<ChartDrift>>> jobs;
  for (const auto& s : starts) {
    jobs.push_back(std::async(std::launch::async, [&, s] {
      return drift_in_chart(sys, family, inv, res.integrals, s, s.t + vopts.t_end, vopts.tol);
    }));
  }
  res.drift.clear();
  for (const auto& cq : res.integrals) res.drift.push_back(ChartDrift{cq.name, 0.0, 0, 0});
  for (auto& j : jobs) {
    const auto d = j.get();
    for (std::size_t i = 0; i < d.size(); ++i) {
      res.drift[i].max_drift = std::max(res.drift[i].max_drift, d[i].max_drift);
      res.drift[i].nodes += d[i].nodes;
      res.drift[i].chart_exits += d[i].chart_exits;
    }
  }
  for (std::size_t i = 0; i < res.integrals.size(); ++i) {
    auto& cq = res.integrals[i];
    if (cq.status == ConservationStatus::SymbolicVerified) continue;
    const bool numeric_ok = !starts.empty() && res.drift[i].nodes > 0 && res.drift[i].max_drift < vopts.drift_tol;
    cq.status = numeric_ok ? ConservationStatus::NumericLocal : ConservationStatus::Failed;
  }
  if (starts.empty()) res.note += "no validation trajectory could be started inside the chart; ";
}

}  // namespace

// ---------------------------------------------------------------------------

CommutingFamily verify_family(const LagrangianSystem& sys, const std::vector<ConservedQuantity>& members,
                              const sym::CheckOptions& opts) {
  CommutingFamily fam;
  fam.members = members;
  const int n = sys.dof();
  if (static_cast<int>(members.size()) != n) {
    fam.failure = "a family needs " + std::to_string(n) + " members, got " + std::to_string(members.size());
    return fam;
  }
  fam.conserved = true;
  for (const auto& m : members) {
    if (m.status != ConservationStatus::SymbolicVerified) {
      fam.conserved = false;
      if (fam.failure.empty()) fam.failure = m.name + " is not a verified conserved quantity";
    }
  }
  const auto o = sys.pinned(opts);
  fam.commuting = true;
  for (std::size_t i = 0; i < members.size() && fam.commuting; ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      const Expr b = pbracket(sys, members[i].C, members[j].C);
      auto r = sym::equals_numeric(b, Expr(0), o);
      if (!r.ok()) {
        fam.commuting = false;
        fam.pair_i = static_cast<int>(i);
        fam.pair_j = static_cast<int>(j);
        fam.bracket_check = r;
        if (fam.failure.empty()) {
          fam.failure = "{" + members[i].name + ", " + members[j].name + "} = " + sym::to_string(b) +
                        " does not vanish";
        }
        break;
      }
    }
  }
  ExprVector jac;
  for (const auto& m : members)
    for (int k = 0; k < n; ++k) jac.push_back(diff(m.C, sys.space().qd(k)));
  const StateProgram prog(sys, jac);
  sym::Sampler sampler(sys.space().state_symbols(), o);
  std::vector<double> v, out(jac.size());
  int draws = 0;
  while (fam.jacobian_samples + fam.jacobian_rejected < o.trials && draws++ < 20 * o.trials) {
    sampler.next(v);
    const std::span<const double> all(v);
    if (!prog.run(v[0], all.subspan(1, sz(n)), all.subspan(1 + sz(n), sz(n)), out)) continue;
    Eigen::MatrixXd J(n, n);
    for (int m = 0; m < n; ++m)
      for (int k = 0; k < n; ++k) J(m, k) = out[sz(m * n + k)];
    if (std::abs(J.determinant()) > 1e-10 * std::max(1.0, J.norm())) {
      ++fam.jacobian_samples;
    } else {
      ++fam.jacobian_rejected;
    }
  }
  const int total = fam.jacobian_samples + fam.jacobian_rejected;
  fam.independent = total > 0 && fam.jacobian_samples > 0.9 * total;
  if (!fam.independent && fam.failure.empty()) {
    fam.failure = total == 0 ? "velocity Jacobian could not be evaluated"
                             : "velocity Jacobian dC/dqd is singular at " + std::to_string(fam.jacobian_rejected) +
                                   " of " + std::to_string(total) + " samples";
  }
  return fam;
}

VelocityInversion invert_velocities(const LagrangianSystem& sys, const CommutingFamily& family,
                                    const std::optional<State>& seed, const InversionOptions& opts) {
  const int n = sys.dof();
  const auto N = sz(n);
  const auto& S = sys.space();
  if (family.members.size() != N) throw std::invalid_argument("family size does not match the dof");
  VelocityInversion inv;
  for (int i = 0; i < n; ++i) inv.constants.push_back(Symbol::param("$C" + std::to_string(i + 1)));
  inv.qd.assign(N, Expr(0));
  inv.branch.assign(N, 0);
  inv.velocity_sign.assign(N, 0);
  if (seed) {
    if (seed->q.size() != N || seed->qd.size() != N) throw std::invalid_argument("seed has the wrong dimension");
    inv.seed = *seed;
  }

  // values at the seed, for branch selection
  sym::Assignment at_seed = sys.parameter_values();
  if (seed) {
    ExprVector cs;
    for (const auto& m : family.members) cs.push_back(m.C);
    const StateProgram prog(sys, cs);
    std::vector<double> c(N);
    std::string why;
    if (!prog.run(seed->t, seed->q, seed->qd, c, &why)) throw ChartError("family cannot be evaluated at the seed: " + why);
    at_seed[S.t().name] = seed->t;
    for (std::size_t i = 0; i < N; ++i) {
      at_seed[S.q(static_cast<int>(i)).name] = seed->q[i];
      at_seed[inv.constants[i].name] = c[i];
    }
  }
  auto value_at_seed = [&](const Expr& e) -> std::optional<double> {
    const auto r = sym::eval(e, at_seed);
    return r.ok() ? std::optional<double>(r.value) : std::nullopt;
  };

  if (!opts.force_numeric) {
    std::map<Symbol, Expr> solved;
    std::vector<bool> member_used(N, false), velocity_done(N, false);
    bool progress = true;
    while (solved.size() < N && progress) {
      progress = false;
      for (std::size_t m = 0; m < N && !progress; ++m) {
        if (member_used[m]) continue;
        const Expr eq = simplify(substitute(family.members[m].C, solved) - Expr(inv.constants[m]));
        int var = -1, count = 0;
        for (int k = 0; k < n; ++k) {
          if (!velocity_done[sz(k)] && sym::depends_on(eq, S.qd(k))) {
            var = k;
            ++count;
          }
        }
        if (count != 1) continue;
        auto coeffs = sym::polynomial_coefficients(eq, S.qd(var));
        if (!coeffs || coeffs->size() < 2 || coeffs->size() > 3) continue;
        const auto K = sz(var);
        Expr x;
        if (coeffs->size() == 2) {
          if ((*coeffs)[1].is_zero()) continue;
          x = simplify(-(*coeffs)[0] / (*coeffs)[1]);
        } else {
          const Expr &a0 = (*coeffs)[0], &a1 = (*coeffs)[1], &a2 = (*coeffs)[2];
          auto root = [&](int sign) {
            if (a1.is_zero()) return simplify(sign * sym::sqrt(-a0 / a2));
            return simplify((-a1 + sign * sym::sqrt(a1 * a1 - 4 * a2 * a0)) / (2 * a2));
          };
          if (!seed) throw ChartError("velocity qd" + std::to_string(var + 1) + " has two square-root branches; a seed state is needed");
          const double target = seed->qd[K];
          const auto plus = value_at_seed(root(1));
          const auto minus = value_at_seed(root(-1));
          const double tol = 1e-8 * (1 + std::abs(target));
          const bool p_ok = plus && std::abs(*plus - target) <= tol;
          const bool m_ok = minus && std::abs(*minus - target) <= tol;
          if (p_ok && m_ok) throw ChartError("the seed sits on the branch point of qd" + std::to_string(var + 1));
          if (!p_ok && !m_ok) throw ChartError("no branch of qd" + std::to_string(var + 1) + " reproduces the seed");
          const int sign = p_ok ? 1 : -1;
          x = root(sign);
          inv.branch[K] = sign;
          if (a1.is_zero()) inv.velocity_sign[K] = sign;
        }
        solved[S.qd(var)] = x;
        velocity_done[K] = true;
        member_used[m] = true;
        inv.solved_by.push_back(static_cast<int>(m));
        progress = true;
      }
    }
    if (solved.size() == N) {
      // earlier solutions may still refer to velocities solved later
      for (int round = 0; round < n; ++round)
        for (auto& [v, e] : solved) e = simplify(substitute(e, solved));
      for (int k = 0; k < n; ++k) inv.qd[sz(k)] = solved.at(S.qd(k));
      inv.symbolic = true;
      return inv;
    }
    inv.solved_by.clear();
    std::fill(inv.branch.begin(), inv.branch.end(), 0);
    std::fill(inv.velocity_sign.begin(), inv.velocity_sign.end(), 0);
  }

  if (!seed) throw ChartError("no closed-form inversion; Newton needs a seed state");
  auto group = std::make_shared<NewtonGroup>();
  group->n = n;
  group->space = S;
  std::map<Symbol, Expr> values;
  for (const auto& [name, v] : sys.parameter_values()) values[Symbol::param(name)] = num(v);
  for (const auto& m : family.members) {
    const Expr e = simplify(substitute(m.C, values));
    for (const auto& sy : sym::free_symbols(e)) {
      if (sy.is_param()) throw std::invalid_argument("parameter " + sy.name + " has no numeric value");
    }
    group->members.push_back(e);
  }
  ExprVector outputs = group->members;
  group->jac.assign(N, ExprVector(N));
  for (std::size_t m = 0; m < N; ++m) {
    for (int l = 0; l < n; ++l) {
      group->jac[m][sz(l)] = diff(group->members[m], S.qd(l));
      outputs.push_back(group->jac[m][sz(l)]);
    }
  }
  group->program = std::make_unique<sym::Program>(outputs, S.state_symbols());
  group->seed = seed->qd;
  group->opts = opts;
  group->kernels.resize(N);
  std::vector<Expr> args{S.T()};
  for (int i = 0; i < n; ++i) args.push_back(S.Q(i));
  for (const auto& c : inv.constants) args.emplace_back(c);
  for (std::size_t k = 0; k < N; ++k) inv.qd[k] = sym::call(group->kernel(group, k), args);
  inv.symbolic = false;
  return inv;
}

Expr pullback(const CommutingFamily& family, const VelocityInversion& inv, const Expr& e) {
  std::map<Symbol, Expr> m;
  for (std::size_t i = 0; i < inv.constants.size(); ++i) m[inv.constants[i]] = family.members[i].C;
  return simplify(substitute(e, m));
}

ChartProgram::ChartProgram(const LagrangianSystem& sys, const CommutingFamily& family, const VelocityInversion& inv,
                           const ExprVector& outputs)
    : n_(sys.dof()),
      members_([&] {
        ExprVector cs;
        for (const auto& m : family.members) cs.push_back(m.C);
        return cs;
      }(), sys.numeric_inputs()),
      inverse_(inv.qd, chart_inputs(sys, inv)),
      outputs_(outputs, chart_inputs(sys, inv)) {
  ExprVector all = inv.qd;
  all.insert(all.end(), outputs.begin(), outputs.end());
  for (const auto& m : family.members) all.push_back(m.C);
  params_ = parameter_values(sys, all);
}

bool ChartProgram::run(double t, std::span<const double> q, std::span<const double> c, std::span<double> out) const {
  std::vector<double> in{t};
  in.insert(in.end(), q.begin(), q.end());
  in.insert(in.end(), c.begin(), c.end());
  in.insert(in.end(), params_.begin(), params_.end());
  return outputs_.run(std::span<const double>(in), out);
}

bool ChartProgram::constants_at(const State& s, std::vector<double>& c) const {
  std::vector<double> in{s.t};
  in.insert(in.end(), s.q.begin(), s.q.end());
  in.insert(in.end(), s.qd.begin(), s.qd.end());
  in.insert(in.end(), params_.begin(), params_.end());
  c.resize(sz(n_));
  return members_.run(std::span<const double>(in), c);
}

bool ChartProgram::contains(const State& s, double tol) const {
  std::vector<double> c;
  if (!constants_at(s, c)) return false;
  std::vector<double> in{s.t};
  in.insert(in.end(), s.q.begin(), s.q.end());
  in.insert(in.end(), c.begin(), c.end());
  in.insert(in.end(), params_.begin(), params_.end());
  std::vector<double> qd(sz(n_));
  if (!inverse_.run(std::span<const double>(in), qd)) return false;
  for (std::size_t k = 0; k < qd.size(); ++k) {
    if (std::abs(qd[k] - s.qd[k]) > tol * (1 + std::abs(s.qd[k]))) return false;
  }
  return true;
}

sym::CheckOptions chart_options(const LagrangianSystem& sys, const VelocityInversion& inv,
                                const sym::CheckOptions& base) {
  auto o = sys.pinned(base);
  const int n = sys.dof();
  const auto& S = sys.space();
  bool half_lines = inv.symbolic;
  for (int k = 0; k < n; ++k) {
    if (inv.branch[sz(k)] != 0 && inv.velocity_sign[sz(k)] == 0) half_lines = false;
  }
  if (half_lines) {
    for (int k = 0; k < n; ++k) {
      const int sgn = inv.velocity_sign[sz(k)];
      if (sgn > 0) o.boxes[S.qd(k).name] = {0.05, o.box.hi};
      if (sgn < 0) o.boxes[S.qd(k).name] = {o.box.lo, -0.05};
    }
    return o;
  }
  constexpr double r = 0.25;
  o.boxes[S.t().name] = {inv.seed.t - r, inv.seed.t + r};
  for (int k = 0; k < n; ++k) {
    o.boxes[S.q(k).name] = {inv.seed.q[sz(k)] - r, inv.seed.q[sz(k)] + r};
    o.boxes[S.qd(k).name] = {inv.seed.qd[sz(k)] - r, inv.seed.qd[sz(k)] + r};
  }
  return o;
}

GeneratingFunction generating_function(const LagrangianSystem& sys, const CommutingFamily& family,
                                       const VelocityInversion& inv, const ChartBase& base) {
  const int n = sys.dof();
  GeneratingFunction gf;
  gf.base = base;
  gf.base.q = or_zeros(base.q, n);
  if (gf.base.q.size() != sz(n)) throw std::invalid_argument("base point has the wrong dimension");
  const auto vel = velocity_map(sys, inv);
  ExprVector p;
  for (const auto& pj : sys.momenta()) p.push_back(simplify(substitute(pj, vel)));
  LegIntegrator legs;
  gf.S = path_integral(sys, p, gf.base.q, legs);
  gf.used_quadrature = legs.used_quadrature;
  if (!inv.seed.q.empty()) {
    const ChartProgram prog(sys, family, inv, {gf.S});
    std::vector<double> c;
    double out = 0;
    if (!prog.constants_at(inv.seed, c) || !prog.run(inv.seed.t, inv.seed.q, c, {&out, 1})) {
      throw ChartError("S cannot be evaluated at the seed: the path from the base leaves the chart; choose another "
                       "base point or chart");
    }
  }
  return gf;
}

Angles angles(const LagrangianSystem& sys, const CommutingFamily& family, const VelocityInversion& inv,
              const GeneratingFunction& gf) {
  const int n = sys.dof();
  const auto N = sz(n);
  const auto vel = velocity_map(sys, inv);
  ExprMatrix g(N, ExprVector(N));
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t k = 0; k < N; ++k) g[j][k] = simplify(substitute(sys.g()[j][k], vel));
  Angles out;
  LegIntegrator legs;
  for (std::size_t i = 0; i < N; ++i) {
    ExprVector dqd(N);
    for (std::size_t k = 0; k < N; ++k) dqd[k] = diff(inv.qd[k], inv.constants[i]);
    ExprVector form(N);
    for (std::size_t j = 0; j < N; ++j) {
      Expr f = 0;
      for (std::size_t k = 0; k < N; ++k) f += g[j][k] * dqd[k];
      form[j] = simplify(f);
    }
    out.theta.push_back(path_integral(sys, form, gf.base.q, legs));
    out.pullback.push_back(pullback(family, inv, out.theta.back()));
  }
  out.used_quadrature = legs.used_quadrature;
  return out;
}

std::vector<ChartDrift> drift_in_chart(const LagrangianSystem& sys, const CommutingFamily& family,
                                       const VelocityInversion& inv, const std::vector<ConservedQuantity>& integrals,
                                       const State& initial, double t_end, double tol) {
  const ChartProgram chart(sys, family, inv, {});
  ExprVector exprs;
  for (const auto& cq : integrals) exprs.push_back(cq.C);
  const StateProgram prog(sys, exprs);
  const auto traj = integrate(sys, initial, t_end, tol);
  std::vector<ChartDrift> out;
  for (const auto& cq : integrals) out.push_back(ChartDrift{cq.name, 0.0, 0, 0});
  const std::size_t m = integrals.size();
  std::vector<double> lo(m), hi(m), v(m);
  bool inside = false;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const State s = traj.node(k);
    const bool here = chart.contains(s) && prog.run(s.t, s.q, s.qd, v);
    if (!here) {
      if (inside)
        for (auto& d : out) ++d.chart_exits;
      inside = false;
      continue;
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (!inside) {
        lo[i] = hi[i] = v[i];
      } else {
        lo[i] = std::min(lo[i], v[i]);
        hi[i] = std::max(hi[i], v[i]);
      }
      out[i].max_drift = std::max(out[i].max_drift, hi[i] - lo[i]);
      ++out[i].nodes;
    }
    inside = true;
  }
  return out;
}

LiouvilleIntegrals autonomous_integrals(const LagrangianSystem& sys, const CommutingFamily& family,
                                        const VelocityInversion& inv, const Angles& angles,
                                        const sym::CheckOptions& opts, const ValidationOptions& vopts) {
  if (!sys.autonomous()) throw std::invalid_argument("the Lagrangian depends on t; use nonautonomous_integrals");
  if (family.members.empty()) throw std::invalid_argument("empty family");
  const auto energy = sym::equals_numeric(family.members[0].C, hamiltonian(sys), sys.pinned(opts));
  if (!energy.ok()) {
    throw std::invalid_argument("the first family member (" + family.members[0].name +
                                ") must be the energy qd.dL/dqd - L");
  }
  const auto o = chart_options(sys, inv, opts);
  LiouvilleIntegrals res;
  res.integrals.push_back(is_conserved(sys, simplify(sys.space().T() - angles.pullback[0]), o, "T"));
  for (std::size_t i = 1; i < angles.pullback.size(); ++i) {
    res.integrals.push_back(is_conserved(sys, angles.pullback[i], o, "Theta" + std::to_string(i + 1)));
  }
  validate(sys, family, inv, opts, vopts, res);
  return res;
}

LiouvilleIntegrals nonautonomous_integrals(const LagrangianSystem& sys, const CommutingFamily& family,
                                           const VelocityInversion& inv, const GeneratingFunction& gf,
                                           const Angles& angles, const sym::CheckOptions& opts,
                                           const ValidationOptions& vopts) {
  if (sys.autonomous()) throw std::invalid_argument("the Lagrangian does not depend on t; use autonomous_integrals");
  const int n = sys.dof();
  const auto N = sz(n);
  const auto& S = sys.space();
  const auto o = chart_options(sys, inv, opts);
  const auto vel = velocity_map(sys, inv);

  Expr K = diff(gf.S, S.t()) - substitute(sys.lagrangian(), vel);
  for (std::size_t j = 0; j < N; ++j) K += substitute(sys.momenta()[j], vel) * inv.qd[j];
  K = simplify(K);
  ExprVector dK;
  for (int j = 0; j < n; ++j) dK.push_back(pullback(family, inv, diff(K, S.q(j))));
  const auto qdep = sym::check_zero(dK, o);
  if (!qdep.ok()) {
    throw ChartError(std::string("K = dS/dt + p.qd - L ") +
                     (qdep.verdict == sym::Verdict::False ? "depends on q" : "could not be shown q-independent") +
                     ": the family and chart are inconsistent (" + qdep.detail + ")");
  }
  std::map<Symbol, Expr> at_base;
  for (int j = 0; j < n; ++j) at_base[S.q(j)] = num(gf.base.q[sz(j)]);
  LiouvilleIntegrals res;
  res.K = simplify(substitute(K, at_base));

  LegIntegrator legs;
  ExprVector a(N), upsilon(N);
  for (std::size_t i = 0; i < N; ++i) {
    a[i] = diff(res.K, inv.constants[i]);
    const Expr integrand = substitute(a[i], {{S.t(), Expr(legs.s)}});
    upsilon[i] = simplify(legs(integrand, num(gf.base.t), S.T()) - angles.theta[i]);
    res.upsilon.push_back(pullback(family, inv, upsilon[i]));
    res.integrals.push_back(is_conserved(sys, res.upsilon.back(), o, "Upsilon" + std::to_string(i + 1)));
  }

  if (n == 1) {
    res.reduction = "trivial";
  } else if (n == 2) {
    ExprVector rates;
    for (const auto& ai : a) rates.push_back(pullback(family, inv, diff(ai, S.t())));
    if (sym::check_zero(rates, o).ok()) {
      res.reduction = "ratio";
      const Expr F = simplify(a[1] * upsilon[0] - a[0] * upsilon[1]);
      res.integrals.push_back(is_conserved(sys, pullback(family, inv, F), o, "F"));
    } else {
      res.reduction = "unsupported";
      res.note += "dK/dC_i depend on t; no constant-coefficient reduction; ";
    }
  } else {
    res.reduction = "unsupported";
    res.note += "reduction implemented for N <= 2 only; ";
  }
  validate(sys, family, inv, opts, vopts, res);
  return res;
}

ChartChecks check_chart(const LagrangianSystem& sys, const CommutingFamily& family, const VelocityInversion& inv,
                        const Angles& angles, const sym::CheckOptions& opts) {
  const int n = sys.dof();
  const auto N = sz(n);
  ChartChecks out;
  out.dof = n;
  const auto o = chart_options(sys, inv, opts);
  std::vector<std::pair<Expr, Expr>> pairs;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j)
      pairs.emplace_back(pbracket(sys, angles.pullback[i], family.members[j].C), Expr(i == j ? 1 : 0));
  out.canonical = sym::check_pairs(pairs, o);

  ExprVector funcs;
  for (const auto& m : family.members) funcs.push_back(m.C);
  funcs.insert(funcs.end(), angles.pullback.begin(), angles.pullback.end());
  ExprVector grads;
  for (const auto& f : funcs) {
    for (int k = 0; k < n; ++k) grads.push_back(diff(f, sys.space().q(k)));
    for (int k = 0; k < n; ++k) grads.push_back(diff(f, sys.space().qd(k)));
  }
  const StateProgram prog(sys, grads);
  const ChartProgram chart(sys, family, inv, {});
  const int M = 2 * n;
  out.min_rank = M;
  std::vector<double> v(grads.size());
  for (const auto& s : chart_samples(sys, chart, o, o.trials)) {
    if (!prog.run(s.t, s.q, s.qd, v)) continue;
    Eigen::MatrixXd J(M, M);
    for (int r = 0; r < M; ++r)
      for (int c = 0; c < M; ++c) J(r, c) = v[sz(r * M + c)];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
      if (sv(k) > 1e-8 * sv(0)) ++rank;
    }
    out.min_rank = std::min(out.min_rank, rank);
    ++out.samples;
  }
  if (out.samples == 0) out.min_rank = 0;
  return out;
}

}  // namespace mechsym
