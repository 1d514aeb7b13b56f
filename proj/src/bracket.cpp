#include "mechsym/bracket.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "mechsym/sym/calculus.hpp"
#include "mechsym/sym/simplify.hpp"

namespace mechsym {
namespace {

using sym::diff;
using sym::simplify;

std::size_t sz(int i) { return static_cast<std::size_t>(i); }

constexpr int kFitSamples = 200;
constexpr double kFitResidual = 1e-7;

// Sample inputs: state symbols first, then any parameter the outputs use.
std::vector<Symbol> sample_symbols(const LagrangianSystem& sys, const ExprVector& outputs) {
  auto syms = sys.space().state_symbols();
  for (const auto& s : sym::free_symbols(outputs)) {
    if (std::find(syms.begin(), syms.end(), s) == syms.end()) syms.push_back(s);
  }
  return syms;
}

}  // namespace

const char* closure_name(Closure c) {
  switch (c) {
    case Closure::Zero: return "zero";
    case Closure::Constant: return "constant";
    case Closure::Linear: return "linear";
    case Closure::Nonlinear: return "nonlinear";
  }
  return "?";
}

const char* dependence_name(Dependence d) {
  switch (d) {
    case Dependence::Dependent: return "dependent";
    case Dependence::Independent: return "independent";
    case Dependence::Inconclusive: return "inconclusive";
  }
  return "?";
}

Expr pbracket(const LagrangianSystem& sys, const Expr& F1, const Expr& F2) {
  const auto& S = sys.space();
  const int n = sys.dof();
  ExprVector a_q, a_qd, b_q, b_qd;
  for (int i = 0; i < n; ++i) {
    a_q.push_back(diff(F1, S.q(i)));
    a_qd.push_back(diff(F1, S.qd(i)));
    b_q.push_back(diff(F2, S.q(i)));
    b_qd.push_back(diff(F2, S.qd(i)));
  }
  std::vector<Expr> terms;
  for (std::size_t i = 0; i < sz(n); ++i) {
    for (std::size_t j = 0; j < sz(n); ++j) {
      const Expr& gi = sys.g_inv()[i][j];
      if (!gi.is_zero()) terms.push_back(gi * (a_q[i] * b_qd[j] - b_q[i] * a_qd[j]));
      const Expr& cij = sys.c()[i][j];
      if (!cij.is_zero()) terms.push_back(cij * a_qd[i] * b_qd[j]);
    }
  }
  return simplify(sym::add(std::move(terms)));
}

ExprMatrix symplectic_matrix(const LagrangianSystem& sys) {
  const auto N = sz(sys.dof());
  ExprMatrix J(2 * N, ExprVector(2 * N, Expr(0)));
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      J[i][N + j] = sys.g_inv()[i][j];
      J[N + i][j] = simplify(-sys.g_inv()[i][j]);
      J[N + i][N + j] = sys.c()[i][j];
    }
  }
  return J;
}

sym::CheckResult conservation_via_bracket(const LagrangianSystem& sys, const Expr& C, const sym::CheckOptions& opts) {
  // the time derivative is taken at fixed momenta: when p depends on t
  // explicitly, qd moves by -ginv d_t p at fixed (q, p)
  const auto& S = sys.space();
  Expr rate = diff(C, S.t()) + pbracket(sys, C, hamiltonian(sys));
  for (int i = 0; i < sys.dof(); ++i) {
    for (int k = 0; k < sys.dof(); ++k) {
      const Expr dp = diff(sys.momenta()[sz(k)], S.t());
      if (!dp.is_zero()) rate -= sys.g_inv()[sz(i)][sz(k)] * dp * diff(C, S.qd(i));
    }
  }
  rate = simplify(rate);
  return sym::check_zero({rate}, sys.pinned(opts));
}

ActionCheck verify_symmetry_action(const LagrangianSystem& sys, const Expr& C, const Expr& F,
                                   const sym::CheckOptions& opts) {
  ActionCheck out;
  out.action = generator_action(sys, c_to_p(sys, C), F);
  out.bracket = pbracket(sys, F, C);
  out.check = sym::equals_numeric(out.action, out.bracket, sys.pinned(opts));
  out.ok = out.check.ok();
  return out;
}

PairActionCheck verify_pair_action(const LagrangianSystem& sys, const Expr& C1, const Expr& C2,
                                   const sym::CheckOptions& opts) {
  PairActionCheck out;
  out.x1_c2 = generator_action(sys, c_to_p(sys, C1), C2);
  out.x2_c1 = generator_action(sys, c_to_p(sys, C2), C1);
  out.bracket = pbracket(sys, C2, C1);
  out.check = sym::check_pairs({{out.x1_c2, out.bracket}, {-out.x2_c1, out.bracket}}, sys.pinned(opts));
  out.ok = out.check.ok();
  return out;
}

CommutatorCheck verify_commutator_homomorphism(const LagrangianSystem& sys, const Expr& C1, const Expr& C2,
                                               const sym::CheckOptions& opts) {
  const auto g1 = c_to_p(sys, C1);
  const auto g2 = c_to_p(sys, C2);
  const Expr b = pbracket(sys, C1, C2);
  const auto& S = sys.space();
  CommutatorCheck out;
  std::vector<std::pair<Expr, Expr>> pairs;
  for (std::size_t i = 0; i < sz(sys.dof()); ++i) {
    out.lhs.push_back(simplify(generator_action(sys, g2, g1.P[i]) - generator_action(sys, g1, g2.P[i])));
    Expr r = 0;
    for (std::size_t j = 0; j < sz(sys.dof()); ++j) r += sys.g_inv()[i][j] * diff(b, S.qd(static_cast<int>(j)));
    out.rhs.push_back(simplify(r));
    pairs.emplace_back(out.lhs.back(), out.rhs.back());
  }
  out.check = sym::check_pairs(pairs, sys.pinned(opts));
  out.ok = out.check.ok();
  return out;
}

BracketTable bracket_table(const LagrangianSystem& sys, const std::vector<ConservedQuantity>& family,
                           const sym::CheckOptions& opts) {
  const std::size_t m = family.size();
  BracketTable tab;
  tab.entries.assign(m, ExprVector(m, Expr(0)));
  tab.closure.assign(m, std::vector<Closure>(m, Closure::Zero));
  tab.coefficients.assign(m, std::vector<std::vector<double>>(m, std::vector<double>(m + 1, 0.0)));
  tab.residual.assign(m, std::vector<double>(m, 0.0));
  for (const auto& c : family) tab.names.push_back(c.name);

  ExprVector outputs;
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      tab.entries[a][b] = pbracket(sys, family[a].C, family[b].C);
      tab.entries[b][a] = simplify(-tab.entries[a][b]);
      if (!tab.entries[a][b].is_zero()) {
        slots.emplace_back(a, b);
        outputs.push_back(tab.entries[a][b]);
      }
    }
  }
  if (slots.empty()) return tab;
  for (const auto& c : family) outputs.push_back(c.C);

  const auto o = sys.pinned(opts);
  const auto syms = sample_symbols(sys, outputs);
  sym::Program prog(outputs, syms);
  sym::Sampler sampler(syms, o);
  Eigen::MatrixXd values(kFitSamples, static_cast<Eigen::Index>(outputs.size()));
  std::vector<double> in, out(outputs.size());
  int got = 0;
  for (int attempt = 0; got < kFitSamples && attempt < 20 * kFitSamples; ++attempt) {
    sampler.next(in);
    if (!prog.run(in, out)) continue;
    for (std::size_t k = 0; k < out.size(); ++k) values(got, static_cast<Eigen::Index>(k)) = out[k];
    ++got;
  }
  const auto rows = static_cast<Eigen::Index>(got);
  const auto ns = static_cast<Eigen::Index>(slots.size());
  Eigen::MatrixXd A(rows, static_cast<Eigen::Index>(m + 1));
  A.col(0).setOnes();
  for (std::size_t k = 0; k < m; ++k) A.col(static_cast<Eigen::Index>(k + 1)) = values.block(0, ns + static_cast<Eigen::Index>(k), rows, 1);

  for (std::size_t s = 0; s < slots.size(); ++s) {
    const auto [a, b] = slots[s];
    const Eigen::VectorXd y = values.block(0, static_cast<Eigen::Index>(s), rows, 1);
    Closure tag = Closure::Nonlinear;
    std::vector<double> coef(m + 1, 0.0);
    double resid = 1.0;
    const double scale = y.norm();
    if (rows < kFitSamples / 4) {
      tag = Closure::Nonlinear;
    } else if (scale <= 1e-12 * std::sqrt(static_cast<double>(rows))) {
      tag = Closure::Zero;
      resid = 0.0;
    } else {
      const double mean = y.mean();
      resid = (y.array() - mean).matrix().norm() / scale;
      if (resid < kFitResidual) {
        tag = Closure::Constant;
        coef[0] = mean;
      } else {
        const Eigen::VectorXd x = A.colPivHouseholderQr().solve(y);
        resid = (A * x - y).norm() / scale;
        if (resid < kFitResidual) {
          tag = Closure::Linear;
          for (std::size_t k = 0; k <= m; ++k) coef[k] = x(static_cast<Eigen::Index>(k));
        }
      }
    }
    tab.closure[a][b] = tab.closure[b][a] = tag;
    tab.residual[a][b] = tab.residual[b][a] = resid;
    tab.coefficients[a][b] = coef;
    for (auto& v : coef) v = -v;
    tab.coefficients[b][a] = coef;
  }
  return tab;
}

IndependenceReport independence_over_solution_space(const LagrangianSystem& sys, const Expr& C1, const Expr& C2,
                                                    const sym::CheckOptions& opts) {
  const auto& S = sys.space();
  const auto N = sz(sys.dof());
  const auto g1 = c_to_p(sys, C1);
  const auto g2 = c_to_p(sys, C2);
  const auto r1 = generator_rates(sys, g1);
  const auto r2 = generator_rates(sys, g2);
  ExprVector V1 = g1.P, V2 = g2.P;
  V1.insert(V1.end(), r1.begin(), r1.end());
  V2.insert(V2.end(), r2.begin(), r2.end());
  Expr dot12 = 0, dot11 = 0;
  for (std::size_t k = 0; k < 2 * N; ++k) {
    dot12 += V1[k] * V2[k];
    dot11 += V1[k] * V1[k];
  }
  IndependenceReport rep;
  rep.lambda = simplify(simplify(dot12) * sym::pow(simplify(dot11), Expr(-1)));

  const auto vars = S.state_symbols();
  const auto nv = vars.size();
  // outputs: V1, V2, dot12, dot11, grad(dot12), grad(dot11), grad C1, grad C2
  ExprVector outputs = V1;
  outputs.insert(outputs.end(), V2.begin(), V2.end());
  outputs.push_back(simplify(dot12));
  outputs.push_back(simplify(dot11));
  const Expr d12_expr = outputs[4 * N], d11_expr = outputs[4 * N + 1];
  for (const auto& v : vars) outputs.push_back(diff(d12_expr, v));
  for (const auto& v : vars) outputs.push_back(diff(d11_expr, v));
  for (const Expr* c : {&C1, &C2})
    for (const auto& v : vars) outputs.push_back(diff(*c, v));

  const auto o = sys.pinned(opts);
  const auto syms = sample_symbols(sys, outputs);
  sym::Program prog(outputs, syms);
  sym::Sampler sampler(syms, o);
  std::vector<double> in, out(outputs.size());
  int attempts = 0;
  bool any_nonparallel = false, any_nonfunctional = false;
  while (rep.samples < o.trials && attempts < 20 * o.trials) {
    ++attempts;
    sampler.next(in);
    if (!prog.run(in, out)) continue;
    const double d12 = out[4 * N], d11 = out[4 * N + 1];
    if (d11 < 1e-20) continue;  // generator of C1 vanishes here
    ++rep.samples;
    const double lam = d12 / d11;
    double dev = 0, norm2 = 0;
    for (std::size_t k = 0; k < 2 * N; ++k) {
      dev = std::max(dev, std::abs(out[2 * N + k] - lam * out[k]));
      norm2 = std::max(norm2, std::abs(out[2 * N + k]));
    }
    if (dev > 1e-8 * (1 + norm2)) {
      if (!any_nonparallel) rep.witness = sampler.assignment(in);
      any_nonparallel = true;
      continue;
    }
    ++rep.parallel_samples;
    // grad lambda = (grad d12 - lambda grad d11) / d11
    Eigen::MatrixXd M(3, static_cast<Eigen::Index>(nv));
    const std::size_t g12 = 4 * N + 2, g11 = g12 + nv, gc1 = g11 + nv, gc2 = gc1 + nv;
    for (std::size_t k = 0; k < nv; ++k) {
      const auto K = static_cast<Eigen::Index>(k);
      M(0, K) = (out[g12 + k] - lam * out[g11 + k]) / d11;
      M(1, K) = out[gc1 + k];
      M(2, K) = out[gc2 + k];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto sv = svd.singularValues();
    const bool functional = sv(0) == 0.0 || sv(2) <= 1e-8 * sv(0);
    if (functional) {
      ++rep.functional_samples;
    } else {
      if (!any_nonfunctional && !any_nonparallel) rep.witness = sampler.assignment(in);
      any_nonfunctional = true;
    }
  }
  if (rep.samples < std::max(1, o.trials / 4)) {
    rep.verdict = Dependence::Inconclusive;
    rep.detail = "too few usable samples";
  } else if (any_nonparallel) {
    rep.verdict = Dependence::Independent;
    rep.detail = "generators are not parallel";
  } else if (any_nonfunctional) {
    rep.verdict = Dependence::Independent;
    rep.detail = "generators are parallel but the ratio is not a function of the two integrals";
  } else {
    rep.verdict = Dependence::Dependent;
    rep.detail = "generators are parallel with a ratio depending on the integrals only";
  }
  return rep;
}

}  // namespace mechsym
