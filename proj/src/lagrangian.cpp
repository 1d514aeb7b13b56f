#include "mechsym/lagrangian.hpp"

#include <Eigen/Dense>
#include <map>
#include <mutex>

#include "mechsym/sym/calculus.hpp"
#include "mechsym/sym/matrix.hpp"
#include "mechsym/sym/printer.hpp"
#include "mechsym/sym/simplify.hpp"

namespace mechsym {
namespace {

using sym::determinant;
using sym::simplify;

// Numeric LU inverse of g shared by the per-entry kernels.
class InverseTable {
 public:
  InverseTable(ExprMatrix g, std::vector<Symbol> inputs) : g_(std::move(g)), inputs_(std::move(inputs)) {
    ExprVector flat;
    for (const auto& row : g_) flat.insert(flat.end(), row.begin(), row.end());
    program_ = std::make_unique<sym::Program>(flat, inputs_);
  }

  struct Value {
    bool ok = false;
    Eigen::MatrixXd inv;
    double det = 0.0;
  };

  Value at(std::span<const double> args) const {
    std::vector<double> key(args.begin(), args.end());
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    const std::size_t n = g_.size();
    std::vector<double> flat(n * n);
    Value v;
    if (program_->run(args, flat)) {
      Eigen::MatrixXd m(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = flat[i * n + j];
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
      v.det = lu.determinant();
      if (v.det != 0.0 && std::isfinite(v.det)) {
        v.inv = lu.inverse();
        v.ok = v.inv.allFinite();
      }
    }
    std::lock_guard<std::mutex> lock(mu_);
    if (cache_.size() > 4096) cache_.clear();
    cache_.emplace(std::move(key), v);
    return v;
  }

  const ExprMatrix& g() const { return g_; }
  const std::vector<Symbol>& inputs() const { return inputs_; }

  // d g_ab / d input_k with the arguments substituted for the inputs.
  Expr dg(std::size_t a, std::size_t b, int k, std::span<const Expr> args) const {
    Expr d = sym::diff(g_[a][b], inputs_[static_cast<std::size_t>(k)]);
    if (d.is_zero()) return d;
    std::map<Symbol, Expr> repl;
    for (std::size_t i = 0; i < inputs_.size(); ++i) repl.emplace(inputs_[i], args[i]);
    return sym::substitute(d, repl);
  }

  std::vector<std::vector<std::shared_ptr<const sym::Kernel>>> entries;

 private:
  ExprMatrix g_;
  std::vector<Symbol> inputs_;
  std::unique_ptr<sym::Program> program_;
  mutable std::mutex mu_;
  mutable std::map<std::vector<double>, Value> cache_;
};

class InverseEntry final : public sym::Kernel {
 public:
  InverseEntry(std::shared_ptr<const InverseTable> table, std::size_t i, std::size_t j)
      : table_(std::move(table)), i_(i), j_(j) {}
  std::string name() const override { return "ginv" + std::to_string(i_ + 1) + std::to_string(j_ + 1); }
  int arity() const override { return static_cast<int>(table_->inputs().size()); }
  std::optional<double> evaluate(std::span<const double> args) const override {
    const auto v = table_->at(args);
    if (!v.ok) return std::nullopt;
    return v.inv(static_cast<Eigen::Index>(i_), static_cast<Eigen::Index>(j_));
  }
  // d(G^-1) = -G^-1 dG G^-1
  Expr partial(int k, std::span<const Expr> args) const override {
    const std::size_t n = table_->g().size();
    std::vector<Expr> a(args.begin(), args.end());
    std::vector<Expr> terms;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = 0; q < n; ++q) {
        const Expr d = table_->dg(p, q, k, args);
        if (d.is_zero()) continue;
        terms.push_back(-(sym::call(table_->entries[i_][p], a) * d * sym::call(table_->entries[q][j_], a)));
      }
    }
    return sym::add(std::move(terms));
  }

 private:
  std::shared_ptr<const InverseTable> table_;
  std::size_t i_, j_;
};

class DetKernel final : public sym::Kernel {
 public:
  explicit DetKernel(std::shared_ptr<const InverseTable> table) : table_(std::move(table)) {}
  std::string name() const override { return "detg"; }
  int arity() const override { return static_cast<int>(table_->inputs().size()); }
  std::optional<double> evaluate(std::span<const double> args) const override {
    const auto v = table_->at(args);
    if (!std::isfinite(v.det)) return std::nullopt;
    return v.det;
  }
  // d det = det * tr(G^-1 dG)
  Expr partial(int k, std::span<const Expr> args) const override {
    const std::size_t n = table_->g().size();
    std::vector<Expr> a(args.begin(), args.end());
    std::vector<Expr> terms;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = 0; q < n; ++q) {
        const Expr d = table_->dg(p, q, k, args);
        if (!d.is_zero()) terms.push_back(sym::call(table_->entries[q][p], a) * d);
      }
    }
    return sym::call(std::shared_ptr<const sym::Kernel>(shared_from_this_()), a) * sym::add(std::move(terms));
  }
  std::weak_ptr<const DetKernel> self;

 private:
  std::shared_ptr<const DetKernel> shared_from_this_() const { return self.lock(); }
  std::shared_ptr<const InverseTable> table_;
};

}  // namespace

void require_state_function(const LagrangianSystem& sys, const Expr& e, const std::string& what) {
  for (const auto& s : sym::free_symbols(e)) {
    if (s.is_jet() && s.order >= 2) throw std::invalid_argument(what + " may not depend on " + s.name);
    if (!sys.space().contains(s)) throw std::invalid_argument(what + " uses undeclared symbol " + s.name);
  }
}

LagrangianSystem LagrangianSystem::build(VariableSpace space, Expr lagrangian, sym::Assignment parameter_values,
                                         const sym::CheckOptions& opts) {
  LagrangianSystem sys;
  sys.space_ = std::move(space);
  sys.L_ = simplify(lagrangian);
  sys.parameter_values_ = std::move(parameter_values);
  require_state_function(sys, sys.L_, "the Lagrangian");
  const int n = sys.space_.dof();
  const auto N = static_cast<std::size_t>(n);
  const auto& S = sys.space_;
  const auto check_opts = sys.pinned(opts);

  sys.p_.resize(N);
  for (int j = 0; j < n; ++j) sys.p_[static_cast<std::size_t>(j)] = sym::diff(sys.L_, S.qd(j));

  sys.g_.assign(N, ExprVector(N));
  sys.h_.assign(N, ExprVector(N));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto I = static_cast<std::size_t>(i), J = static_cast<std::size_t>(j);
      // g is symmetric by construction: compute once, mirror.
      if (j >= i) sys.g_[I][J] = sym::diff(sys.p_[I], S.qd(j));
      else sys.g_[I][J] = sys.g_[J][I];
      sys.h_[I][J] = sym::diff(sys.p_[J], S.q(i));
    }
  }

  sys.g_inv_.assign(N, ExprVector(N));
  if (n <= kSymbolicInverseMaxDof) {
    sys.det_ = determinant(sys.g_);
  } else {
    std::vector<Symbol> inputs;
    for (const auto& s : sym::free_symbols([&] {
           ExprVector flat;
           for (const auto& row : sys.g_) flat.insert(flat.end(), row.begin(), row.end());
           return flat;
         }())) {
      inputs.push_back(s);
    }
    auto table = std::make_shared<InverseTable>(sys.g_, inputs);
    table->entries.assign(N, std::vector<std::shared_ptr<const sym::Kernel>>(N));
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) table->entries[i][j] = std::make_shared<InverseEntry>(table, i, j);
    auto det_kernel = std::make_shared<DetKernel>(table);
    det_kernel->self = det_kernel;
    std::vector<Expr> args;
    for (const auto& s : inputs) args.emplace_back(s);
    sys.det_ = sym::call(det_kernel, args);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) sys.g_inv_[i][j] = sym::call(table->entries[i][j], args);
  }

  const auto det_zero = sym::check_zero({sys.det_}, check_opts);
  if (det_zero.verdict == sym::Verdict::True) {
    throw DegenerateLagrangianError("degenerate Lagrangian: det(g) = " + sym::to_string(sys.det_) +
                                        " vanishes identically",
                                    sys.det_);
  }
  if (det_zero.verdict == sym::Verdict::Inconclusive) {
    throw DegenerateLagrangianError("cannot establish det(g) != 0: " + det_zero.detail, sys.det_);
  }
  if (!sys.det_.is_number()) {
    sys.warnings_.push_back("det(g) = " + sym::to_string(sys.det_) +
                            " depends on the state; points where it vanishes are excluded");
  }

  if (n <= kSymbolicInverseMaxDof) sys.g_inv_ = sym::adjugate_inverse(sys.g_);

  // f^i = ginv^ij (L_qj - L_t,qdj - qd^k L_qk,qdj)
  ExprVector rhs(N);
  for (int j = 0; j < n; ++j) {
    const auto J = static_cast<std::size_t>(j);
    Expr r = sym::diff(sys.L_, S.q(j)) - sym::diff(sys.p_[J], S.t());
    for (int k = 0; k < n; ++k) r -= S.QD(k) * sys.h_[static_cast<std::size_t>(k)][J];
    rhs[J] = simplify(r);
  }
  sys.f_.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    Expr fi = 0;
    for (std::size_t j = 0; j < N; ++j) fi += sys.g_inv_[i][j] * rhs[j];
    sys.f_[i] = simplify(fi);
  }

  sys.c_.assign(N, ExprVector(N, Expr(0)));
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = i + 1; j < N; ++j) {
      Expr cij = 0;
      for (std::size_t k = 0; k < N; ++k) {
        for (std::size_t l = 0; l < N; ++l) {
          const Expr a = simplify(sys.h_[k][l] - sys.h_[l][k]);
          if (a.is_zero()) continue;
          cij += sys.g_inv_[i][k] * sys.g_inv_[j][l] * a;
        }
      }
      sys.c_[i][j] = simplify(cij);
      sys.c_[j][i] = simplify(-sys.c_[i][j]);
    }
  }

  sys.autonomous_ = sym::check_zero({sym::diff(sys.L_, S.t())}, check_opts).ok();
  return sys;
}

Expr LagrangianSystem::Dt(const Expr& e) const { return sym::solution_derivative(e, space_, f_); }

std::vector<Symbol> LagrangianSystem::numeric_inputs() const {
  auto in = space_.state_symbols();
  for (const auto& p : space_.parameters()) in.push_back(Symbol::param(p));
  return in;
}

sym::CheckOptions LagrangianSystem::pinned(const sym::CheckOptions& base) const {
  auto out = base;
  for (const auto& [name, value] : parameter_values_) out.fixed.emplace(name, value);
  return out;
}

StateProgram::StateProgram(const LagrangianSystem& sys, const ExprVector& outputs)
    : n_(sys.dof()), program_(outputs, sys.numeric_inputs()) {
  for (const auto& p : sys.space().parameters()) {
    auto it = sys.parameter_values().find(p);
    if (it == sys.parameter_values().end()) {
      bool used = false;
      for (const auto& e : outputs) used = used || sym::depends_on(e, Symbol::param(p));
      if (used) throw std::invalid_argument("parameter " + p + " has no numeric value");
      params_.push_back(0.0);
    } else {
      params_.push_back(it->second);
    }
  }
}

bool StateProgram::run(double t, std::span<const double> q, std::span<const double> qd, std::span<double> out,
                       std::string* why) const {
  std::vector<double> in;
  in.reserve(1 + 2 * static_cast<std::size_t>(n_) + params_.size());
  in.push_back(t);
  in.insert(in.end(), q.begin(), q.end());
  in.insert(in.end(), qd.begin(), qd.end());
  in.insert(in.end(), params_.begin(), params_.end());
  return program_.run(std::span<const double>(in), out, why);
}

bool StateProgram::run(double t, std::span<const double> state, std::span<double> out, std::string* why) const {
  const auto n = static_cast<std::size_t>(n_);
  return run(t, state.subspan(0, n), state.subspan(n, n), out, why);
}

ExprVector el_residual(const LagrangianSystem& sys) {
  const auto& S = sys.space();
  ExprVector out;
  for (int i = 0; i < sys.dof(); ++i) {
    out.push_back(simplify(sym::diff(sys.lagrangian(), S.q(i)) -
                           sym::total_derivative(sys.momenta()[static_cast<std::size_t>(i)], S)));
  }
  return out;
}

sym::CheckResult check_el_identity(const LagrangianSystem& sys, const sym::CheckOptions& opts) {
  const auto res = el_residual(sys);
  const auto& S = sys.space();
  std::vector<std::pair<Expr, Expr>> pairs;
  const auto N = static_cast<std::size_t>(sys.dof());
  for (std::size_t i = 0; i < N; ++i) {
    Expr rhs = 0;
    for (std::size_t j = 0; j < N; ++j) rhs += sys.g()[i][j] * (sys.force()[j] - S.QDD(static_cast<int>(j)));
    pairs.emplace_back(res[i], rhs);
  }
  return sym::check_pairs(pairs, sys.pinned(opts));
}

Expr hamiltonian(const LagrangianSystem& sys) {
  Expr h = -sys.lagrangian();
  for (int i = 0; i < sys.dof(); ++i) h += sys.space().QD(i) * sys.momenta()[static_cast<std::size_t>(i)];
  return simplify(h);
}

GaugeShiftReport gauge_shift_check(const LagrangianSystem& sys, const Expr& A, const sym::CheckOptions& opts) {
  for (const auto& s : sym::free_symbols(A)) {
    if (s.is_jet() && s.order >= 1) throw std::invalid_argument("gauge function may depend on t and q only, found " + s.name);
    if (!sys.space().contains(s)) throw std::invalid_argument("gauge function uses undeclared symbol " + s.name);
  }
  const auto shifted = LagrangianSystem::build(sys.space(), sys.lagrangian() + sym::total_derivative(A, sys.space()),
                                               sys.parameter_values(), opts);
  GaugeShiftReport rep;
  std::vector<std::pair<Expr, Expr>> gp, fp;
  const auto N = static_cast<std::size_t>(sys.dof());
  for (std::size_t i = 0; i < N; ++i) {
    fp.emplace_back(sys.force()[i], shifted.force()[i]);
    for (std::size_t j = 0; j < N; ++j) gp.emplace_back(sys.g()[i][j], shifted.g()[i][j]);
  }
  rep.hessian = sym::check_pairs(gp, sys.pinned(opts));
  rep.force = sym::check_pairs(fp, sys.pinned(opts));
  rep.ok = rep.hessian.ok() && rep.force.ok();
  return rep;
}

}  // namespace mechsym
