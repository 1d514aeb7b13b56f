#include "mechsym/sym/integral.hpp"

#include <map>
#include <mutex>

#include "mechsym/numeric/quadrature.hpp"
#include "mechsym/sym/calculus.hpp"
#include "mechsym/sym/evaluate.hpp"
#include "mechsym/sym/simplify.hpp"

namespace mechsym::sym {
namespace {

class QuadKernel final : public Kernel, public std::enable_shared_from_this<QuadKernel> {
 public:
  QuadKernel(Expr integrand, Symbol var, std::vector<Symbol> params)
      : integrand_(std::move(integrand)), var_(std::move(var)), params_(std::move(params)) {
    std::vector<Symbol> inputs{var_};
    inputs.insert(inputs.end(), params_.begin(), params_.end());
    program_ = std::make_unique<Program>(std::vector<Expr>{integrand_}, inputs);
  }

  std::string name() const override { return "quad"; }
  int arity() const override { return static_cast<int>(params_.size()) + 2; }

  std::optional<double> evaluate(std::span<const double> args) const override {
    std::vector<double> key(args.begin(), args.end());
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    std::vector<double> in(params_.size() + 1);
    for (std::size_t j = 0; j < params_.size(); ++j) in[j + 1] = args[j + 2];
    auto f = [&](double s) -> std::optional<double> {
      std::vector<double> local = in;
      local[0] = s;
      double out = 0.0;
      if (!program_->run(local, std::span<double>(&out, 1))) return std::nullopt;
      return out;
    };
    const auto r = numeric::integrate(f, args[0], args[1]);
    std::optional<double> value = r.ok ? std::optional<double>(r.value) : std::nullopt;
    std::lock_guard<std::mutex> lock(mu_);
    if (cache_.size() > 4096) cache_.clear();
    cache_.emplace(std::move(key), value);
    return value;
  }

  Expr partial(int k, std::span<const Expr> args) const override {
    if (k == 0 || k == 1) {
      std::map<Symbol, Expr> repl{{var_, args[static_cast<std::size_t>(k)]}};
      for (std::size_t j = 0; j < params_.size(); ++j) repl.emplace(params_[j], args[j + 2]);
      const Expr at = substitute(integrand_, repl);
      return k == 0 ? -at : at;
    }
    const std::size_t j = static_cast<std::size_t>(k - 2);
    std::shared_ptr<const Kernel> dk;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = derived_.find(j);
      if (it != derived_.end()) dk = it->second;
    }
    if (!dk) {
      const Expr d = diff(integrand_, params_[j]);
      if (d.is_zero()) return Expr(0);
      dk = std::make_shared<QuadKernel>(d, var_, params_);
      std::lock_guard<std::mutex> lock(mu_);
      derived_.emplace(j, dk);
    }
    return call(dk, std::vector<Expr>(args.begin(), args.end()));
  }

 private:
  Expr integrand_;
  Symbol var_;
  std::vector<Symbol> params_;
  std::unique_ptr<Program> program_;
  mutable std::mutex mu_;
  mutable std::map<std::vector<double>, std::optional<double>> cache_;
  mutable std::map<std::size_t, std::shared_ptr<const Kernel>> derived_;
};

}  // namespace

Expr definite_integral(const Expr& integrand, const Symbol& s, const Expr& lower, const Expr& upper) {
  if (integrand.is_zero()) return Expr(0);
  std::vector<Symbol> params;
  for (const auto& sym : free_symbols(integrand)) {
    if (!(sym == s)) params.push_back(sym);
  }
  std::vector<Expr> args{lower, upper};
  for (const auto& p : params) args.emplace_back(p);
  return call(std::make_shared<QuadKernel>(integrand, s, params), std::move(args));
}

}  // namespace mechsym::sym
