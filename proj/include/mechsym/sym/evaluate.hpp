#pragma once

#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mechsym/sym/expr.hpp"

namespace mechsym::sym {

using Assignment = std::map<std::string, double>;

class MissingSymbolError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class EvalCode { Ok, DomainError, MissingSymbol };

struct Evaluation {
  EvalCode code = EvalCode::Ok;
  double value = 0.0;
  std::string message;
  bool ok() const { return code == EvalCode::Ok; }
};

/// Expressions compiled to a register tape with shared subexpressions
/// evaluated once. Any non-finite intermediate or out-of-domain operation
/// aborts the run with a message instead of producing NaN.
class Program {
 public:
  /// Throws MissingSymbolError if an output uses a symbol outside inputs.
  Program(const std::vector<Expr>& outputs, std::vector<Symbol> inputs);

  const std::vector<Symbol>& inputs() const { return inputs_; }
  std::size_t output_count() const { return outputs_.size(); }

  bool run(std::span<const double> in, std::span<double> out, std::string* why = nullptr) const;
  bool run(std::span<const long double> in, std::span<long double> out, std::string* why = nullptr) const;

 private:
  template <class T>
  bool exec(std::span<const T> in, std::span<T> out, std::string* why) const;

  enum class Op : std::uint8_t {
    Const, Input, Add, Mul, PowInt, Sqrt, PowReal, PowExpr,
    Sin, Cos, Tan, Exp, Log, Atan2, Abs, Kernel
  };
  struct Instr {
    Op op = Op::Const;
    std::vector<int> args;
    long double c = 0.0L;
    long long n = 0;
    int kernel = -1;
  };
  std::vector<Symbol> inputs_;
  std::vector<Instr> code_;
  std::vector<int> outputs_;
  std::vector<std::shared_ptr<const Kernel>> kernels_;
};

/// One-shot evaluation: every free symbol of e must be assigned.
Evaluation eval(const Expr& e, const Assignment& point);

}  // namespace mechsym::sym
