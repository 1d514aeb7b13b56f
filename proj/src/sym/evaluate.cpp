#include "mechsym/sym/evaluate.hpp"

#include <cmath>
#include <unordered_map>

namespace mechsym::sym {

Program::Program(const std::vector<Expr>& outputs, std::vector<Symbol> inputs) : inputs_(std::move(inputs)) {
  std::unordered_map<std::string, int> input_slot;
  for (std::size_t i = 0; i < inputs_.size(); ++i) input_slot.emplace(inputs_[i].name, static_cast<int>(i));
  std::unordered_map<const Node*, int> slot;
  std::unordered_map<const Kernel*, int> kernel_index;

  auto emit = [&](auto&& self, const Expr& e) -> int {
    auto it = slot.find(e.get());
    if (it != slot.end()) return it->second;
    Instr ins;
    switch (e.kind()) {
      case Kind::Number:
        ins.op = Op::Const;
        ins.c = e.number().to_long_double();
        break;
      case Kind::Symbol: {
        auto f = input_slot.find(e.symbol().name);
        if (f == input_slot.end()) throw MissingSymbolError("no value for symbol '" + e.symbol().name + "'");
        ins.op = Op::Input;
        ins.n = f->second;
        break;
      }
      case Kind::Add:
      case Kind::Mul:
        ins.op = e.kind() == Kind::Add ? Op::Add : Op::Mul;
        for (const auto& a : e.args()) ins.args.push_back(self(self, a));
        break;
      case Kind::Pow: {
        const Expr& x = e.args()[1];
        ins.args.push_back(self(self, e.args()[0]));
        if (x.is_number() && x.number().is_integer()) {
          ins.op = Op::PowInt;
          ins.n = x.number().numerator();
        } else if (x.is_number() && x.number().is_exact() && x.number().numerator() == 1 &&
                   x.number().denominator() == 2) {
          ins.op = Op::Sqrt;
        } else if (x.is_number()) {
          ins.op = Op::PowReal;
          ins.c = x.number().to_long_double();
        } else {
          ins.op = Op::PowExpr;
          ins.args.push_back(self(self, x));
        }
        break;
      }
      case Kind::Func:
        for (const auto& a : e.args()) ins.args.push_back(self(self, a));
        switch (e.fn()) {
          case Fn::Sin: ins.op = Op::Sin; break;
          case Fn::Cos: ins.op = Op::Cos; break;
          case Fn::Tan: ins.op = Op::Tan; break;
          case Fn::Exp: ins.op = Op::Exp; break;
          case Fn::Log: ins.op = Op::Log; break;
          case Fn::Atan2: ins.op = Op::Atan2; break;
          case Fn::Abs: ins.op = Op::Abs; break;
        }
        break;
      case Kind::Kernel: {
        for (const auto& a : e.args()) ins.args.push_back(self(self, a));
        ins.op = Op::Kernel;
        auto k = kernel_index.find(e.kernel().get());
        if (k == kernel_index.end()) {
          kernels_.push_back(e.kernel());
          k = kernel_index.emplace(e.kernel().get(), static_cast<int>(kernels_.size() - 1)).first;
        }
        ins.kernel = k->second;
        break;
      }
    }
    code_.push_back(std::move(ins));
    const int id = static_cast<int>(code_.size() - 1);
    slot.emplace(e.get(), id);
    return id;
  };
  for (const auto& o : outputs) outputs_.push_back(emit(emit, o));
}

namespace {

template <class T>
bool fail(std::string* why, const char* msg) {
  if (why) *why = msg;
  return false;
}

}  // namespace

template <class T>
bool Program::exec(std::span<const T> in, std::span<T> out, std::string* why) const {
  if (in.size() != inputs_.size()) return fail<T>(why, "input size mismatch");
  std::vector<T> r(code_.size());
  std::vector<double> kargs;
  for (std::size_t i = 0; i < code_.size(); ++i) {
    const Instr& ins = code_[i];
    T v{};
    switch (ins.op) {
      case Op::Const: v = static_cast<T>(ins.c); break;
      case Op::Input: v = in[static_cast<std::size_t>(ins.n)]; break;
      case Op::Add:
        v = 0;
        for (int a : ins.args) v += r[static_cast<std::size_t>(a)];
        break;
      case Op::Mul:
        v = 1;
        for (int a : ins.args) v *= r[static_cast<std::size_t>(a)];
        break;
      case Op::PowInt: {
        const T b = r[static_cast<std::size_t>(ins.args[0])];
        if (ins.n < 0 && b == 0) return fail<T>(why, "division by zero");
        long long n = ins.n < 0 ? -ins.n : ins.n;
        T acc = 1;
        T base = b;
        while (n > 0) {
          if (n & 1) acc *= base;
          n >>= 1;
          if (n) base *= base;
        }
        v = ins.n < 0 ? T(1) / acc : acc;
        break;
      }
      case Op::Sqrt: {
        const T b = r[static_cast<std::size_t>(ins.args[0])];
        if (b < 0) return fail<T>(why, "sqrt of negative value");
        v = std::sqrt(b);
        break;
      }
      case Op::PowReal:
      case Op::PowExpr: {
        const T b = r[static_cast<std::size_t>(ins.args[0])];
        const T x = ins.op == Op::PowReal ? static_cast<T>(ins.c) : r[static_cast<std::size_t>(ins.args[1])];
        if (b < 0 && x != std::floor(x)) return fail<T>(why, "fractional power of negative value");
        if (b == 0 && x < 0) return fail<T>(why, "division by zero");
        v = std::pow(b, x);
        break;
      }
      case Op::Sin: v = std::sin(r[static_cast<std::size_t>(ins.args[0])]); break;
      case Op::Cos: v = std::cos(r[static_cast<std::size_t>(ins.args[0])]); break;
      case Op::Tan: v = std::tan(r[static_cast<std::size_t>(ins.args[0])]); break;
      case Op::Exp: v = std::exp(r[static_cast<std::size_t>(ins.args[0])]); break;
      case Op::Log: {
        const T x = r[static_cast<std::size_t>(ins.args[0])];
        if (x <= 0) return fail<T>(why, "log of non-positive value");
        v = std::log(x);
        break;
      }
      case Op::Atan2: {
        const T y = r[static_cast<std::size_t>(ins.args[0])];
        const T x = r[static_cast<std::size_t>(ins.args[1])];
        if (y == 0 && x == 0) return fail<T>(why, "atan2(0, 0)");
        v = std::atan2(y, x);
        break;
      }
      case Op::Abs: v = std::fabs(r[static_cast<std::size_t>(ins.args[0])]); break;
      case Op::Kernel: {
        kargs.clear();
        for (int a : ins.args) kargs.push_back(static_cast<double>(r[static_cast<std::size_t>(a)]));
        auto res = kernels_[static_cast<std::size_t>(ins.kernel)]->evaluate(kargs);
        if (!res) return fail<T>(why, "numeric kernel reported a domain error");
        v = static_cast<T>(*res);
        break;
      }
    }
    if (!std::isfinite(v)) return fail<T>(why, "non-finite intermediate value");
    r[i] = v;
  }
  for (std::size_t k = 0; k < outputs_.size(); ++k) out[k] = r[static_cast<std::size_t>(outputs_[k])];
  return true;
}

bool Program::run(std::span<const double> in, std::span<double> out, std::string* why) const {
  return exec<double>(in, out, why);
}

bool Program::run(std::span<const long double> in, std::span<long double> out, std::string* why) const {
  return exec<long double>(in, out, why);
}

Evaluation eval(const Expr& e, const Assignment& point) {
  std::vector<Symbol> inputs;
  std::vector<double> values;
  for (const auto& s : free_symbols(e)) {
    auto it = point.find(s.name);
    if (it == point.end()) {
      return {EvalCode::MissingSymbol, 0.0, "no value for symbol '" + s.name + "'"};
    }
    inputs.push_back(s);
    values.push_back(it->second);
  }
  Program p({e}, inputs);
  double out = 0.0;
  std::string why;
  if (!p.run(values, std::span<double>(&out, 1), &why)) return {EvalCode::DomainError, 0.0, why};
  return {EvalCode::Ok, out, {}};
}

}  // namespace mechsym::sym
