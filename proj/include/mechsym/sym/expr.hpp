#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mechsym/sym/number.hpp"

namespace mechsym::sym {

enum class Kind : std::uint8_t { Number, Symbol, Func, Kernel, Pow, Mul, Add };
enum class Fn : std::uint8_t { Sin, Cos, Tan, Exp, Log, Atan2, Abs };
enum class SymbolClass : std::uint8_t { Time, Jet, Param };

const char* fn_name(Fn f);

/// A named scalar: the time t, a jet coordinate (order 0 = q, 1 = qd,
/// 2 = qdd, ...), or a free parameter. Jet indices are 0-based here and
/// 1-based in the printed name.
struct Symbol {
  SymbolClass cls = SymbolClass::Param;
  int order = 0;
  int index = 0;
  std::string name;

  static Symbol time();
  static Symbol jet(int order, int index);
  static Symbol param(std::string name);

  bool is_time() const { return cls == SymbolClass::Time; }
  bool is_jet() const { return cls == SymbolClass::Jet; }
  bool is_param() const { return cls == SymbolClass::Param; }

  friend bool operator==(const Symbol& a, const Symbol& b) { return a.name == b.name; }
  friend bool operator<(const Symbol& a, const Symbol& b);
};

class Node;
class Kernel;

/// Immutable, shared expression handle. Construction always goes through
/// the canonicalising builders below, so structurally equal inputs give
/// structurally equal trees.
class Expr {
 public:
  Expr();  // the exact constant 0
  Expr(long long value);  // NOLINT(implicit)
  Expr(int value) : Expr(static_cast<long long>(value)) {}  // NOLINT(implicit)
  Expr(const Number& value);  // NOLINT(implicit)
  explicit Expr(const Symbol& s);

  const Node& node() const { return *p_; }
  const Node* get() const { return p_.get(); }
  Kind kind() const;
  std::size_t hash() const;

  bool is_number() const { return kind() == Kind::Number; }
  bool is_zero() const;
  bool is_one() const;
  const Number& number() const;
  const Symbol& symbol() const;
  Fn fn() const;
  const std::vector<Expr>& args() const;
  const std::shared_ptr<const Kernel>& kernel() const;

  friend bool operator==(const Expr& a, const Expr& b);
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

 private:
  friend class Node;
  friend Expr make_node(Node&& n);
  explicit Expr(std::shared_ptr<const Node> p) : p_(std::move(p)) {}
  std::shared_ptr<const Node> p_;
};

class Node {
 public:
  Kind kind = Kind::Number;
  Number num;
  Symbol sym;
  Fn fn = Fn::Sin;
  std::vector<Expr> args;
  std::shared_ptr<const Kernel> kern;
  std::size_t hash = 0;
};

/// Wraps a fully populated node without canonicalisation; prefer the builders.
Expr make_node(Node&& n);

/// Numeric function embedded in an expression tree (matrix inverses,
/// quadratures, implicit solutions). Implementations must be thread-safe.
class Kernel {
 public:
  virtual ~Kernel() = default;
  virtual std::string name() const = 0;
  virtual int arity() const = 0;
  /// nullopt signals a domain error at this point.
  virtual std::optional<double> evaluate(std::span<const double> args) const = 0;
  /// Partial derivative with respect to argument k, as an expression in args.
  virtual Expr partial(int k, std::span<const Expr> args) const = 0;
  /// Creation counter; gives a deterministic order between kernels.
  std::uint64_t serial() const { return serial_; }

 protected:
  Kernel();

 private:
  std::uint64_t serial_;
};

/// Total structural order used for canonical argument sorting.
int compare(const Expr& a, const Expr& b);

struct ExprLess {
  bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};
struct ExprHash {
  std::size_t operator()(const Expr& e) const { return e.hash(); }
};

Expr add(std::vector<Expr> terms);
Expr mul(std::vector<Expr> factors);
Expr pow(const Expr& base, const Expr& exponent);
Expr func(Fn f, std::vector<Expr> args);
Expr call(std::shared_ptr<const Kernel> k, std::vector<Expr> args);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr& operator+=(Expr& a, const Expr& b);
Expr& operator-=(Expr& a, const Expr& b);
Expr& operator*=(Expr& a, const Expr& b);

Expr rational(long long n, long long d);
Expr sin(const Expr& x);
Expr cos(const Expr& x);
Expr tan(const Expr& x);
Expr exp(const Expr& x);
Expr log(const Expr& x);
Expr sqrt(const Expr& x);
Expr abs(const Expr& x);
Expr atan2(const Expr& y, const Expr& x);

/// Splits a term into numeric coefficient and remaining factor.
std::pair<Number, Expr> split_coefficient(const Expr& term);

std::set<Symbol> free_symbols(const Expr& e);
std::set<Symbol> free_symbols(std::span<const Expr> es);
bool depends_on(const Expr& e, const Symbol& s);
/// Highest jet order appearing in e, or -1 when e has no jet symbols.
int max_jet_order(const Expr& e);
/// Number of distinct nodes, stopping early once cap is exceeded.
std::size_t node_count(const Expr& e, std::size_t cap = SIZE_MAX);

using ExprVector = std::vector<Expr>;
using ExprMatrix = std::vector<std::vector<Expr>>;

std::ostream& operator<<(std::ostream& os, const Expr& e);

}  // namespace mechsym::sym
