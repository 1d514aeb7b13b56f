#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace mechsym::sym {

/// Numeric constant of an expression tree: an exact rational with 64-bit
/// numerator/denominator, or an IEEE double once exactness is lost
/// (explicit float literal, overflow, or an operation with a float operand).
class Number {
 public:
  constexpr Number() = default;
  constexpr Number(long long value) : num_(value) {}  // NOLINT(implicit)

  /// Exact rational n/d, normalised. Throws std::domain_error for d == 0.
  static Number rational(long long n, long long d);
  static Number real(double value);
  /// Exact when value is a dyadic rational with a small denominator or a
  /// short decimal; a float otherwise.
  static Number from_double(double value);

  bool is_exact() const { return exact_; }
  long long numerator() const { return num_; }
  long long denominator() const { return den_; }
  double to_double() const;
  long double to_long_double() const;

  bool is_zero() const;
  bool is_one() const;
  bool is_minus_one() const;
  bool is_integer() const;
  bool is_negative() const;
  bool is_positive() const;

  Number operator-() const;
  friend Number operator+(const Number& a, const Number& b);
  friend Number operator-(const Number& a, const Number& b);
  friend Number operator*(const Number& a, const Number& b);
  /// Throws std::domain_error on exact division by zero.
  friend Number operator/(const Number& a, const Number& b);

  /// a^n for integer n. Exact when a is exact (n < 0 requires a != 0).
  static Number pow_int(const Number& a, long long n);

  /// Exact k-th root of an exact non-negative rational when it exists.
  bool exact_root(long long k, Number& out) const;

  /// Total order: by value, exact before float on ties.
  friend int compare(const Number& a, const Number& b);
  friend bool operator==(const Number& a, const Number& b) { return compare(a, b) == 0; }

  std::size_t hash() const;
  std::string to_string() const;

 private:
  bool exact_ = true;
  long long num_ = 0;
  long long den_ = 1;
  double real_ = 0.0;
};

int compare(const Number& a, const Number& b);

}  // namespace mechsym::sym
