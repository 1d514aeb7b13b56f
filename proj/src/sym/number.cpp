#include "mechsym/sym/number.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mechsym::sym {
namespace {

using i128 = __int128;

bool fits(i128 v) {
  return v >= std::numeric_limits<long long>::min() + 1 &&
         v <= std::numeric_limits<long long>::max();
}

i128 gcd128(i128 a, i128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    const i128 r = a % b;
    a = b;
    b = r;
  }
  return a;
}

// Builds a normalised rational from 128-bit parts, degrading to a float
// when the reduced value does not fit in 64 bits.
Number make(i128 n, i128 d) {
  if (d < 0) {
    n = -n;
    d = -d;
  }
  const i128 g = gcd128(n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  if (fits(n) && fits(d)) {
    return Number::rational(static_cast<long long>(n), static_cast<long long>(d));
  }
  return Number::real(static_cast<double>(static_cast<long double>(n) / static_cast<long double>(d)));
}

}  // namespace

Number Number::rational(long long n, long long d) {
  if (d == 0) throw std::domain_error("rational with zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  const long long g = std::gcd(n < 0 ? -n : n, d);
  Number r;
  r.exact_ = true;
  r.num_ = g > 1 ? n / g : n;
  r.den_ = g > 1 ? d / g : d;
  return r;
}

Number Number::real(double value) {
  Number r;
  r.exact_ = false;
  r.real_ = value;
  r.num_ = 0;
  r.den_ = 1;
  return r;
}

Number Number::from_double(double value) {
  if (!std::isfinite(value)) return real(value);
  for (long long d : {1LL, 2LL, 4LL, 8LL, 10LL, 16LL, 100LL, 1000LL, 10000LL}) {
    const double scaled = value * static_cast<double>(d);
    if (std::abs(scaled) < 1e15 && scaled == std::round(scaled)) {
      const auto n = static_cast<long long>(std::round(scaled));
      if (static_cast<double>(n) / static_cast<double>(d) == value) return rational(n, d);
    }
  }
  return real(value);
}

double Number::to_double() const {
  if (!exact_) return real_;
  return static_cast<double>(static_cast<long double>(num_) / static_cast<long double>(den_));
}

long double Number::to_long_double() const {
  if (!exact_) return real_;
  return static_cast<long double>(num_) / static_cast<long double>(den_);
}

bool Number::is_zero() const { return exact_ ? num_ == 0 : real_ == 0.0; }
bool Number::is_one() const { return exact_ ? (num_ == 1 && den_ == 1) : real_ == 1.0; }
bool Number::is_minus_one() const { return exact_ ? (num_ == -1 && den_ == 1) : real_ == -1.0; }
bool Number::is_integer() const { return exact_ && den_ == 1; }
bool Number::is_negative() const { return exact_ ? num_ < 0 : real_ < 0.0; }
bool Number::is_positive() const { return exact_ ? num_ > 0 : real_ > 0.0; }

Number Number::operator-() const {
  if (!exact_) return real(-real_);
  return make(-static_cast<i128>(num_), den_);
}

Number operator+(const Number& a, const Number& b) {
  if (!a.exact_ || !b.exact_) return Number::real(a.to_double() + b.to_double());
  return make(static_cast<i128>(a.num_) * b.den_ + static_cast<i128>(b.num_) * a.den_,
              static_cast<i128>(a.den_) * b.den_);
}

Number operator-(const Number& a, const Number& b) { return a + (-b); }

Number operator*(const Number& a, const Number& b) {
  if (!a.exact_ || !b.exact_) return Number::real(a.to_double() * b.to_double());
  return make(static_cast<i128>(a.num_) * b.num_, static_cast<i128>(a.den_) * b.den_);
}

Number operator/(const Number& a, const Number& b) {
  if (!a.exact_ || !b.exact_) return Number::real(a.to_double() / b.to_double());
  if (b.num_ == 0) throw std::domain_error("exact division by zero");
  return make(static_cast<i128>(a.num_) * b.den_, static_cast<i128>(a.den_) * b.num_);
}

Number Number::pow_int(const Number& a, long long n) {
  if (!a.exact_) return real(std::pow(a.real_, static_cast<double>(n)));
  if (n == 0) return Number(1);
  Number base = a;
  if (n < 0) {
    base = Number(1) / a;
    n = -n;
  }
  Number result(1);
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

bool Number::exact_root(long long k, Number& out) const {
  if (!exact_ || k <= 0 || num_ < 0) return false;
  auto iroot = [k](long long v, long long& r) {
    const double guess = std::round(std::pow(static_cast<double>(v), 1.0 / static_cast<double>(k)));
    for (long long c = static_cast<long long>(guess) - 1; c <= static_cast<long long>(guess) + 1; ++c) {
      if (c < 0) continue;
      i128 p = 1;
      bool over = false;
      for (long long j = 0; j < k; ++j) {
        p *= c;
        if (p > static_cast<i128>(v)) {
          over = true;
          break;
        }
      }
      if (!over && p == static_cast<i128>(v)) {
        r = c;
        return true;
      }
    }
    return false;
  };
  long long rn = 0;
  long long rd = 0;
  if (!iroot(num_, rn) || !iroot(den_, rd)) return false;
  out = rational(rn, rd);
  return true;
}

int compare(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) {
    const i128 l = static_cast<i128>(a.num_) * b.den_;
    const i128 r = static_cast<i128>(b.num_) * a.den_;
    return l < r ? -1 : (l > r ? 1 : 0);
  }
  const double x = a.to_double();
  const double y = b.to_double();
  if (x < y) return -1;
  if (x > y) return 1;
  if (a.exact_ != b.exact_) return a.exact_ ? -1 : 1;
  return 0;
}

std::size_t Number::hash() const {
  if (exact_) {
    return std::hash<long long>{}(num_) * 31u + std::hash<long long>{}(den_);
  }
  return std::hash<double>{}(real_) ^ 0x9e3779b97f4a7c15ull;
}

std::string Number::to_string() const {
  if (!exact_) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", real_);
    std::string s(buf);
    // keep a float recognisable as such when re-parsed
    if (s.find_first_of(".eEni") == std::string::npos) s += ".0";
    return s;
  }
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

}  // namespace mechsym::sym
