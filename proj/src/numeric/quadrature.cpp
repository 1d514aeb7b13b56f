#include "mechsym/numeric/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <queue>

namespace mechsym::numeric {
namespace {

struct DomainFailure {};

struct Piece {
  double a, b, value, error, l1;
  bool operator<(const Piece& o) const { return error < o.error; }
};

// Global adaptive bisection: always split the worst interval, stop once the
// summed error meets tol * max(1, L1). Boost's recursive rule targets
// tol * |estimate| per interval, which never terminates early when the
// integral nearly cancels.
template <class G>
double adaptive(G& g, double a, double b, double tol, std::size_t budget, double* err, double* l1) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  auto piece = [&](double lo, double hi) {
    Piece p{lo, hi, 0.0, 0.0, 0.0};
    p.value = GK::integrate(g, lo, hi, 0, 0.0, &p.error, &p.l1);
    return p;
  };
  std::priority_queue<Piece> heap;
  heap.push(piece(a, b));
  double value = heap.top().value, error = heap.top().error, mass = heap.top().l1;
  while (error > tol * std::max(1.0, mass) && heap.size() < budget) {
    const Piece worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) break;
    const Piece left = piece(worst.a, mid), right = piece(mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    mass += left.l1 + right.l1 - worst.l1;
    heap.push(left);
    heap.push(right);
  }
  *err = error;
  *l1 = mass;
  return value;
}

}  // namespace

QuadratureResult integrate(const std::function<std::optional<double>(double)>& f, double a, double b,
                           double tol, unsigned max_depth) {
  QuadratureResult res;
  if (a == b) {
    res.ok = true;
    return res;
  }
  if (a > b) {
    res = integrate(f, b, a, tol, max_depth);
    res.value = -res.value;
    return res;
  }
  auto g = [&](double x) {
    auto v = f(x);
    if (!v || !std::isfinite(*v)) throw DomainFailure{};
    return *v;
  };
  try {
    double err = 0.0;
    double l1 = 0.0;
    res.value = adaptive(g, a, b, tol, std::size_t{1} << std::min(max_depth, 12u), &err, &l1);
    res.error = err;
    // accept when the estimate meets either the relative or the absolute target
    res.ok = std::isfinite(res.value) && (err <= tol * std::max(1.0, l1) * 10.0);
    if (!res.ok) {
      // Endpoint singularities (turning points) defeat Gauss-Kronrod refinement;
      // the double-exponential rule clusters nodes at the ends instead.
      static thread_local boost::math::quadrature::tanh_sinh<double> ts;
      double ts_err = 0.0;
      double ts_l1 = 0.0;
      const double v = ts.integrate(g, a, b, tol, &ts_err, &ts_l1);
      if (std::isfinite(v) && ts_err <= tol * std::max(1.0, ts_l1) * 10.0) {
        res.value = v;
        res.error = ts_err;
        res.ok = true;
      }
    }
  } catch (const DomainFailure&) {
    res.ok = false;
  } catch (const std::exception&) {
    res.ok = false;
  }
  return res;
}

}  // namespace mechsym::numeric
