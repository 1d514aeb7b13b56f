#include "mechsym/numeric/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mechsym::numeric {
namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b_hat, the error weights
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

using Vec = std::vector<double>;

bool call(const Rhs& rhs, double t, const Vec& y, Vec& dy, std::string& why) {
  if (!rhs(t, y, dy, &why)) {
    if (why.empty()) why = "right-hand side not evaluable";
    return false;
  }
  for (double v : dy) {
    if (!std::isfinite(v)) {
      why = "right-hand side not finite";
      return false;
    }
  }
  return true;
}

}  // namespace

std::size_t OdeSolution::segment(double time) const {
  auto it = std::upper_bound(t.begin(), t.end(), time);
  std::size_t k = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
  if (k + 1 >= t.size()) k = t.size() >= 2 ? t.size() - 2 : 0;
  return k;
}

std::vector<double> OdeSolution::at(double time) const {
  if (t.size() == 1) return y.front();
  const std::size_t k = segment(time);
  const double h = t[k + 1] - t[k];
  const double s = (time - t[k]) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  Vec out(y[k].size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = h00 * y[k][i] + h10 * h * dy[k][i] + h01 * y[k + 1][i] + h11 * h * dy[k + 1][i];
  }
  return out;
}

OdeSolution dopri45(const Rhs& rhs, double t0, std::vector<double> y0, double t1, const OdeOptions& opts) {
  OdeSolution sol;
  const std::size_t n = y0.size();
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y5(n);
  std::string why;

  if (!call(rhs, t0, y0, k1, why)) {
    sol.truncated = true;
    sol.reason = why;
    return sol;
  }
  sol.t.push_back(t0);
  sol.y.push_back(y0);
  sol.dy.push_back(k1);
  sol.local_error.push_back(0.0);
  if (t0 == t1) return sol;

  std::vector<double> stops;
  for (double s : opts.stops) {
    if ((s - t0) * dir > 0 && (t1 - s) * dir > 0) stops.push_back(s);
  }
  std::sort(stops.begin(), stops.end(), [dir](double a, double b) { return a * dir < b * dir; });
  stops.push_back(t1);
  std::size_t next_stop = 0;

  auto scale = [&](std::size_t i, const Vec& a, const Vec& b) {
    return opts.atol + opts.rtol * std::max(std::abs(a[i]), std::abs(b[i]));
  };

  double h = opts.h0;
  if (h <= 0) {
    // Hairer's starting-step heuristic.
    double d0 = 0, d1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = opts.atol + opts.rtol * std::abs(y0[i]);
      d0 = std::max(d0, std::abs(y0[i]) / sc);
      d1 = std::max(d1, std::abs(k1[i]) / sc);
    }
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, std::abs(t1 - t0));
  }
  if (opts.hmax > 0) h = std::min(h, opts.hmax);

  double t = t0;
  Vec y = std::move(y0);
  while (true) {
    if (sol.accepted + sol.rejected >= opts.max_steps) {
      sol.truncated = true;
      sol.reason = "step budget exhausted";
      break;
    }
    const double target = stops[next_stop];
    bool land = false;
    double step = h;
    if (std::abs(target - t) <= step * (1 + 1e-12)) {
      step = std::abs(target - t);
      land = true;
    }
    const double hs = dir * step;
    if (step < 1e-14 * std::max(1.0, std::abs(t))) {
      sol.truncated = true;
      sol.reason = "step size underflow";
      break;
    }

    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * a21 * k1[i];
    ok = ok && call(rhs, t + c2 * hs, tmp, k2, why);
    if (ok) {
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
      ok = call(rhs, t + c3 * hs, tmp, k3, why);
    }
    if (ok) {
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      ok = call(rhs, t + c4 * hs, tmp, k4, why);
    }
    if (ok) {
      for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      ok = call(rhs, t + c5 * hs, tmp, k5, why);
    }
    if (ok) {
      for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
      ok = call(rhs, t + hs, tmp, k6, why);
    }
    if (ok) {
      for (std::size_t i = 0; i < n; ++i)
        y5[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
      ok = call(rhs, t + hs, y5, k7, why);
    }
    if (!ok) {
      // A failed stage may just be an overshoot into the singular set.
      sol.rejected++;
      h = step * 0.25;
      if (h < 1e-12 * std::max(1.0, std::abs(t))) {
        sol.truncated = true;
        sol.reason = why;
        break;
      }
      why.clear();
      continue;
    }

    double err = 0.0;
    double abs_err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ei = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      abs_err = std::max(abs_err, std::abs(ei));
      err = std::max(err, std::abs(ei) / scale(i, y, y5));
    }
    if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();

    if (err <= 1.0) {
      t = land ? target : t + hs;
      y = y5;
      k1 = k7;
      sol.accepted++;
      sol.t.push_back(t);
      sol.y.push_back(y);
      sol.dy.push_back(k1);
      sol.local_error.push_back(abs_err);
      sol.global_error += abs_err;
      if (land) {
        if (next_stop + 1 == stops.size()) break;
        ++next_stop;
      }
      const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h = step * fac;
    } else {
      sol.rejected++;
      h = step * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
    }
    if (opts.hmax > 0) h = std::min(h, opts.hmax);
  }
  return sol;
}

std::vector<double> rk4_fixed(const Rhs& rhs, double t0, std::vector<double> y0, double t1, int n) {
  const std::size_t m = y0.size();
  const double h = (t1 - t0) / n;
  Vec k1(m), k2(m), k3(m), k4(m), tmp(m);
  Vec y = std::move(y0);
  std::string why;
  for (int s = 0; s < n; ++s) {
    const double t = t0 + s * h;
    if (!call(rhs, t, y, k1, why)) return {};
    for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    if (!call(rhs, t + 0.5 * h, tmp, k2, why)) return {};
    for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    if (!call(rhs, t + 0.5 * h, tmp, k3, why)) return {};
    for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + h * k3[i];
    if (!call(rhs, t + h, tmp, k4, why)) return {};
    for (std::size_t i = 0; i < m; ++i) y[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return y;
}

}  // namespace mechsym::numeric
