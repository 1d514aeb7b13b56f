#include "mechsym/flows.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mechsym/bracket.hpp"
#include "mechsym/sym/calculus.hpp"
#include "mechsym/sym/simplify.hpp"

namespace mechsym {
namespace {

using sym::simplify;

std::size_t sz(int i) { return static_cast<std::size_t>(i); }

std::vector<double> pack(const State& s) {
  std::vector<double> y = s.q;
  y.insert(y.end(), s.qd.begin(), s.qd.end());
  return y;
}

State unpack(double t, const std::vector<double>& y, int n) {
  State s;
  s.t = t;
  s.q.assign(y.begin(), y.begin() + n);
  s.qd.assign(y.begin() + n, y.begin() + 2 * n);
  return s;
}

std::vector<double> make_grid(double eps_end, std::vector<double> grid) {
  grid.push_back(0.0);
  grid.push_back(eps_end);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

// Integrates an eps-flow from 0 outwards in both directions as needed and
// reports it on the grid.
FlowMap run_flow(const numeric::Rhs& rhs, const std::vector<double>& y0, const std::vector<double>& grid,
                 double tol, const std::function<State(const std::vector<double>&)>& to_state) {
  FlowMap out;
  std::vector<double> neg, pos;
  for (double e : grid) (e < 0 ? neg : pos).push_back(e);
  numeric::OdeOptions o;
  o.rtol = o.atol = tol;
  std::map<double, std::vector<double>> found;
  for (const auto* side : {&pos, &neg}) {
    if (side->empty()) continue;
    const double end = side == &pos ? side->back() : side->front();
    o.stops = *side;
    const auto sol = numeric::dopri45(rhs, 0.0, y0, end, o);
    for (std::size_t k = 0; k < sol.t.size(); ++k) {
      if (std::find(side->begin(), side->end(), sol.t[k]) != side->end()) found[sol.t[k]] = sol.y[k];
    }
    if (sol.truncated) {
      out.truncated = true;
      out.reason = sol.reason;
    }
  }
  found[0.0] = y0;
  for (double e : grid) {
    auto it = found.find(e);
    if (it == found.end()) continue;
    out.eps.push_back(e);
    out.states.push_back(to_state(it->second));
  }
  return out;
}

}  // namespace

State Trajectory::node(std::size_t k) const { return unpack(solution.t[k], solution.y[k], dof); }

State Trajectory::at(double t) const { return unpack(t, solution.at(t), dof); }

Trajectory integrate(const LagrangianSystem& sys, const State& initial, double t_end, double tol,
                     std::vector<double> stops) {
  const int n = sys.dof();
  auto prog = std::make_shared<StateProgram>(sys, sys.force());
  numeric::Rhs rhs = [prog, n](double t, std::span<const double> y, std::span<double> dy, std::string* why) {
    const auto N = sz(n);
    std::copy(y.begin() + static_cast<std::ptrdiff_t>(N), y.end(), dy.begin());
    return prog->run(t, y, dy.subspan(N, N), why);
  };
  numeric::OdeOptions o;
  o.rtol = o.atol = tol;
  o.stops = std::move(stops);
  Trajectory traj;
  traj.dof = n;
  traj.tol = tol;
  traj.solution = numeric::dopri45(rhs, initial.t, pack(initial), t_end, o);
  return traj;
}

void write_csv(const Trajectory& traj, std::ostream& os) {
  os << "t";
  for (int i = 1; i <= traj.dof; ++i) os << ",q" << i;
  for (int i = 1; i <= traj.dof; ++i) os << ",qd" << i;
  os << "\n";
  const auto old = os.precision(17);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << traj.solution.t[k];
    for (double v : traj.solution.y[k]) os << "," << v;
    os << "\n";
  }
  os.precision(old);
}

ConservationVerdict monitor(const LagrangianSystem& sys, const Trajectory& traj,
                            const std::vector<ConservedQuantity>& integrals, const MonitorOptions& opts) {
  ConservationVerdict out;
  const auto& sol = traj.solution;
  const std::size_t nodes = sol.t.size();
  const auto N = sz(traj.dof);

  for (std::size_t k = 1; k < nodes; ++k) {
    double prev = 0, cur = 0;
    for (std::size_t i = 0; i < N; ++i) {
      prev += sol.y[k - 1][i] * sol.y[k - 1][N + i];
      cur += sol.y[k][i] * sol.y[k][N + i];
    }
    if (prev < 0 && cur >= 0) {
      // locate the sign change on the dense output
      double a = sol.t[k - 1], b = sol.t[k];
      for (int it = 0; it < 60; ++it) {
        const double m = 0.5 * (a + b);
        const auto y = sol.at(m);
        double v = 0;
        for (std::size_t i = 0; i < N; ++i) v += y[i] * y[N + i];
        (v < 0 ? a : b) = m;
      }
      out.radius_minima.push_back(0.5 * (a + b));
    }
  }

  for (const auto& cq : integrals) {
    IntegralVerdict v;
    v.name = cq.name;
    const StateProgram prog(sys, {cq.C});
    auto value_at = [&](double t, const std::vector<double>& y, double& c) {
      return prog.run(t, y, std::span<double>(&c, 1));
    };
    std::vector<double> c(nodes);
    bool ok = true;
    for (std::size_t k = 0; k < nodes && ok; ++k) {
      ok = value_at(sol.t[k], sol.y[k], c[k]);
      if (!ok) v.detail = "integral not evaluable at t = " + std::to_string(sol.t[k]);
    }
    if (!ok || nodes == 0) {
      out.integrals.push_back(v);
      continue;
    }
    double lo = c[0], hi = c[0];
    auto close_segment = [&] { v.max_drift = std::max(v.max_drift, hi - lo); };
    for (std::size_t k = 1; k < nodes; ++k) {
      const double dc = c[k] - c[k - 1];
      const double scale = 1.0 + std::abs(c[k - 1]);
      bool jump = false;
      if (std::abs(dc) > opts.jump_threshold * scale && sol.local_error[k] < opts.quiet_error * scale) {
        double a = sol.t[k - 1], b = sol.t[k], ca = c[k - 1], cb = c[k];
        bool eval_ok = true;
        for (int it = 0; it < 40 && eval_ok; ++it) {
          const double m = 0.5 * (a + b);
          double cm = 0;
          eval_ok = value_at(m, sol.at(m), cm);
          if (!eval_ok) break;
          if (std::abs(cm - ca) > std::abs(cb - cm)) {
            b = m;
            cb = cm;
          } else {
            a = m;
            ca = cm;
          }
        }
        if (eval_ok && std::abs(cb - ca) > 0.5 * std::abs(dc)) {
          jump = true;
          v.jump_times.push_back(0.5 * (a + b));
          v.jump_sizes.push_back(cb - ca);
        } else {
          ++v.rejected_jumps;
        }
      }
      if (jump) {
        close_segment();
        lo = hi = c[k];
      } else {
        lo = std::min(lo, c[k]);
        hi = std::max(hi, c[k]);
      }
    }
    close_segment();
    if (v.max_drift >= opts.drift_tol) {
      v.classification = ConservationStatus::Failed;
      v.detail = "drift " + std::to_string(v.max_drift) + " inside a smooth segment";
    } else if (v.jump_times.empty()) {
      v.classification = ConservationStatus::NumericGlobal;
    } else {
      v.classification = ConservationStatus::NumericLocal;
    }
    out.integrals.push_back(std::move(v));
  }
  return out;
}

FlowMap flow_ode(const LagrangianSystem& sys, const SymmetryGenerator& gen, const State& state, double eps_end,
                 double tol, std::vector<double> eps_grid) {
  const int n = sys.dof();
  ExprVector field = gen.P;
  const auto rates = generator_rates(sys, gen);
  field.insert(field.end(), rates.begin(), rates.end());
  auto prog = std::make_shared<StateProgram>(sys, field);
  const double t = state.t;
  numeric::Rhs rhs = [prog, t](double, std::span<const double> y, std::span<double> dy, std::string* why) {
    return prog->run(t, y, dy, why);
  };
  auto fm = run_flow(rhs, pack(state), make_grid(eps_end, std::move(eps_grid)), tol,
                     [t, n](const std::vector<double>& y) { return unpack(t, y, n); });
  fm.method = "ode";
  return fm;
}

FlowMap flow_gauge(const LagrangianSystem& sys, const SymmetryGenerator& gen, const State& state, double eps_end,
                   double tol, std::vector<double> eps_grid) {
  const int n = sys.dof();
  const auto rates = generator_rates(sys, gen);
  ExprVector field{gen.tau};
  for (int i = 0; i < n; ++i) field.push_back(simplify(gen.P[sz(i)] + gen.tau * sys.space().QD(i)));
  for (int i = 0; i < n; ++i) field.push_back(simplify(rates[sz(i)] + gen.tau * sys.force()[sz(i)]));
  auto prog = std::make_shared<StateProgram>(sys, field);
  numeric::Rhs rhs = [prog](double, std::span<const double> y, std::span<double> dy, std::string* why) {
    return prog->run(y[0], y.subspan(1), dy, why);
  };
  std::vector<double> y0{state.t};
  const auto rest = pack(state);
  y0.insert(y0.end(), rest.begin(), rest.end());
  auto fm = run_flow(rhs, y0, make_grid(eps_end, std::move(eps_grid)), tol, [n](const std::vector<double>& y) {
    return unpack(y[0], std::vector<double>(y.begin() + 1, y.end()), n);
  });
  fm.method = "gauge";
  return fm;
}

FlowSeries::FlowSeries(const LagrangianSystem& sys, const Expr& C, const Expr& F, int order,
                       std::size_t node_cap) {
  terms_.push_back(F);
  for (int k = 1; k <= order; ++k) {
    terms_.push_back(pbracket(sys, terms_.back(), C));
    if (sym::node_count(terms_.back(), node_cap) > node_cap) {
      throw SeriesTooLarge("bracket " + std::to_string(k) + " exceeds " + std::to_string(node_cap) +
                           " nodes; use the ODE flow instead");
    }
  }
  program_ = std::make_unique<StateProgram>(sys, terms_);
}

double FlowSeries::operator()(const State& s, double eps) const {
  std::vector<double> v(terms_.size());
  std::string why;
  if (!program_->run(s.t, s.q, s.qd, v, &why)) throw std::domain_error("series term not evaluable: " + why);
  double sum = 0, coef = 1;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k > 0) coef *= eps / static_cast<double>(k);
    sum += coef * v[k];
  }
  return sum;
}

GaugeEquivalence verify_gauge_equivalence(const LagrangianSystem& sys, const SymmetryGenerator& gen, const Expr& tau,
                                          const Expr& C, const sym::CheckOptions& opts) {
  const auto& S = sys.space();
  const auto rates = generator_rates(sys, gen);
  Expr y_action = tau * sym::diff(C, S.t());
  for (int i = 0; i < sys.dof(); ++i) {
    y_action += (gen.P[sz(i)] + tau * S.QD(i)) * sym::diff(C, S.q(i));
    y_action += (rates[sz(i)] + tau * sys.force()[sz(i)]) * sym::diff(C, S.qd(i));
  }
  GaugeEquivalence out;
  out.difference = simplify(y_action - generator_action(sys, gen, C));
  out.check = sym::check_zero({out.difference}, sys.pinned(opts));
  out.ok = out.check.ok();
  return out;
}

MappingReport solution_mapping_check(const LagrangianSystem& sys, const SymmetryGenerator& gen,
                                     const Trajectory& traj, double eps, double tol) {
  MappingReport rep;
  const int n = sys.dof();
  const auto N = sz(n);
  if (traj.size() < 2) {
    rep.reason = "trajectory too short";
    return rep;
  }
  const double t0 = traj.solution.t_front();
  const double t1 = traj.solution.t_back();
  rep.h = std::pow(tol, 0.25);
  const auto steps = static_cast<std::size_t>(std::floor((t1 - t0) / rep.h));
  if (steps < 2) {
    rep.reason = "trajectory shorter than two grid steps";
    return rep;
  }
  std::vector<double> grid(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) grid[k] = t0 + static_cast<double>(k) * rep.h;

  // base states landed on the grid, so no interpolation error enters
  const auto base = integrate(sys, traj.node(0), grid.back(), tol, grid);
  std::map<double, std::size_t> index;
  for (std::size_t k = 0; k < base.size(); ++k) index[base.solution.t[k]] = k;

  ExprVector field = gen.P;
  const auto rates = generator_rates(sys, gen);
  field.insert(field.end(), rates.begin(), rates.end());
  const StateProgram flow(sys, field);
  const StateProgram force(sys, sys.force());
  // fixed steps keep the transport error a smooth function of the node
  const int flow_steps = std::max(8, static_cast<int>(std::ceil(std::abs(eps) / 0.01)));

  std::vector<std::vector<double>> image(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    auto it = index.find(grid[k]);
    if (it == index.end()) {
      rep.reason = "base trajectory did not reach t = " + std::to_string(grid[k]);
      return rep;
    }
    const double t = grid[k];
    numeric::Rhs rhs = [&flow, t](double, std::span<const double> y, std::span<double> dy, std::string* why) {
      return flow.run(t, y, dy, why);
    };
    image[k] = numeric::rk4_fixed(rhs, 0.0, base.solution.y[it->second], eps, flow_steps);
    if (image[k].empty()) {
      rep.reason = "flow left the domain at t = " + std::to_string(t);
      return rep;
    }
  }
  std::vector<double> f(N);
  for (std::size_t k = 1; k + 1 < grid.size(); ++k) {
    if (!force.run(grid[k], image[k], f)) {
      rep.reason = "force not evaluable on the image at t = " + std::to_string(grid[k]);
      return rep;
    }
    for (std::size_t i = 0; i < N; ++i) {
      const double acc = (image[k + 1][i] - 2 * image[k][i] + image[k - 1][i]) / (rep.h * rep.h);
      const double vel = (image[k + 1][i] - image[k - 1][i]) / (2 * rep.h);
      const double r = std::abs(acc - f[i]);
      if (r > rep.max_residual) {
        rep.max_residual = r;
        rep.at_time = grid[k];
      }
      rep.max_velocity_mismatch = std::max(rep.max_velocity_mismatch, std::abs(vel - image[k][N + i]));
    }
  }
  rep.nodes = grid.size();
  rep.ok = true;
  return rep;
}

}  // namespace mechsym
