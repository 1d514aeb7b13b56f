#include "mechsym/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mechsym/bracket.hpp"
#include "mechsym/sym/calculus.hpp"
#include "mechsym/sym/parser.hpp"
#include "mechsym/sym/printer.hpp"

namespace mechsym::cli {
namespace {

using io::json;
using io::Record;
using io::Report;
using io::Verdict;

std::string str(const Expr& e) { return sym::to_string(e); }

json strs(const ExprVector& v) {
  json out = json::array();
  for (const auto& e : v) out.push_back(str(e));
  return out;
}

Report start(const char* command, const io::SystemFile& file, const Options& opts) {
  Report r;
  r.command = command;
  r.input_name = file.name;
  r.input_digest = file.digest;
  r.seed = opts.seed;
  return r;
}

void attach(Record& rec, const sym::CheckResult& c) {
  rec.numbers["samples"] = c.samples;
  if (c.verdict != sym::Verdict::True) {
    rec.witnesses = io::witness_json(c);
    if (!c.detail.empty()) rec.data["check"] = c.detail;
  }
}

Verdict passes(bool ok) { return ok ? Verdict::Pass : Verdict::Fail; }

// A generator or conserved quantity named in a request.
SymmetryGenerator resolve_generator(const io::SystemFile& file, const std::string& name) {
  if (const auto* g = file.find_generator(name)) return g->gen;
  if (const auto* c = file.find_conserved(name)) return c_to_p(*file.system, c->expr, name);
  throw io::InputError("", "unknown generator or conserved quantity " + name);
}

const io::NamedExpr& resolve_conserved(const io::SystemFile& file, const std::string& name) {
  const auto* c = file.find_conserved(name);
  if (!c) throw io::InputError("", "unknown conserved quantity " + name);
  return *c;
}

void add_class(Report& r, const std::string& id, const io::SystemFile& file, const SymmetryGenerator& gen,
               const sym::CheckOptions& o) {
  const auto cls = classify(file.system->space(), gen, o);
  auto& rec = r.add(id, Verdict::Info, class_name(cls.tag));
  if (cls.tag == SymmetryClass::Tag::Point) {
    rec.data["tau"] = str(cls.tau);
    rec.data["eta"] = strs(cls.eta);
  } else if (!cls.reason.empty()) {
    rec.data["reason"] = cls.reason;
  }
}

void add_reconstruction_failure(Report& r, const std::string& id, const Reconstruction& rec) {
  auto& x = r.add(id, Verdict::Fail, rec.failure);
  if (!rec.closure_pair.empty()) x.data["pair"] = rec.closure_pair;
  if (!rec.closure.witness.empty()) x.witnesses = io::witness_json(rec.closure);
  else x.witnesses = io::witness_json(rec.path);
}

std::vector<ConservedQuantity> quantities(const io::SystemFile& file, const std::vector<std::string>& names) {
  std::vector<ConservedQuantity> out;
  for (const auto& n : names) {
    const auto& c = resolve_conserved(file, n);
    ConservedQuantity q;
    q.name = c.name;
    q.C = c.expr;
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<std::string> all_conserved(const io::SystemFile& file) {
  std::vector<std::string> names;
  for (const auto& c : file.conserved) names.push_back(c.name);
  return names;
}

void write_flow_csv(std::ostream& os, const FlowMap& fm, int n, bool header) {
  if (header) {
    os << "eps,t";
    for (int i = 1; i <= n; ++i) os << ",q" << i;
    for (int i = 1; i <= n; ++i) os << ",qd" << i;
    os << "\n";
  }
  os << std::setprecision(17);
  for (std::size_t k = 0; k < fm.states.size(); ++k) {
    const auto& s = fm.states[k];
    os << fm.eps[k] << "," << s.t;
    for (double v : s.q) os << "," << v;
    for (double v : s.qd) os << "," << v;
    os << "\n";
  }
}

}  // namespace

sym::CheckOptions check_options(const io::SystemFile& file, const Options& opts) {
  sym::CheckOptions o;
  o.seed = opts.seed;
  o.tol = opts.tol;
  o.trials = opts.trials;
  return file.check_options(o);
}

Report cmd_check(const io::SystemFile& file, const Options& opts) {
  const auto& sys = *file.system;
  const auto o = check_options(file, opts);
  auto r = start("check", file, opts);
  for (const auto& w : sys.warnings()) r.add("lagrangian/warning", Verdict::Info, w);
  {
    const auto el = check_el_identity(sys, o);
    attach(r.add("lagrangian/el-identity", io::from_check(el)), el);
  }
  for (const auto& c : file.conserved) {
    const auto cq = is_conserved(sys, c.expr, o, c.name);
    Verdict v = cq.status == ConservationStatus::SymbolicVerified ? Verdict::Pass : io::from_check(cq.check);
    auto& rec = r.add("conserved/" + c.name, v, v == Verdict::Fail ? "D_t C = " + str(cq.solution_rate) : "");
    rec.data["C"] = str(c.expr);
    rec.data["kind"] = kind_name(cq.kind);
    rec.data["D_t C"] = str(cq.solution_rate);
    attach(rec, cq.check);
    const auto viab = conservation_via_bracket(sys, c.expr, o);
    attach(r.add("bracket-conservation/" + c.name, io::from_check(viab)), viab);
  }
  for (const auto& g : file.generators) {
    const auto eom = is_eom_symmetry(sys, g.gen, o);
    auto& er = r.add("eom-symmetry/" + g.name, eom.ok ? Verdict::Pass : io::from_check(eom.check));
    if (!eom.ok) er.data["residual"] = strs(eom.residual);
    attach(er, eom.check);
    const auto var = is_variational_symmetry(sys, g.gen, o);
    auto& vr = r.add("variational-symmetry/" + g.name, var.verdict ? Verdict::Pass : io::from_check(var.check));
    if (var.W) vr.data["W"] = str(*var.W);
    if (!var.verdict) vr.data["E0"] = strs(var.residual);
    attach(vr, var.check);
    add_class(r, "class/" + g.name, file, g.gen, o);
  }
  return r;
}

Report cmd_noether(const io::SystemFile& file, const Options& opts, Direction dir, const std::string& name) {
  const auto& sys = *file.system;
  const auto o = check_options(file, opts);
  auto r = start(dir == Direction::ToSymmetry ? "noether to-symmetry" : "noether to-integral", file, opts);
  const auto state = sys.space().state_symbols();
  if (dir == Direction::ToSymmetry) {
    const auto& c = resolve_conserved(file, name);
    const auto gen = c_to_p(sys, c.expr, name);
    auto& m = r.add("noether/to-symmetry/" + name, Verdict::Info);
    m.data["C"] = str(c.expr);
    m.data["P"] = strs(gen.P);
    add_class(r, "class/" + name, file, gen, o);
    const auto rec = p_to_c(sys, gen, file.base, o);
    if (!rec.ok) {
      add_reconstruction_failure(r, "roundtrip/" + name, rec);
      return r;
    }
    const auto same = sym::check_zero(sym::gradient(rec.C - c.expr, state), o);
    auto& rt = r.add("roundtrip/" + name, io::from_check(same), "p_to_c(c_to_p(C)) - C is constant");
    rt.data["rebuilt"] = str(rec.C);
    attach(rt, same);
    return r;
  }
  const auto* g = file.find_generator(name);
  if (!g) throw io::InputError("", "unknown generator " + name);
  add_class(r, "class/" + name, file, g->gen, o);
  const auto rec = p_to_c(sys, g->gen, file.base, o);
  if (!rec.ok) {
    add_reconstruction_failure(r, "noether/to-integral/" + name, rec);
    return r;
  }
  auto& m = r.add("noether/to-integral/" + name, Verdict::Pass);
  m.data["C"] = str(rec.C);
  m.data["quadrature"] = rec.used_quadrature;
  const auto back = c_to_p(sys, rec.C, name);
  std::vector<std::pair<Expr, Expr>> pairs;
  for (std::size_t i = 0; i < back.P.size(); ++i) pairs.emplace_back(back.P[i], g->gen.P[i]);
  const auto same = sym::check_pairs(pairs, o);
  attach(r.add("roundtrip/" + name, io::from_check(same), "c_to_p(p_to_c(P)) == P"), same);
  return r;
}

Report cmd_bracket(const io::SystemFile& file, const Options& opts, const std::vector<std::string>& names_in,
                   bool theorems) {
  const auto& sys = *file.system;
  const auto o = check_options(file, opts);
  auto r = start("bracket", file, opts);
  const auto names = names_in.empty() ? all_conserved(file) : names_in;
  const auto family = quantities(file, names);
  const auto table = bracket_table(sys, family, o);
  auto& t = r.add("bracket/table", Verdict::Info);
  t.data["names"] = table.names;
  json entries = json::array(), closure = json::array(), coeff = json::array();
  for (std::size_t i = 0; i < family.size(); ++i) {
    json row = json::array(), crow = json::array(), krow = json::array();
    for (std::size_t j = 0; j < family.size(); ++j) {
      row.push_back(str(table.entries[i][j]));
      crow.push_back(closure_name(table.closure[i][j]));
      krow.push_back(table.coefficients[i][j]);
    }
    entries.push_back(std::move(row));
    closure.push_back(std::move(crow));
    coeff.push_back(std::move(krow));
  }
  t.data["entries"] = std::move(entries);
  t.data["closure"] = std::move(closure);
  t.numbers["coefficients"] = std::move(coeff);
  if (!theorems) return r;
  for (std::size_t i = 0; i < family.size(); ++i) {
    for (std::size_t j = i + 1; j < family.size(); ++j) {
      const auto pair = family[i].name + "," + family[j].name;
      const auto pa = verify_pair_action(sys, family[i].C, family[j].C, o);
      auto& a = r.add("pair-action/" + pair, pa.ok ? Verdict::Pass : io::from_check(pa.check));
      a.data["bracket"] = str(pa.bracket);
      attach(a, pa.check);
      const auto cm = verify_commutator_homomorphism(sys, family[i].C, family[j].C, o);
      auto& c = r.add("commutator/" + pair, cm.ok ? Verdict::Pass : io::from_check(cm.check));
      c.data["lhs"] = strs(cm.lhs);
      attach(c, cm.check);
    }
  }
  return r;
}

Report cmd_flow(const io::SystemFile& file, const Options& opts, const FlowRequest& req, std::ostream* csv) {
  const auto& sys = *file.system;
  auto r = start("flow", file, opts);
  if (!req.generator.empty()) resolve_generator(file, req.generator);
  bool header = true;
  int index = 0;
  for (const auto& entry : file.flows) {
    const int k = index++;
    if (!req.generator.empty() && entry.generator != req.generator) continue;
    const auto gen = resolve_generator(file, entry.generator);
    const auto eps = req.eps.empty() ? entry.eps : req.eps;
    const bool gauge = req.gauge.value_or(entry.gauge);
    const int series = req.series.value_or(entry.series);
    const std::string id = "flow/" + std::to_string(k) + "/" + entry.generator;
    if (eps.empty()) throw io::InputError("flows[" + std::to_string(k) + "].eps", "no eps values");
    const double eps_end = *std::max_element(eps.begin(), eps.end(), [](double a, double b) {
      return std::abs(a) < std::abs(b);
    });
    const auto fm = gauge ? flow_gauge(sys, gen, entry.state, eps_end, entry.tol, eps)
                          : flow_ode(sys, gen, entry.state, eps_end, entry.tol, eps);
    auto& m = r.add(id, fm.truncated ? Verdict::Fail : Verdict::Pass, fm.truncated ? fm.reason : fm.method);
    m.data["P"] = strs(gen.P);
    if (gauge) m.data["tau"] = str(gen.tau);
    json states = json::array();
    for (std::size_t s = 0; s < fm.states.size(); ++s) {
      auto st = io::state_json(fm.states[s]);
      st["eps"] = fm.eps[s];
      states.push_back(std::move(st));
    }
    m.numbers["states"] = std::move(states);
    if (csv) {
      write_flow_csv(*csv, fm, sys.dof(), header);
      header = false;
    }
    if (series > 0 && !fm.truncated) {
      // the series needs the conserved quantity that generates the flow
      Expr C;
      if (const auto* c = file.find_conserved(entry.generator)) {
        C = c->expr;
      } else {
        const auto rec = p_to_c(sys, gen, file.base, check_options(file, opts));
        if (!rec.ok) {
          add_reconstruction_failure(r, "flow-series/" + std::to_string(k), rec);
          continue;
        }
        C = rec.C;
      }
      try {
        std::vector<FlowSeries> coords;
        for (int i = 0; i < sys.dof(); ++i) coords.emplace_back(sys, C, sys.space().Q(i), series);
        for (int i = 0; i < sys.dof(); ++i) coords.emplace_back(sys, C, sys.space().QD(i), series);
        double worst = 0.0;
        for (std::size_t s = 0; s < fm.states.size(); ++s) {
          const auto& st = fm.states[s];
          for (std::size_t i = 0; i < coords.size(); ++i) {
            const double ode = i < st.q.size() ? st.q[i] : st.qd[i - st.q.size()];
            worst = std::max(worst, std::abs(coords[i](entry.state, fm.eps[s]) - ode));
          }
        }
        auto& sr = r.add("flow-series/" + std::to_string(k), Verdict::Info, "order " + std::to_string(series));
        sr.numbers["max_discrepancy"] = worst;
      } catch (const SeriesTooLarge& e) {
        r.add("flow-series/" + std::to_string(k), Verdict::Inconclusive, e.what());
      } catch (const std::domain_error& e) {
        r.add("flow-series/" + std::to_string(k), Verdict::Fail, e.what());
      }
    }
    if (!entry.trajectory.empty()) {
      const auto& ts = *file.find_trajectory(entry.trajectory);
      const auto traj = integrate(sys, ts.initial, ts.t_end, std::min(ts.tol, entry.tol));
      for (double e : eps) {
        if (e == 0.0) continue;
        const auto mc = solution_mapping_check(sys, gen, traj, e, entry.tol);
        const bool ok = mc.ok && mc.max_residual < 1e-6 && mc.max_velocity_mismatch < 1e-6;
        std::ostringstream eid;
        eid << "mapping/" << k << "/" << e;
        auto& mr = r.add(eid.str(), passes(ok), mc.ok ? "" : mc.reason);
        mr.numbers["h"] = mc.h;
        mr.numbers["nodes"] = mc.nodes;
        mr.numbers["max_residual"] = mc.max_residual;
        mr.numbers["max_velocity_mismatch"] = mc.max_velocity_mismatch;
        if (!ok && mc.ok) mr.numbers["at_time"] = mc.at_time;
      }
    }
  }
  if (r.records.empty()) throw io::InputError("flows", "no flow block matches the request");
  return r;
}

Report cmd_liouville(const io::SystemFile& file, const Options& opts) {
  const auto& sys = *file.system;
  const auto o = check_options(file, opts);
  auto r = start("liouville", file, opts);
  if (!file.liouville) throw io::InputError("liouville", "missing");
  const auto& block = *file.liouville;
  std::vector<ConservedQuantity> members;
  for (const auto& n : block.family) members.push_back(is_conserved(sys, resolve_conserved(file, n).expr, o, n));
  const auto fam = verify_family(sys, members, o);
  {
    auto& f = r.add("liouville/family", passes(fam.valid()), fam.failure);
    f.data["members"] = block.family;
    f.numbers["jacobian_samples"] = fam.jacobian_samples;
    f.numbers["jacobian_rejected"] = fam.jacobian_rejected;
    if (fam.pair_i >= 0) {
      f.data["pair"] = json::array({members[static_cast<std::size_t>(fam.pair_i)].name,
                                    members[static_cast<std::size_t>(fam.pair_j)].name});
      f.witnesses = io::witness_json(fam.bracket_check);
    }
    if (!fam.valid()) return r;
  }
  try {
    InversionOptions iopts;
    iopts.force_numeric = block.numeric;
    const auto inv = invert_velocities(sys, fam, block.seed, iopts);
    auto& ir = r.add("liouville/inversion", Verdict::Info, inv.symbolic ? "closed form" : "newton");
    ir.data["qd"] = strs(inv.qd);
    ir.numbers["branch"] = inv.branch;
    ir.numbers["seed"] = io::state_json(inv.seed);
    const auto gf = generating_function(sys, fam, inv, block.base);
    auto& sr = r.add("liouville/generating-function", Verdict::Info);
    sr.data["S"] = str(gf.S);
    sr.data["quadrature"] = gf.used_quadrature;
    sr.numbers["base"] = {{"t", gf.base.t}, {"q", gf.base.q}};
    const auto an = angles(sys, fam, inv, gf);
    auto& ar = r.add("liouville/angles", Verdict::Info);
    ar.data["theta"] = strs(an.theta);
    const auto chart = check_chart(sys, fam, inv, an, o);
    attach(r.add("liouville/canonical", io::from_check(chart.canonical), "{Theta^i, C_j} == delta"), chart.canonical);
    auto& rk = r.add("liouville/rank", passes(chart.samples > 0 && chart.min_rank == 2 * chart.dof));
    rk.numbers["samples"] = chart.samples;
    rk.numbers["min_rank"] = chart.min_rank;
    ValidationOptions v;
    v.seed = opts.seed;
    LiouvilleIntegrals li;
    try {
      li = sys.autonomous() ? autonomous_integrals(sys, fam, inv, an, o, v)
                            : nonautonomous_integrals(sys, fam, inv, gf, an, o, v);
    } catch (const std::invalid_argument& e) {
      throw io::InputError("liouville.family", e.what());
    }
    if (!sys.autonomous()) {
      auto& k = r.add("liouville/reduction", li.reduction == "unsupported" ? Verdict::Inconclusive : Verdict::Info,
                      li.reduction);
      k.data["K"] = str(li.K);
      k.data["Upsilon"] = strs(li.upsilon);
      if (!li.note.empty()) k.data["note"] = li.note;
    }
    for (std::size_t i = 0; i < li.integrals.size(); ++i) {
      const auto& q = li.integrals[i];
      auto& x = r.add("liouville/integral/" + q.name, passes(q.status != ConservationStatus::Failed),
                      status_name(q.status));
      x.data["expr"] = str(q.C);
      if (i < li.drift.size()) {
        x.numbers["max_drift"] = li.drift[i].max_drift;
        x.numbers["nodes"] = li.drift[i].nodes;
        x.numbers["chart_exits"] = li.drift[i].chart_exits;
      }
    }
  } catch (const ChartError& e) {
    r.add("liouville/chart", Verdict::Fail, e.what());
  }
  return r;
}

Report cmd_monitor(const io::SystemFile& file, const Options& opts, std::ostream* csv) {
  const auto& sys = *file.system;
  auto r = start("monitor", file, opts);
  if (file.trajectories.empty()) throw io::InputError("trajectories", "no trajectory declared");
  for (const auto& ts : file.trajectories) {
    const auto names = ts.integrals.empty() ? all_conserved(file) : ts.integrals;
    const auto integrals = quantities(file, names);
    const auto traj = integrate(sys, ts.initial, ts.t_end, ts.tol);
    if (csv) write_csv(traj, *csv);
    auto& tr = r.add("trajectory/" + ts.name, traj.truncated() ? Verdict::Fail : Verdict::Info,
                     traj.truncated() ? traj.reason() : traj.integrator);
    tr.numbers["nodes"] = traj.size();
    tr.numbers["t_end"] = traj.solution.t_back();
    const auto verdict = monitor(sys, traj, integrals);
    r.add("radius-minima/" + ts.name, Verdict::Info).numbers["times"] = verdict.radius_minima;
    for (const auto& iv : verdict.integrals) {
      const std::string got = iv.classification == ConservationStatus::NumericGlobal  ? "numeric-global"
                              : iv.classification == ConservationStatus::NumericLocal ? "numeric-local"
                                                                                      : "failed";
      Verdict v = passes(iv.classification != ConservationStatus::Failed);
      auto it = ts.expect.find(iv.name);
      if (it != ts.expect.end()) v = passes(it->second == got);
      auto& x = r.add("monitor/" + ts.name + "/" + iv.name, v, got);
      if (it != ts.expect.end()) x.data["expected"] = it->second;
      if (!iv.detail.empty()) x.data["note"] = iv.detail;
      x.numbers["max_drift"] = iv.max_drift;
      x.numbers["jump_times"] = iv.jump_times;
      x.numbers["jump_sizes"] = iv.jump_sizes;
      x.numbers["rejected_jumps"] = iv.rejected_jumps;
    }
  }
  return r;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Symbolic and numeric checks of Lagrangian systems", "mechsym"};
  app.require_subcommand(1);
  Options opts;
  app.add_option("--seed", opts.seed, "seed for every randomized check")->capture_default_str();
  app.add_option("--tol", opts.tol, "tolerance of identity checks")->capture_default_str();
  app.add_option("--trials", opts.trials, "sample points per identity check")->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--json", opts.json_path, "write the JSON report to this path ('-' for stdout)");
  app.add_flag_callback("--version", [&out] {
    out << "mechsym " << io::kToolVersion << "\n";
    throw CLI::Success();
  });

  std::string path;
  auto* check = app.add_subcommand("check", "verify every declared conserved quantity and generator");
  check->add_option("file", path, "system file")->required();

  auto* noether = app.add_subcommand("noether", "map between conserved quantities and symmetry generators");
  std::string direction, name;
  noether->add_option("file", path, "system file")->required();
  noether->add_option("direction", direction, "to-symmetry or to-integral")
      ->required()
      ->check(CLI::IsMember({"to-symmetry", "to-integral"}));
  noether->add_option("name", name, "conserved quantity or generator")->required();

  auto* bracket = app.add_subcommand("bracket", "bracket table of conserved quantities");
  std::vector<std::string> names;
  bool theorems = false;
  bracket->add_option("file", path, "system file")->required();
  bracket->add_option("names", names, "quantities (default: all declared)");
  bracket->add_flag("--theorems", theorems, "also check pair actions and commutators");

  auto* flow = app.add_subcommand("flow", "transport states along generator flows");
  FlowRequest req;
  std::string flow_csv;
  double eps_one = 0.0;
  int series = -1;
  bool gauge = false;
  flow->add_option("file", path, "system file")->required();
  flow->add_option("--generator", req.generator, "only flow blocks with this generator");
  auto* eps_opt = flow->add_option("--eps", eps_one, "replace the eps list of each block");
  auto* gauge_opt = flow->add_flag("--gauge", gauge, "include the gauge coefficient tau");
  auto* series_opt = flow->add_option("--series", series, "compare with the bracket series of this order")
                         ->check(CLI::NonNegativeNumber);
  flow->add_option("--csv", flow_csv, "write eps,t,q,qd rows to this path");

  auto* liouville = app.add_subcommand("liouville", "angle variables and integrals from a commuting family");
  liouville->add_option("file", path, "system file")->required();

  auto* mon = app.add_subcommand("monitor", "integrate declared trajectories and classify integrals");
  std::string mon_csv;
  mon->add_option("file", path, "system file")->required();
  mon->add_option("--csv", mon_csv, "write the trajectory CSV to this path");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::Success&) {
    return 0;
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? 0 : 2;
  }
  if (eps_opt->count()) req.eps = {eps_one};
  if (gauge_opt->count()) req.gauge = gauge;
  if (series_opt->count()) req.series = series;

  auto csv_stream = [](const std::string& p) -> std::unique_ptr<std::ofstream> {
    if (p.empty()) return nullptr;
    auto f = std::make_unique<std::ofstream>(p);
    if (!*f) throw io::InputError("", "cannot write " + p);
    return f;
  };

  Report report;
  try {
    const auto o = [&] {
      sym::CheckOptions c;
      c.seed = opts.seed;
      c.tol = opts.tol;
      c.trials = opts.trials;
      return c;
    }();
    io::SystemFile file;
    try {
      file = io::load_system(path, o);
    } catch (const DegenerateLagrangianError& e) {
      report.command = app.get_subcommands().front()->get_name();
      report.input_name = path;
      std::ifstream in(path, std::ios::binary);
      std::ostringstream bytes;
      bytes << in.rdbuf();
      report.input_digest = io::digest(bytes.str());
      report.seed = opts.seed;
      auto& rec = report.add("lagrangian/nondegenerate", Verdict::Fail, e.what());
      rec.data["det g"] = str(e.det());
      file.name.clear();
    }
    if (report.records.empty()) {
      if (check->parsed()) report = cmd_check(file, opts);
      else if (noether->parsed())
        report = cmd_noether(file, opts, direction == "to-symmetry" ? Direction::ToSymmetry : Direction::ToIntegral,
                             name);
      else if (bracket->parsed()) report = cmd_bracket(file, opts, names, theorems);
      else if (flow->parsed()) {
        auto f = csv_stream(flow_csv);
        report = cmd_flow(file, opts, req, f.get());
      } else if (liouville->parsed()) report = cmd_liouville(file, opts);
      else {
        auto f = csv_stream(mon_csv);
        report = cmd_monitor(file, opts, f.get());
      }
    }
  } catch (const io::InputError& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  } catch (const sym::ParseError& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  if (opts.json_path == "-") {
    out << report.to_json().dump(2) << "\n";
  } else {
    report.print_text(out);
    if (!opts.json_path.empty()) {
      std::ofstream j(opts.json_path);
      if (!j) {
        err << "input error: cannot write " << opts.json_path << "\n";
        return 2;
      }
      j << report.to_json().dump(2) << "\n";
    }
  }
  return report.exit_code();
}

}  // namespace mechsym::cli
