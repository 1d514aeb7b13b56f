#include "mechsym/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "mechsym/sym/parser.hpp"

namespace mechsym::io {
namespace {

std::string at(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const json& need(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw InputError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw InputError(at(path, key), "missing");
  return *it;
}

std::string text_of(const json& v, const std::string& path) {
  if (!v.is_string()) throw InputError(path, "expected a string");
  return v.get<std::string>();
}

double number_of(const json& v, const std::string& path) {
  if (!v.is_number()) throw InputError(path, "expected a number");
  return v.get<double>();
}

std::vector<double> numbers_of(const json& v, const std::string& path, std::size_t n) {
  if (!v.is_array()) throw InputError(path, "expected an array of numbers");
  if (n != SIZE_MAX && v.size() != n) {
    throw InputError(path, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number_of(v[i], at(path, i)));
  return out;
}

Expr expression(const std::string& text, const VariableSpace& space, const std::string& path) {
  try {
    return sym::parse_or_throw(text, space);
  } catch (const sym::ParseError& e) {
    throw InputError(path, e.what());
  }
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw InputError(at(path, it.key()), "unknown field");
  }
}

State state_of(const json& v, const std::string& path, int n) {
  if (!v.is_object()) throw InputError(path, "expected an object with t, q, qd");
  check_keys(v, {"t", "q", "qd"}, path);
  State s;
  if (v.contains("t")) s.t = number_of(v["t"], at(path, "t"));
  s.q = numbers_of(need(v, "q", path), at(path, "q"), static_cast<std::size_t>(n));
  s.qd = numbers_of(need(v, "qd", path), at(path, "qd"), static_cast<std::size_t>(n));
  return s;
}

void unique_name(std::set<std::string>& seen, const std::string& name, const std::string& path) {
  if (name.empty()) throw InputError(path, "empty name");
  if (!seen.insert(name).second) throw InputError(path, "duplicate name " + name);
}

}  // namespace

const NamedExpr* SystemFile::find_conserved(const std::string& n) const {
  for (const auto& c : conserved)
    if (c.name == n) return &c;
  return nullptr;
}

const GeneratorSpec* SystemFile::find_generator(const std::string& n) const {
  for (const auto& g : generators)
    if (g.name == n) return &g;
  return nullptr;
}

const TrajectorySpec* SystemFile::find_trajectory(const std::string& n) const {
  for (const auto& t : trajectories)
    if (t.name == n) return &t;
  return nullptr;
}

sym::CheckOptions SystemFile::check_options(const sym::CheckOptions& base_opts) const {
  auto o = system ? system->pinned(base_opts) : base_opts;
  for (const auto& [k, b] : boxes) o.boxes[k] = b;
  return o;
}

SystemFile parse_system(const std::string& text, const sym::CheckOptions& opts) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError("", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("", "top level must be an object");
  check_keys(doc, {"name", "N", "coordinates", "lagrangian", "parameters", "conserved", "generators", "trajectories",
                   "flows", "liouville", "sampling"},
             "");
  SystemFile f;
  f.digest = digest(text);
  f.name = text_of(need(doc, "name", ""), "name");
  const auto& Nj = need(doc, "N", "");
  if (!Nj.is_number_integer() || Nj.get<int>() < 1) throw InputError("N", "expected a positive integer");
  f.N = Nj.get<int>();
  if (doc.contains("coordinates")) {
    const auto& c = doc["coordinates"];
    if (!c.is_array() || c.size() != static_cast<std::size_t>(f.N)) throw InputError("coordinates", "expected N names");
    for (std::size_t i = 0; i < c.size(); ++i) f.coordinates.push_back(text_of(c[i], at("coordinates", i)));
  }
  if (doc.contains("parameters")) {
    const auto& p = doc["parameters"];
    if (!p.is_object()) throw InputError("parameters", "expected an object name -> value or null");
    for (auto it = p.begin(); it != p.end(); ++it) {
      f.parameters.push_back(it.key());
      if (!it.value().is_null()) f.parameter_values[it.key()] = number_of(it.value(), at("parameters", it.key()));
    }
  }
  VariableSpace space = [&] {
    try {
      return VariableSpace(f.N, f.coordinates, f.parameters);
    } catch (const std::invalid_argument& e) {
      throw InputError("parameters", e.what());
    }
  }();
  f.lagrangian_text = text_of(need(doc, "lagrangian", ""), "lagrangian");
  const Expr L = expression(f.lagrangian_text, space, "lagrangian");
  try {
    f.system = std::make_shared<const LagrangianSystem>(LagrangianSystem::build(space, L, f.parameter_values, opts));
  } catch (const DegenerateLagrangianError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw InputError("lagrangian", e.what());
  }
  const auto& sys = *f.system;

  std::set<std::string> names;
  auto state_expr = [&](const std::string& t, const std::string& path) {
    const Expr e = expression(t, space, path);
    try {
      require_state_function(sys, e, "expression");
    } catch (const std::invalid_argument& err) {
      throw InputError(path, err.what());
    }
    return e;
  };
  if (doc.contains("conserved")) {
    const auto& c = doc["conserved"];
    if (!c.is_array()) throw InputError("conserved", "expected an array of {name, expr}");
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto path = at("conserved", i);
      check_keys(c[i], {"name", "expr"}, path);
      NamedExpr ne;
      ne.name = text_of(need(c[i], "name", path), at(path, "name"));
      unique_name(names, ne.name, at(path, "name"));
      ne.text = text_of(need(c[i], "expr", path), at(path, "expr"));
      ne.expr = state_expr(ne.text, at(path, "expr"));
      f.conserved.push_back(std::move(ne));
    }
  }
  if (doc.contains("generators")) {
    const auto& g = doc["generators"];
    if (!g.is_array()) throw InputError("generators", "expected an array of {name, P, tau}");
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto path = at("generators", i);
      check_keys(g[i], {"name", "P", "tau"}, path);
      GeneratorSpec gs;
      gs.name = text_of(need(g[i], "name", path), at(path, "name"));
      unique_name(names, gs.name, at(path, "name"));
      const auto& P = need(g[i], "P", path);
      if (!P.is_array() || P.size() != static_cast<std::size_t>(f.N)) throw InputError(at(path, "P"), "expected N expressions");
      gs.gen.name = gs.name;
      for (std::size_t k = 0; k < P.size(); ++k) {
        gs.P_text.push_back(text_of(P[k], at(at(path, "P"), k)));
        gs.gen.P.push_back(state_expr(gs.P_text.back(), at(at(path, "P"), k)));
      }
      if (g[i].contains("tau")) gs.tau_text = text_of(g[i]["tau"], at(path, "tau"));
      gs.gen.tau = state_expr(gs.tau_text, at(path, "tau"));
      f.generators.push_back(std::move(gs));
    }
  }
  if (doc.contains("trajectories")) {
    const auto& t = doc["trajectories"];
    if (!t.is_array()) throw InputError("trajectories", "expected an array");
    std::set<std::string> tnames;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto path = at("trajectories", i);
      check_keys(t[i], {"name", "initial", "t_end", "tol", "integrals", "expect"}, path);
      TrajectorySpec ts;
      ts.name = text_of(need(t[i], "name", path), at(path, "name"));
      unique_name(tnames, ts.name, at(path, "name"));
      ts.initial = state_of(need(t[i], "initial", path), at(path, "initial"), f.N);
      ts.t_end = number_of(need(t[i], "t_end", path), at(path, "t_end"));
      if (t[i].contains("tol")) ts.tol = number_of(t[i]["tol"], at(path, "tol"));
      if (!(ts.tol > 0)) throw InputError(at(path, "tol"), "must be positive");
      if (t[i].contains("integrals")) {
        const auto& ints = t[i]["integrals"];
        if (!ints.is_array()) throw InputError(at(path, "integrals"), "expected an array of names");
        for (std::size_t k = 0; k < ints.size(); ++k) {
          const auto n = text_of(ints[k], at(at(path, "integrals"), k));
          if (!f.find_conserved(n)) throw InputError(at(at(path, "integrals"), k), "unknown conserved quantity " + n);
          ts.integrals.push_back(n);
        }
      }
      if (t[i].contains("expect")) {
        const auto& ex = t[i]["expect"];
        if (!ex.is_object()) throw InputError(at(path, "expect"), "expected an object name -> classification");
        for (auto it = ex.begin(); it != ex.end(); ++it) {
          const auto v = text_of(it.value(), at(at(path, "expect"), it.key()));
          if (v != "numeric-global" && v != "numeric-local" && v != "failed") {
            throw InputError(at(at(path, "expect"), it.key()), "expected numeric-global, numeric-local or failed");
          }
          if (!f.find_conserved(it.key())) throw InputError(at(path, "expect"), "unknown conserved quantity " + it.key());
          ts.expect[it.key()] = v;
        }
      }
      f.trajectories.push_back(std::move(ts));
    }
  }
  if (doc.contains("flows")) {
    const auto& fl = doc["flows"];
    if (!fl.is_array()) throw InputError("flows", "expected an array");
    for (std::size_t i = 0; i < fl.size(); ++i) {
      const auto path = at("flows", i);
      check_keys(fl[i], {"generator", "state", "eps", "tol", "gauge", "series", "trajectory"}, path);
      FlowSpec fs;
      fs.generator = text_of(need(fl[i], "generator", path), at(path, "generator"));
      if (!f.find_generator(fs.generator) && !f.find_conserved(fs.generator)) {
        throw InputError(at(path, "generator"), "unknown generator or conserved quantity " + fs.generator);
      }
      fs.state = state_of(need(fl[i], "state", path), at(path, "state"), f.N);
      fs.eps = numbers_of(need(fl[i], "eps", path), at(path, "eps"), SIZE_MAX);
      if (fl[i].contains("tol")) fs.tol = number_of(fl[i]["tol"], at(path, "tol"));
      if (fl[i].contains("gauge")) {
        if (!fl[i]["gauge"].is_boolean()) throw InputError(at(path, "gauge"), "expected a boolean");
        fs.gauge = fl[i]["gauge"].get<bool>();
      }
      if (fl[i].contains("series")) {
        if (!fl[i]["series"].is_number_integer() || fl[i]["series"].get<int>() < 0) {
          throw InputError(at(path, "series"), "expected a non-negative integer");
        }
        fs.series = fl[i]["series"].get<int>();
      }
      if (fl[i].contains("trajectory")) {
        fs.trajectory = text_of(fl[i]["trajectory"], at(path, "trajectory"));
        if (!f.find_trajectory(fs.trajectory)) throw InputError(at(path, "trajectory"), "unknown trajectory " + fs.trajectory);
      }
      f.flows.push_back(std::move(fs));
    }
  }
  if (doc.contains("liouville")) {
    const auto& lv = doc["liouville"];
    const std::string path = "liouville";
    check_keys(lv, {"family", "seed", "base", "numeric"}, path);
    LiouvilleSpec ls;
    const auto& fam = need(lv, "family", path);
    if (!fam.is_array()) throw InputError(at(path, "family"), "expected an array of names");
    for (std::size_t k = 0; k < fam.size(); ++k) {
      const auto n = text_of(fam[k], at(at(path, "family"), k));
      if (!f.find_conserved(n)) throw InputError(at(at(path, "family"), k), "unknown conserved quantity " + n);
      ls.family.push_back(n);
    }
    if (lv.contains("seed")) ls.seed = state_of(lv["seed"], at(path, "seed"), f.N);
    if (lv.contains("base")) {
      const auto& b = lv["base"];
      check_keys(b, {"t", "q"}, at(path, "base"));
      if (b.contains("t")) ls.base.t = number_of(b["t"], at(at(path, "base"), "t"));
      if (b.contains("q")) ls.base.q = numbers_of(b["q"], at(at(path, "base"), "q"), static_cast<std::size_t>(f.N));
    }
    if (lv.contains("numeric")) {
      if (!lv["numeric"].is_boolean()) throw InputError(at(path, "numeric"), "expected a boolean");
      ls.numeric = lv["numeric"].get<bool>();
    }
    f.liouville = std::move(ls);
  }
  if (doc.contains("sampling")) {
    const auto& s = doc["sampling"];
    const std::string path = "sampling";
    check_keys(s, {"boxes", "base"}, path);
    if (s.contains("boxes")) {
      const auto& b = s["boxes"];
      if (!b.is_object()) throw InputError(at(path, "boxes"), "expected an object symbol -> [lo, hi]");
      for (auto it = b.begin(); it != b.end(); ++it) {
        const auto p = at(at(path, "boxes"), it.key());
        const auto sy = space.resolve(it.key());
        if (!sy) throw InputError(p, "unknown symbol");
        const auto v = numbers_of(it.value(), p, 2);
        if (!(v[0] < v[1])) throw InputError(p, "empty interval");
        f.boxes[it.key()] = {v[0], v[1]};
      }
    }
    if (s.contains("base")) {
      const auto st = state_of(s["base"], at(path, "base"), f.N);
      f.base = BasePoint{st.t, st.q, st.qd};
    }
  }
  return f;
}

SystemFile load_system(const std::string& path, const sym::CheckOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("", "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_system(ss.str(), opts);
}

std::string digest(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
    case Verdict::Info: return "info";
  }
  return "info";
}

Verdict from_check(const sym::CheckResult& r) {
  switch (r.verdict) {
    case sym::Verdict::True: return Verdict::Pass;
    case sym::Verdict::False: return Verdict::Fail;
    case sym::Verdict::Inconclusive: return Verdict::Inconclusive;
  }
  return Verdict::Inconclusive;
}

json witness_json(const sym::CheckResult& r) {
  json out = json::array();
  if (r.witness.empty()) return out;
  json w = json::object();
  for (const auto& [k, v] : r.witness) w[k] = v;
  out.push_back(std::move(w));
  return out;
}

json state_json(const State& s) { return json{{"t", s.t}, {"q", s.q}, {"qd", s.qd}}; }

Record& Report::add(std::string id, Verdict v, std::string detail) {
  records.push_back(Record{std::move(id), v, std::move(detail)});
  return records.back();
}

int Report::exit_code() const {
  for (const auto& r : records)
    if (r.verdict == Verdict::Fail) return 1;
  return 0;
}

json Report::to_json() const {
  json j;
  j["schema"] = 1;
  j["tool"] = "mechsym";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["input"] = {{"name", input_name}, {"digest", input_digest}};
  j["seed"] = seed;
  json recs = json::array();
  int pass = 0, fail = 0, inconclusive = 0;
  for (const auto& r : records) {
    json x;
    x["id"] = r.id;
    x["verdict"] = verdict_name(r.verdict);
    if (!r.detail.empty()) x["detail"] = r.detail;
    if (!r.data.empty()) x["data"] = r.data;
    if (!r.numbers.empty()) x["numbers"] = r.numbers;
    if (!r.witnesses.empty()) x["witnesses"] = r.witnesses;
    recs.push_back(std::move(x));
    pass += r.verdict == Verdict::Pass;
    fail += r.verdict == Verdict::Fail;
    inconclusive += r.verdict == Verdict::Inconclusive;
  }
  j["records"] = std::move(recs);
  j["summary"] = {{"pass", pass}, {"fail", fail}, {"inconclusive", inconclusive}, {"exit", exit_code()}};
  return j;
}

void Report::print_text(std::ostream& os) const {
  os << command << " " << input_name << " (" << input_digest << ")\n";
  for (const auto& r : records) {
    os << "  [" << verdict_name(r.verdict) << "] " << r.id;
    if (!r.detail.empty()) os << ": " << r.detail;
    os << "\n";
    for (auto it = r.data.begin(); it != r.data.end(); ++it) {
      os << "      " << it.key() << " = " << (it.value().is_string() ? it.value().get<std::string>() : it.value().dump())
         << "\n";
    }
    for (auto it = r.numbers.begin(); it != r.numbers.end(); ++it) {
      os << "      " << it.key() << " = " << it.value().dump() << "\n";
    }
  }
  os << "exit " << exit_code() << "\n";
}

}  // namespace mechsym::io
