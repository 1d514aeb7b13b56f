#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mechsym/flows.hpp"
#include "mechsym/liouville.hpp"
#include "mechsym/noether.hpp"

namespace mechsym::io {

using json = nlohmann::ordered_json;

/// Malformed or inconsistent input. `where` is a JSON path such as
/// "conserved[1].expr".
class InputError : public std::runtime_error {
 public:
  InputError(std::string where, const std::string& what)
      : std::runtime_error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

struct NamedExpr {
  std::string name;
  std::string text;
  Expr expr;
};

struct GeneratorSpec {
  std::string name;
  std::vector<std::string> P_text;
  std::string tau_text = "0";
  SymmetryGenerator gen;
};

struct TrajectorySpec {
  std::string name;
  State initial;
  double t_end = 0.0;
  double tol = 1e-10;
  std::vector<std::string> integrals;          // empty: every conserved quantity
  std::map<std::string, std::string> expect;   // integral -> classification name
};

struct FlowSpec {
  std::string generator;  // a generator or a conserved quantity
  State state;
  std::vector<double> eps;
  double tol = 1e-10;
  bool gauge = false;
  int series = 0;
  std::string trajectory;  // for the solution-mapping check; may be empty
};

struct LiouvilleSpec {
  std::vector<std::string> family;
  std::optional<State> seed;
  ChartBase base;
  bool numeric = false;
};

/// A parsed and validated system file together with the built system.
struct SystemFile {
  std::string name;
  int N = 0;
  std::vector<std::string> coordinates;
  std::string lagrangian_text;
  std::vector<std::string> parameters;
  sym::Assignment parameter_values;
  std::vector<NamedExpr> conserved;
  std::vector<GeneratorSpec> generators;
  std::vector<TrajectorySpec> trajectories;
  std::vector<FlowSpec> flows;
  std::optional<LiouvilleSpec> liouville;
  std::map<std::string, sym::Box> boxes;
  BasePoint base;
  std::string digest;  // of the raw file text
  std::shared_ptr<const LagrangianSystem> system;

  const NamedExpr* find_conserved(const std::string& name) const;
  const GeneratorSpec* find_generator(const std::string& name) const;
  const TrajectorySpec* find_trajectory(const std::string& name) const;
  /// Checks with the declared sample boxes and parameter values.
  sym::CheckOptions check_options(const sym::CheckOptions& base) const;
};

/// Parses JSON text. Throws InputError on syntax, schema or expression
/// errors; DegenerateLagrangianError propagates from the build.
SystemFile parse_system(const std::string& text, const sym::CheckOptions& opts = {});
SystemFile load_system(const std::string& path, const sym::CheckOptions& opts = {});

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string digest(const std::string& bytes);

enum class Verdict { Pass, Fail, Inconclusive, Info };
const char* verdict_name(Verdict v);
Verdict from_check(const sym::CheckResult& r);

struct Record {
  std::string id;
  Verdict verdict = Verdict::Info;
  std::string detail;
  json data = json::object();       // expressions and labels
  json numbers = json::object();    // numeric summaries
  json witnesses = json::array();   // sample points where a check failed
};

/// Ordered list of records for one command run. Fail records give exit 1.
struct Report {
  std::string command;
  std::string input_name;
  std::string input_digest;
  std::uint64_t seed = 0;
  std::vector<Record> records;

  Record& add(std::string id, Verdict v, std::string detail = {});
  int exit_code() const;
  json to_json() const;
  void print_text(std::ostream& os) const;
};

inline constexpr const char* kToolVersion = "0.1.0";

json witness_json(const sym::CheckResult& r);
json state_json(const State& s);

}  // namespace mechsym::io
