#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mechsym/io.hpp"

namespace mechsym::cli {

/// Global flags shared by every command.
struct Options {
  std::uint64_t seed = 0;
  double tol = 1e-9;
  int trials = 64;
  std::string json_path;  // "-" writes the JSON report to stdout instead of the text one
};

sym::CheckOptions check_options(const io::SystemFile& file, const Options& opts);

/// Conservation of every declared quantity and symmetry of every generator.
io::Report cmd_check(const io::SystemFile& file, const Options& opts);

enum class Direction { ToSymmetry, ToIntegral };
/// ToSymmetry maps a conserved quantity to its generator, ToIntegral a
/// generator to its conserved quantity. Both report the roundtrip and the
/// point/dynamical class. Throws io::InputError for an unknown name.
io::Report cmd_noether(const io::SystemFile& file, const Options& opts, Direction dir, const std::string& name);

/// Bracket table of the named quantities (all declared ones when empty).
/// With theorems, also the pair action and commutator checks for each pair.
io::Report cmd_bracket(const io::SystemFile& file, const Options& opts, const std::vector<std::string>& names,
                       bool theorems);

/// Overrides applied to the flow blocks of the file.
struct FlowRequest {
  std::string generator;            // restrict to blocks with this generator
  std::vector<double> eps;          // replaces the eps list when non-empty
  std::optional<bool> gauge;
  std::optional<int> series;
};
/// csv, when given, receives eps,t,q1..qN,qd1..qdN rows for every block.
io::Report cmd_flow(const io::SystemFile& file, const Options& opts, const FlowRequest& req,
                    std::ostream* csv = nullptr);

io::Report cmd_liouville(const io::SystemFile& file, const Options& opts);

/// csv, when given, receives the trajectory CSV of each declared trajectory
/// in order.
io::Report cmd_monitor(const io::SystemFile& file, const Options& opts, std::ostream* csv = nullptr);

/// Parses argv-style arguments (without the program name), runs the command
/// and returns the exit code: 0 all pass, 1 a check failed, 2 input error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mechsym::cli
