#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mechsym/sym/expr.hpp"

namespace mechsym::sym {

/// Declared symbols of a problem: t, q1..qN with their derivatives, and
/// free parameters. Coordinate names are descriptive only; expressions
/// always refer to q1..qN.
class VariableSpace {
 public:
  explicit VariableSpace(int dof, std::vector<std::string> coordinate_names = {},
                         std::vector<std::string> parameters = {});

  int dof() const { return dof_; }
  const std::vector<std::string>& coordinate_names() const { return coordinate_names_; }
  const std::vector<std::string>& parameters() const { return parameters_; }

  Symbol t() const { return Symbol::time(); }
  Symbol q(int i) const { return jet(0, i); }
  Symbol qd(int i) const { return jet(1, i); }
  Symbol qdd(int i) const { return jet(2, i); }
  /// Throws std::out_of_range unless 0 <= i < dof.
  Symbol jet(int order, int i) const;

  Expr T() const { return Expr(t()); }
  Expr Q(int i) const { return Expr(q(i)); }
  Expr QD(int i) const { return Expr(qd(i)); }
  Expr QDD(int i) const { return Expr(qdd(i)); }

  bool has_parameter(std::string_view name) const;
  /// Throws std::invalid_argument on a clash with any existing name.
  void add_parameter(const std::string& name);

  /// Resolves a grammar identifier (t, qK, qdK, qddK with 1 <= K <= N, or a parameter).
  std::optional<Symbol> resolve(std::string_view name) const;
  bool contains(const Symbol& s) const;

  /// t, q1..qN, qd1..qdN in that order.
  std::vector<Symbol> state_symbols() const;

  /// True when name is reserved for functions or jet coordinates.
  static bool is_reserved(std::string_view name);

 private:
  int dof_;
  std::vector<std::string> coordinate_names_;
  std::vector<std::string> parameters_;
};

}  // namespace mechsym::sym
