#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mechsym/sym/expr.hpp"
#include "mechsym/sym/variable_space.hpp"

namespace mechsym::sym {

enum class Severity { Error, Warning };

struct ParseDiagnostic {
  std::size_t begin = 0;  // byte offsets into the source, end exclusive
  std::size_t end = 0;
  std::string message;
  Severity severity = Severity::Error;
};

struct ParseResult {
  std::optional<Expr> expr;
  std::vector<ParseDiagnostic> diagnostics;
  bool ok() const { return expr.has_value(); }
};

/// Infix grammar: + - * / ^ (right associative, binds tighter than unary
/// minus), parentheses, decimal literals (kept exact), identifiers resolved
/// against the space, and sin cos tan exp log sqrt atan2 abs. `d(x)` is
/// accepted as shorthand for the next derivative of a coordinate symbol.
ParseResult parse(std::string_view source, const VariableSpace& space);

class ParseError : public std::invalid_argument {
 public:
  ParseError(std::string source, std::vector<ParseDiagnostic> diagnostics);
  const std::vector<ParseDiagnostic>& diagnostics() const { return diagnostics_; }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::vector<ParseDiagnostic> diagnostics_;
};

/// Throws ParseError carrying all diagnostics.
Expr parse_or_throw(std::string_view source, const VariableSpace& space);

}  // namespace mechsym::sym
