#include "mechsym/sym/parser.hpp"

#include <cctype>

namespace mechsym::sym {
namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End, Bad };

struct Token {
  Tok kind = Tok::End;
  std::size_t begin = 0;
  std::size_t end = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view s) : s_(s) {}

  Token next() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    Token t;
    t.begin = pos_;
    if (pos_ >= s_.size()) {
      t.kind = Tok::End;
      t.end = pos_;
      return t;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && pos_ + 1 < s_.size() &&
                                                        std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (pos_ < s_.size() && s_[pos_] == '.') {
        ++pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
      if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
        std::size_t p = pos_ + 1;
        if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
        if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
          pos_ = p;
          while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        }
      }
      t.kind = Tok::Number;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      t.kind = Tok::Ident;
    } else {
      ++pos_;
      switch (c) {
        case '+': t.kind = Tok::Plus; break;
        case '-': t.kind = Tok::Minus; break;
        case '*': t.kind = Tok::Star; break;
        case '/': t.kind = Tok::Slash; break;
        case '^': t.kind = Tok::Caret; break;
        case '(': t.kind = Tok::LParen; break;
        case ')': t.kind = Tok::RParen; break;
        case ',': t.kind = Tok::Comma; break;
        default: t.kind = Tok::Bad; break;
      }
    }
    t.end = pos_;
    return t;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

struct SyntaxError {
  std::size_t begin;
  std::size_t end;
  std::string message;
};

// Decimal literal to an exact rational; falls back to a float when the
// digits do not fit in 64 bits.
Number literal_value(std::string_view text) {
  std::size_t i = 0;
  __int128 mant = 0;
  long long scale = 0;
  bool overflow = false;
  auto push_digit = [&](char d) {
    if (mant > (static_cast<__int128>(1) << 100)) {
      overflow = true;
      return false;
    }
    mant = mant * 10 + (d - '0');
    return true;
  };
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    if (!push_digit(text[i])) scale += 1;
    ++i;
  }
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      if (push_digit(text[i])) scale -= 1;
      ++i;
    }
  }
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    long long sign = 1;
    if (text[i] == '+' || text[i] == '-') {
      sign = text[i] == '-' ? -1 : 1;
      ++i;
    }
    long long ex = 0;
    while (i < text.size()) {
      ex = std::min<long long>(ex * 10 + (text[i] - '0'), 100000);
      ++i;
    }
    scale += sign * ex;
  }
  if (!overflow && scale >= -18 && scale <= 18) {
    __int128 p10 = 1;
    for (long long k = 0; k < (scale < 0 ? -scale : scale); ++k) p10 *= 10;
    __int128 num = scale >= 0 ? mant * p10 : mant;
    __int128 den = scale >= 0 ? 1 : p10;
    const __int128 lim = static_cast<__int128>(INT64_MAX);
    // reduce before checking the 64-bit range
    __int128 a = num;
    __int128 b = den;
    while (b != 0) {
      __int128 r = a % b;
      a = b;
      b = r;
    }
    if (a > 1) {
      num /= a;
      den /= a;
    }
    if (num <= lim && den <= lim) {
      return Number::rational(static_cast<long long>(num), static_cast<long long>(den));
    }
  }
  return Number::real(std::stod(std::string(text)));
}

class Parser {
 public:
  Parser(std::string_view src, const VariableSpace& space) : src_(src), space_(space), lex_(src) {}

  Expr parse_all() {
    advance();
    Expr e = expr();
    if (tok_.kind != Tok::End) fail(tok_, "unexpected '" + text(tok_) + "'");
    return e;
  }

  std::vector<ParseDiagnostic> diagnostics;

 private:
  std::string text(const Token& t) const { return std::string(src_.substr(t.begin, t.end - t.begin)); }

  [[noreturn]] void fail(const Token& t, std::string msg) {
    throw SyntaxError{t.begin, std::max(t.end, t.begin + (t.begin < src_.size() ? 1 : 0)), std::move(msg)};
  }

  void advance() {
    tok_ = lex_.next();
    if (tok_.kind == Tok::Bad) fail(tok_, "unexpected character '" + text(tok_) + "'");
  }

  void expect(Tok k, const char* what) {
    if (tok_.kind != k) {
      fail(tok_, std::string("expected ") + what + (tok_.kind == Tok::End ? " before end of input" : ""));
    }
    advance();
  }

  Expr expr() {
    Expr lhs = term();
    while (tok_.kind == Tok::Plus || tok_.kind == Tok::Minus) {
      const bool minus = tok_.kind == Tok::Minus;
      advance();
      Expr rhs = term();
      lhs = minus ? lhs - rhs : lhs + rhs;
    }
    return lhs;
  }

  Expr term() {
    Expr lhs = unary();
    while (tok_.kind == Tok::Star || tok_.kind == Tok::Slash) {
      const Token op = tok_;
      advance();
      Expr rhs = unary();
      if (op.kind == Tok::Star) {
        lhs = lhs * rhs;
      } else {
        if (rhs.is_zero()) fail(op, "division by zero");
        lhs = lhs / rhs;
      }
    }
    return lhs;
  }

  Expr unary() {
    if (tok_.kind == Tok::Minus) {
      advance();
      return -unary();
    }
    if (tok_.kind == Tok::Plus) {
      advance();
      return unary();
    }
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (tok_.kind == Tok::Caret) {
      const Token op = tok_;
      advance();
      Expr ex = unary();
      try {
        return pow(base, ex);
      } catch (const std::domain_error&) {
        fail(op, "division by zero");
      }
    }
    return base;
  }

  Expr primary() {
    const Token t = tok_;
    switch (t.kind) {
      case Tok::Number:
        advance();
        return Expr(literal_value(src_.substr(t.begin, t.end - t.begin)));
      case Tok::LParen: {
        advance();
        Expr e = expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::Ident: {
        advance();
        const std::string name = text(t);
        if (tok_.kind == Tok::LParen) return call(t, name);
        if (auto s = space_.resolve(name)) return Expr(*s);
        diagnostics.push_back({t.begin, t.end, "unknown identifier '" + name + "'", Severity::Error});
        return Expr(Symbol::param(name));
      }
      case Tok::End: fail(t, "unexpected end of input");
      default: fail(t, "unexpected '" + text(t) + "'");
    }
  }

  Expr call(const Token& t, const std::string& name) {
    advance();  // '('
    std::vector<Expr> args;
    if (tok_.kind != Tok::RParen) {
      args.push_back(expr());
      while (tok_.kind == Tok::Comma) {
        advance();
        args.push_back(expr());
      }
    }
    expect(Tok::RParen, "')'");
    auto need = [&](std::size_t n) {
      if (args.size() != n) {
        fail(t, name + " expects " + std::to_string(n) + " argument" + (n == 1 ? "" : "s"));
      }
    };
    if (name == "sin") { need(1); return sin(args[0]); }
    if (name == "cos") { need(1); return cos(args[0]); }
    if (name == "tan") { need(1); return tan(args[0]); }
    if (name == "exp") { need(1); return exp(args[0]); }
    if (name == "log") { need(1); return log(args[0]); }
    if (name == "sqrt") { need(1); return sqrt(args[0]); }
    if (name == "abs") { need(1); return abs(args[0]); }
    if (name == "atan2") { need(2); return atan2(args[0], args[1]); }
    if (name == "d") {
      need(1);
      const Expr& a = args[0];
      if (a.kind() == Kind::Symbol && a.symbol().is_jet() && a.symbol().order < 2) {
        return Expr(space_.jet(a.symbol().order + 1, a.symbol().index));
      }
      fail(t, "d(...) applies to a coordinate or velocity symbol");
    }
    diagnostics.push_back({t.begin, t.end, "unknown function '" + name + "'", Severity::Error});
    return Expr(Symbol::param(name));
  }

  std::string_view src_;
  const VariableSpace& space_;
  Lexer lex_;
  Token tok_;
};

std::string format_diagnostics(const std::string& src, const std::vector<ParseDiagnostic>& diags) {
  std::string msg;
  for (const auto& d : diags) {
    if (!msg.empty()) msg += "; ";
    msg += d.message + " at " + std::to_string(d.begin) + ".." + std::to_string(d.end);
  }
  return msg + " in \"" + src + "\"";
}

}  // namespace

ParseResult parse(std::string_view source, const VariableSpace& space) {
  ParseResult res;
  Parser p(source, space);
  try {
    Expr e = p.parse_all();
    res.diagnostics = std::move(p.diagnostics);
    if (res.diagnostics.empty()) res.expr = e;
  } catch (const SyntaxError& err) {
    res.diagnostics = std::move(p.diagnostics);
    res.diagnostics.push_back({std::min(err.begin, source.size()), std::min(err.end, source.size()), err.message,
                               Severity::Error});
  } catch (const std::domain_error& err) {
    res.diagnostics = std::move(p.diagnostics);
    res.diagnostics.push_back({0, source.size(), err.what(), Severity::Error});
  }
  return res;
}

ParseError::ParseError(std::string source, std::vector<ParseDiagnostic> diagnostics)
    : std::invalid_argument(format_diagnostics(source, diagnostics)),
      source_(std::move(source)),
      diagnostics_(std::move(diagnostics)) {}

Expr parse_or_throw(std::string_view source, const VariableSpace& space) {
  ParseResult r = parse(source, space);
  if (!r.ok()) throw ParseError(std::string(source), std::move(r.diagnostics));
  return *r.expr;
}

}  // namespace mechsym::sym
