#include "mechsym/sym/variable_space.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace mechsym::sym {
namespace {

// Parses names of the form q, qd, qdd, ... followed by a decimal index.
std::optional<std::pair<int, long long>> split_jet_name(std::string_view name) {
  if (name.empty() || name[0] != 'q') return std::nullopt;
  std::size_t i = 1;
  int order = 0;
  while (i < name.size() && name[i] == 'd') {
    ++order;
    ++i;
  }
  if (i == name.size()) return std::nullopt;
  long long idx = 0;
  for (std::size_t j = i; j < name.size(); ++j) {
    if (!std::isdigit(static_cast<unsigned char>(name[j]))) return std::nullopt;
    if (idx > 1'000'000) return std::pair<int, long long>{order, -1};
    idx = idx * 10 + (name[j] - '0');
  }
  return std::pair<int, long long>{order, idx};
}

bool valid_identifier(std::string_view name) {
  if (name.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) return false;
  return std::all_of(name.begin(), name.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

}  // namespace

VariableSpace::VariableSpace(int dof, std::vector<std::string> coordinate_names,
                             std::vector<std::string> parameters)
    : dof_(dof), coordinate_names_(std::move(coordinate_names)) {
  if (dof <= 0) throw std::invalid_argument("degrees of freedom must be positive");
  if (coordinate_names_.empty()) {
    for (int i = 0; i < dof; ++i) coordinate_names_.push_back("q" + std::to_string(i + 1));
  }
  if (static_cast<int>(coordinate_names_.size()) != dof) {
    throw std::invalid_argument("coordinate name count does not match degrees of freedom");
  }
  for (auto& p : parameters) add_parameter(p);
}

Symbol VariableSpace::jet(int order, int i) const {
  if (i < 0 || i >= dof_) throw std::out_of_range("coordinate index out of range");
  return Symbol::jet(order, i);
}

bool VariableSpace::has_parameter(std::string_view name) const {
  return std::find(parameters_.begin(), parameters_.end(), name) != parameters_.end();
}

bool VariableSpace::is_reserved(std::string_view name) {
  static const char* const kFns[] = {"sin", "cos", "tan", "exp", "log", "sqrt", "atan2", "abs", "t", "d"};
  for (const char* f : kFns) {
    if (name == f) return true;
  }
  return split_jet_name(name).has_value();
}

void VariableSpace::add_parameter(const std::string& name) {
  if (!valid_identifier(name)) throw std::invalid_argument("invalid parameter name '" + name + "'");
  if (is_reserved(name)) throw std::invalid_argument("parameter name '" + name + "' is reserved");
  if (has_parameter(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  parameters_.push_back(name);
}

std::optional<Symbol> VariableSpace::resolve(std::string_view name) const {
  if (name == "t") return Symbol::time();
  if (auto j = split_jet_name(name)) {
    const auto [order, idx] = *j;
    if (order > 2 || idx < 1 || idx > dof_) return std::nullopt;
    return Symbol::jet(order, static_cast<int>(idx - 1));
  }
  if (has_parameter(name)) return Symbol::param(std::string(name));
  return std::nullopt;
}

bool VariableSpace::contains(const Symbol& s) const {
  switch (s.cls) {
    case SymbolClass::Time: return true;
    case SymbolClass::Jet: return s.index >= 0 && s.index < dof_;
    case SymbolClass::Param: return has_parameter(s.name);
  }
  return false;
}

std::vector<Symbol> VariableSpace::state_symbols() const {
  std::vector<Symbol> out{t()};
  for (int i = 0; i < dof_; ++i) out.push_back(q(i));
  for (int i = 0; i < dof_; ++i) out.push_back(qd(i));
  return out;
}

}  // namespace mechsym::sym
