#include "mechsym/sym/matrix.hpp"

#include "mechsym/sym/simplify.hpp"

namespace mechsym::sym {

Expr determinant(const ExprMatrix& m) {
  const std::size_t n = m.size();
  if (n == 1) return m[0][0];
  if (n == 2) return simplify(m[0][0] * m[1][1] - m[0][1] * m[1][0]);
  Expr det = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (m[0][j].is_zero()) continue;
    const Expr term = m[0][j] * determinant(minor_of(m, 0, j));
    det = j % 2 == 0 ? det + term : det - term;
  }
  return simplify(det);
}

ExprMatrix minor_of(const ExprMatrix& m, std::size_t skip_r, std::size_t skip_c) {
  ExprMatrix out;
  for (std::size_t r = 0; r < m.size(); ++r) {
    if (r == skip_r) continue;
    std::vector<Expr> row;
    for (std::size_t c = 0; c < m.size(); ++c) {
      if (c != skip_c) row.push_back(m[r][c]);
    }
    out.push_back(std::move(row));
  }
  return out;
}

ExprMatrix adjugate_inverse(const ExprMatrix& m) {
  const std::size_t n = m.size();
  const Expr inv_det = pow(determinant(m), Expr(-1));
  ExprMatrix out(n, ExprVector(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (n == 1) {
        out[i][j] = simplify(inv_det);
        continue;
      }
      Expr cof = determinant(minor_of(m, j, i));
      if ((i + j) % 2 == 1) cof = -cof;
      out[i][j] = simplify(cof * inv_det);
    }
  }
  return out;
}

}  // namespace mechsym::sym
