#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "mlab/phase_grid.hpp"

namespace mlab {

// Expression tree for symbols written in config files.
struct ExprNode {
  enum class Kind { number, variable, imag_unit, negate, add, sub, mul, div, pow, call };
  Kind kind = Kind::number;
  double value = 0.0;   // number
  std::string name;     // variable or function
  std::vector<std::shared_ptr<const ExprNode>> args;
  std::size_t offset = 0;

  bool same_tree(const ExprNode& o) const;
};

using ExprPtr = std::shared_ptr<const ExprNode>;

class SymbolExpr {
public:
  SymbolExpr() = default;
  SymbolExpr(ExprPtr root, std::string text) : root_(std::move(root)), text_(std::move(text)) {}

  const ExprNode& root() const { return *root_; }
  const std::string& text() const { return text_; }
  // Variable names referenced (h and constants excluded).
  std::set<std::string> variables() const;
  // Fully parenthesized text; parse(print(e)) reproduces the same tree.
  std::string print() const;

private:
  ExprPtr root_;
  std::string text_;
};

// Precedence: ^ (right assoc) > unary minus > * / > + -.
SymbolExpr parse_expr(const std::string& text);

// Evaluates on every lattice point the expression depends on; the resulting
// field's dependence mask is the set of grid axes named in the expression.
SymbolField eval_on_grid(const SymbolExpr& e, const GridPtr& grid);

// Scalar evaluation with explicit variable values (h taken from vars too).
cd eval_point(const SymbolExpr& e, const std::map<std::string, cd>& vars);

}  // namespace mlab
