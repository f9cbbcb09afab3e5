#pragma once

// Arithmetic expressions over sphere coordinates, for specifying f and h on
// the command line.
//
// Grammar (precedence high to low): literals, identifiers, calls and
// parentheses; ^ (right-associative); unary -; * /; + - (left-associative).
// Variables: theta (S^1, the polar angle) or x, y, z (S^2, the unit vector);
// the constant pi. Functions: sin cos exp log sqrt abs, one argument each.

#include <memory>
#include <set>
#include <stdexcept>
#include <string>

#include "dmk/sphere.hpp"

namespace dmk {

/// Parse or evaluation failure; column is 1-based, 0 when not positional.
class ExpressionError : public std::runtime_error {
 public:
  ExpressionError(const std::string& what, int column);
  int column() const { return column_; }

 private:
  int column_;
};

class Expression {
 public:
  struct Node;

  /// Value at a point of S^{n-1}; theta is atan2(y, x).
  double evaluate(const Vec3& x) const;
  /// Node values on the grid. Throws ExpressionError when a variable does not
  /// belong to the grid's dimension or a value is not finite.
  ScalarField sample(const GridPtr& grid) const;
  const std::set<std::string>& variables() const { return variables_; }
  /// Fully parenthesized form.
  std::string to_string() const;

 private:
  friend Expression parse_expression(const std::string& text);
  std::shared_ptr<const Node> root_;
  std::set<std::string> variables_;
};

/// Throws ExpressionError on a syntax error, an unknown identifier or a call
/// with the wrong number of arguments.
Expression parse_expression(const std::string& text);

}  // namespace dmk
