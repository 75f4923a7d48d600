#ifndef DGOPT_EXPRESSION_HPP
#define DGOPT_EXPRESSION_HPP

#include "dgopt/errors.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dgopt {

/// Syntax error or unknown identifier in an objective expression.
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : InputError(what + " at offset " + std::to_string(offset)), offset_(offset) {}

  /// Byte offset into the source text.
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Immutable expression tree over the components x[k] of the decision
/// variable. Nodes are shared, so copies are cheap.
class Expression {
 public:
  enum class Kind {
    Constant,
    Variable,  // x[index]; plain `x` is x[0]
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Pow,       // args[0] ^ exponent, exponent a positive integer
    Exp,
    Log,
    Abs,
    Max,
    // Produced by differentiate() for the nonsmooth nodes.
    Sign,        // sign(args[0]) with sign(0) = 0
    KinkSelect,  // args[1] if args[0] > 0, args[2] if args[0] < 0, least-|·| of
                 // the segment [args[1], args[2]] if args[0] == 0
  };

  static Expression constant(double value);
  static Expression variable(int index = 0);
  static Expression unary(Kind kind, Expression arg);
  static Expression binary(Kind kind, Expression lhs, Expression rhs);
  static Expression power(Expression base, int exponent);
  static Expression kink_select(Expression cond, Expression if_pos, Expression if_neg);

  Kind kind() const;
  double value() const;   // Constant
  int index() const;      // Variable
  int exponent() const;   // Pow
  const std::vector<Expression>& args() const;

  double evaluate(std::span<const double> x) const;
  double evaluate(double x) const { return evaluate(std::span<const double>(&x, 1)); }

  /// Structural form, e.g. Add(Exp(x),Pow(Sub(x,3),2)). Variables print as
  /// `x` for index 0 and `x[k]` otherwise.
  std::string to_string() const;

  /// False if the tree contains a node with a kink (Abs, Max, Sign, KinkSelect).
  bool is_smooth() const;
  /// Largest variable index referenced, -1 for a constant expression.
  int max_variable_index() const;

  friend Expression operator+(Expression a, Expression b) { return binary(Kind::Add, a, b); }
  friend Expression operator-(Expression a, Expression b) { return binary(Kind::Sub, a, b); }
  friend Expression operator*(Expression a, Expression b) { return binary(Kind::Mul, a, b); }
  friend Expression operator/(Expression a, Expression b) { return binary(Kind::Div, a, b); }
  friend Expression operator-(Expression a) { return unary(Kind::Neg, a); }

 private:
  struct Node;
  explicit Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Parses an objective expression. Precedence from tightest: ^ (right
/// associative, positive-integer exponent), unary minus, * and /, + and -.
/// Functions: exp, log, abs (one argument) and max (two arguments).
/// Throws ParseError with the byte offset of the problem.
Expression parse_expression(std::string_view src);

/// Partial derivative with respect to x[var]. Kinks get the least-norm
/// element of the generalized gradient: d/dx abs(u) = sign(u)·u' and
/// d/dx max(a, b) = KinkSelect(a − b, a', b'). The result is simplified.
Expression differentiate(const Expression& e, int var = 0);

/// Constant folding plus the identities 0·a, 1·a, a + 0, a − 0, a^1, −(−a).
Expression simplify(const Expression& e);

}  // namespace dgopt

#endif  // DGOPT_EXPRESSION_HPP
