#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <string>

#include "absnf/errors.hpp"

namespace absnf {

/// Problem dimensions: n independent variables, s switches, p inequality
/// constraints, q equality constraints.
struct Dims {
  int n = 0;
  int s = 0;
  int p = 0;
  int q = 0;

  /// Length of the concatenated variable vector (x, y, z).
  int total() const { return n + 2 * s; }
};

enum class VarFamily { X, Y, Z };

enum class ExprKind {
  Constant,
  Variable,
  Neg,
  Sin,
  Cos,
  Exp,
  Log,
  Sqrt,
  Add,
  Sub,
  Mul,
  Div,
  IntPow,
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable node of a smooth scalar expression over the variable families
/// x1..xn, y1..ys, z1..zs. Trees are shared freely; nothing mutates them
/// after construction.
struct Expr {
  ExprKind kind;
  double value = 0.0;               // Constant
  VarFamily family = VarFamily::X;  // Variable
  int index = 0;                    // Variable, 1-based
  int exponent = 0;                 // IntPow
  ExprPtr lhs;                      // unary child or left operand
  ExprPtr rhs;                      // right operand
};

ExprPtr make_constant(double value);
ExprPtr make_variable(VarFamily family, int index);
ExprPtr make_unary(ExprKind kind, ExprPtr child);
ExprPtr make_binary(ExprKind kind, ExprPtr lhs, ExprPtr rhs);
ExprPtr make_int_pow(ExprPtr child, int exponent);

/// Evaluation point. y and z have length s (empty when s = 0).
struct Point {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd z;

  static Point zero(const Dims& dims);
  static Point from_flat(const Eigen::VectorXd& w, const Dims& dims);
  Eigen::VectorXd to_flat() const;
};

/// Parses `text` against the expression grammar, checking variable indices
/// against `dims` (x: 1..n, y/z: 1..s). Throws ParseError with a 1-based
/// character position.
ExprPtr parse_expr(const std::string& text, const Dims& dims);

/// Prints an expression so that re-parsing yields a structurally identical
/// tree (for trees that came out of parse_expr).
std::string print_expr(const Expr& e);
inline std::string print_expr(const ExprPtr& e) { return print_expr(*e); }

/// Structural equality of two trees.
bool expr_equal(const Expr& a, const Expr& b);
inline bool expr_equal(const ExprPtr& a, const ExprPtr& b) { return expr_equal(*a, *b); }

/// Calls `fn(family, index)` for every variable occurrence in the tree.
void visit_variables(const Expr& e, const std::function<void(VarFamily, int)>& fn);

/// Evaluates the expression at `p`. Throws DomainError naming the offending
/// node for log/sqrt of negative input and division by zero.
double eval_expr(const Expr& e, const Point& p);
inline double eval_expr(const ExprPtr& e, const Point& p) { return eval_expr(*e, p); }

/// Value and directional derivative along a seed direction.
struct DualValue {
  double value = 0.0;
  double deriv = 0.0;
};

/// Forward-mode evaluation: value of `e` at `p` together with the
/// directional derivative along `dir` (length n + 2s, ordered x, y, z).
DualValue eval_dir(const Expr& e, const Point& p, const Eigen::VectorXd& dir);
inline DualValue eval_dir(const ExprPtr& e, const Point& p, const Eigen::VectorXd& dir) {
  return eval_dir(*e, p, dir);
}

/// Gradient with respect to the concatenated variables (x, y, z), one
/// seeded forward pass per variable.
Eigen::VectorXd grad_expr(const Expr& e, const Point& p);
inline Eigen::VectorXd grad_expr(const ExprPtr& e, const Point& p) { return grad_expr(*e, p); }

/// Independent central-difference gradient oracle with step h.
Eigen::VectorXd fd_grad_oracle(const Expr& e, const Point& p, double h = 1e-6);
inline Eigen::VectorXd fd_grad_oracle(const ExprPtr& e, const Point& p, double h = 1e-6) {
  return fd_grad_oracle(*e, p, h);
}

}  // namespace absnf
