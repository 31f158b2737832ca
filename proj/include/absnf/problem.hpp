#pragma once

#include <optional>
#include <string>
#include <vector>

#include "absnf/expr.hpp"

namespace absnf {

/// The triangular switching function c = (c_1, ..., c_s). Component i may
/// reference x1..xn, y1..y_{i-1} and z1..z_{i-1} only.
struct SwitchingFunction {
  std::vector<ExprPtr> components;

  int size() const { return static_cast<int>(components.size()); }
};

/// An abs-smooth problem in abs-normal form: switching function c,
/// inequality constraints g >= 0, equality constraints h = 0 and an
/// optional objective f, all smooth expressions over (x, y, z).
struct AbsNormalProblem {
  std::string name;
  Dims dims;
  SwitchingFunction c;
  std::vector<ExprPtr> g;
  std::vector<ExprPtr> h;
  ExprPtr f;  // may be null
};

struct ValidationReport {
  std::vector<std::string> violations;

  bool valid() const { return violations.empty(); }
};

/// Scans every expression tree for dimension violations and checks the
/// strict triangularity of the switching components. Findings are collected
/// into the report; nothing throws.
ValidationReport validate(const AbsNormalProblem& problem);

/// x together with the unique solution z of the switching equation,
/// y = |z| componentwise, and the residual ||z - c(x, |z|, z)||_inf.
struct SwitchingSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd z;
  Eigen::VectorXd y;
  double residual = 0.0;

  Point point() const { return Point{x, y, z}; }
};

/// Solves the switching equation by forward substitution,
/// z_i = c_i(x, (|z_1|,...,|z_{i-1}|), (z_1,...,z_{i-1})).
SwitchingSolution solve_switching(const SwitchingFunction& c, int n, const Eigen::VectorXd& x);
SwitchingSolution solve_switching(const AbsNormalProblem& problem, const Eigen::VectorXd& x);

/// ||z - c(x, |z|, z)||_inf for an arbitrary candidate z (0 when s = 0).
double residual_inf(const SwitchingFunction& c, int n, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& z);

enum class EvalTarget { Objective, Inequalities, Equalities };

/// Runs the evaluation procedure: solves the switching equation at x and
/// evaluates the target expressions at (x, |z|, z). The objective comes
/// back as a length-1 vector.
Eigen::VectorXd evaluate_procedure(const AbsNormalProblem& problem, EvalTarget target,
                                   const Eigen::VectorXd& x);

/// Evaluates a list of expressions at a fixed point.
Eigen::VectorXd eval_all(const std::vector<ExprPtr>& exprs, const Point& p);

}  // namespace absnf
