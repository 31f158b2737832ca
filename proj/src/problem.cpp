#include "absnf/problem.hpp"

#include <cmath>

namespace absnf {

namespace {

void check_dims(const Expr& e, const Dims& dims, const std::string& label,
                std::vector<std::string>& out) {
  visit_variables(e, [&](VarFamily family, int index) {
    int limit = family == VarFamily::X ? dims.n : dims.s;
    char letter = family == VarFamily::X ? 'x' : family == VarFamily::Y ? 'y' : 'z';
    if (index < 1 || index > limit) {
      out.push_back(label + " references " + letter + std::to_string(index) +
                    " outside the declared dimensions");
    }
  });
}

}  // namespace

ValidationReport validate(const AbsNormalProblem& problem) {
  ValidationReport report;
  const Dims& dims = problem.dims;

  if (dims.n < 0 || dims.s < 0 || dims.p < 0 || dims.q < 0)
    report.violations.push_back("dimensions must be non-negative");
  if (problem.c.size() != dims.s)
    report.violations.push_back("expected " + std::to_string(dims.s) +
                                " switching components, found " +
                                std::to_string(problem.c.size()));
  if (static_cast<int>(problem.g.size()) != dims.p)
    report.violations.push_back("expected " + std::to_string(dims.p) +
                                " inequality constraints, found " +
                                std::to_string(problem.g.size()));
  if (static_cast<int>(problem.h.size()) != dims.q)
    report.violations.push_back("expected " + std::to_string(dims.q) +
                                " equality constraints, found " + std::to_string(problem.h.size()));

  for (int i = 0; i < problem.c.size(); ++i) {
    std::string label = "switching component " + std::to_string(i + 1);
    check_dims(*problem.c.components[i], dims, label, report.violations);
    // Strict triangularity: component i must not reference y_j or z_j
    // with j >= i.
    visit_variables(*problem.c.components[i], [&](VarFamily family, int index) {
      if (family == VarFamily::X) return;
      if (index >= i + 1) {
        char letter = family == VarFamily::Y ? 'y' : 'z';
        report.violations.push_back(label + " references " + letter + std::to_string(index) +
                                    " (index >= component, violates strict triangularity)");
      }
    });
  }
  for (std::size_t j = 0; j < problem.g.size(); ++j)
    check_dims(*problem.g[j], dims, "inequality constraint g" + std::to_string(j + 1),
               report.violations);
  for (std::size_t j = 0; j < problem.h.size(); ++j)
    check_dims(*problem.h[j], dims, "equality constraint h" + std::to_string(j + 1),
               report.violations);
  if (problem.f) check_dims(*problem.f, dims, "objective f", report.violations);

  return report;
}

SwitchingSolution solve_switching(const SwitchingFunction& c, int n, const Eigen::VectorXd& x) {
  int s = c.size();
  SwitchingSolution sol;
  sol.x = x;
  sol.z = Eigen::VectorXd::Zero(s);
  sol.y = Eigen::VectorXd::Zero(s);

  Point pt{x, sol.y, sol.z};
  for (int i = 0; i < s; ++i) {
    double zi;
    try {
      zi = eval_expr(*c.components[i], pt);
    } catch (const DomainError& err) {
      throw DomainError("switching component " + std::to_string(i + 1) + ": " + err.what());
    }
    pt.z(i) = zi;
    pt.y(i) = std::abs(zi);
  }
  sol.z = pt.z;
  sol.y = pt.y;
  sol.residual = residual_inf(c, n, x, sol.z);
  return sol;
}

SwitchingSolution solve_switching(const AbsNormalProblem& problem, const Eigen::VectorXd& x) {
  return solve_switching(problem.c, problem.dims.n, x);
}

double residual_inf(const SwitchingFunction& c, int /*n*/, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& z) {
  int s = c.size();
  if (s == 0) return 0.0;
  Point pt{x, z.cwiseAbs(), z};
  double worst = 0.0;
  for (int i = 0; i < s; ++i) {
    double ci = eval_expr(*c.components[i], pt);
    worst = std::max(worst, std::abs(z(i) - ci));
  }
  return worst;
}

Eigen::VectorXd eval_all(const std::vector<ExprPtr>& exprs, const Point& p) {
  Eigen::VectorXd values(static_cast<int>(exprs.size()));
  for (std::size_t i = 0; i < exprs.size(); ++i) values(static_cast<int>(i)) = eval_expr(*exprs[i], p);
  return values;
}

Eigen::VectorXd evaluate_procedure(const AbsNormalProblem& problem, EvalTarget target,
                                   const Eigen::VectorXd& x) {
  SwitchingSolution sol = solve_switching(problem, x);
  Point pt = sol.point();
  switch (target) {
    case EvalTarget::Objective: {
      if (!problem.f) throw Error("problem has no objective");
      Eigen::VectorXd v(1);
      v(0) = eval_expr(*problem.f, pt);
      return v;
    }
    case EvalTarget::Inequalities:
      return eval_all(problem.g, pt);
    case EvalTarget::Equalities:
      return eval_all(problem.h, pt);
  }
  throw Error("unreachable evaluation target");
}

}  // namespace absnf
