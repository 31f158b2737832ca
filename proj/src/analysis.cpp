#include "absnf/analysis.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

namespace absnf {

Eigen::VectorXi snap_signs(const Eigen::VectorXd& v, double tau) {
  int s = static_cast<int>(v.size());
  Eigen::VectorXi signs(s);
  double scale = s > 0 ? tau * (1.0 + v.cwiseAbs().maxCoeff()) : 0.0;
  for (int i = 0; i < s; ++i)
    signs(i) = std::abs(v(i)) <= scale ? 0 : (v(i) > 0.0 ? 1 : -1);
  return signs;
}

ActivePattern active_sets(const AbsNormalProblem& problem, const SwitchingSolution& sol,
                          double tau) {
  ActivePattern pattern;
  pattern.tau = tau;
  pattern.sigma = snap_signs(sol.z, tau);
  for (int i = 0; i < pattern.sigma.size(); ++i)
    if (pattern.sigma(i) == 0) pattern.alpha.push_back(i);

  Point pt = sol.point();
  Eigen::VectorXd gv = eval_all(problem.g, pt);
  double gscale = gv.size() > 0 ? tau * (1.0 + gv.cwiseAbs().maxCoeff()) : 0.0;
  pattern.omega = Eigen::VectorXi::Zero(gv.size());
  for (int j = 0; j < gv.size(); ++j) {
    if (gv(j) < -gscale) {
      std::ostringstream msg;
      msg << "infeasible: g" << (j + 1) << " = " << gv(j) << " < 0";
      throw InfeasibleError(msg.str());
    }
    pattern.omega(j) = std::abs(gv(j)) <= gscale ? 0 : 1;
    if (pattern.omega(j) == 0) pattern.beta.push_back(j);
  }

  Eigen::VectorXd hv = eval_all(problem.h, pt);
  double hscale = hv.size() > 0 ? tau * (1.0 + hv.cwiseAbs().maxCoeff()) : 0.0;
  for (int j = 0; j < hv.size(); ++j) {
    if (std::abs(hv(j)) > hscale) {
      std::ostringstream msg;
      msg << "infeasible: h" << (j + 1) << " = " << hv(j) << " != 0";
      throw InfeasibleError(msg.str());
    }
  }
  return pattern;
}

namespace {

// Gradient rows of a list of expressions, split into the x / y / z blocks.
void partial_blocks(const std::vector<ExprPtr>& exprs, const Point& pt, int n, int s,
                    Eigen::MatrixXd& dx, Eigen::MatrixXd& dy, Eigen::MatrixXd& dz) {
  int rows = static_cast<int>(exprs.size());
  dx.resize(rows, n);
  dy.resize(rows, s);
  dz.resize(rows, s);
  for (int i = 0; i < rows; ++i) {
    Eigen::VectorXd grad = grad_expr(*exprs[i], pt);
    dx.row(i) = grad.segment(0, n).transpose();
    dy.row(i) = grad.segment(n, s).transpose();
    dz.row(i) = grad.segment(n + s, s).transpose();
  }
}

}  // namespace

Point snapped_point(const SwitchingSolution& sol, const Eigen::VectorXi& sigma) {
  Point pt = sol.point();
  for (int i = 0; i < sigma.size(); ++i) {
    if (sigma(i) == 0) {
      pt.z(i) = 0.0;
      pt.y(i) = 0.0;
    }
  }
  return pt;
}

FirstOrderData first_order(const AbsNormalProblem& problem, const SwitchingSolution& sol,
                           const ActivePattern& pattern) {
  const int n = problem.dims.n;
  const int s = problem.dims.s;
  Point pt = snapped_point(sol, pattern.sigma);

  FirstOrderData fo;
  partial_blocks(problem.c.components, pt, n, s, fo.Z, fo.L, fo.M);
  partial_blocks(problem.g, pt, n, s, fo.Gx, fo.Gy, fo.Gz);
  partial_blocks(problem.h, pt, n, s, fo.Hx, fo.Hy, fo.Hz);

  Eigen::VectorXd sigma = pattern.sigma.cast<double>();
  // I - L*Sigma - M is unit lower triangular by strict triangularity of c;
  // invert by forward substitution, never a general inverse.
  Eigen::MatrixXd T = Eigen::MatrixXd::Identity(s, s);
  T -= fo.L * sigma.asDiagonal();
  T -= fo.M;
  fo.S = T.triangularView<Eigen::UnitLower>().solve(Eigen::MatrixXd::Identity(s, s));

  fo.Jz = fo.S * fo.Z;
  fo.Jg = fo.Gx + (fo.Gy * sigma.asDiagonal() + fo.Gz) * fo.Jz;
  fo.Jh = fo.Hx + (fo.Hy * sigma.asDiagonal() + fo.Hz) * fo.Jz;
  return fo;
}

RankResult numerical_rank(const Eigen::MatrixXd& matrix, double rtol) {
  RankResult result;
  if (matrix.rows() == 0 || matrix.cols() == 0) return result;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(matrix);
  result.singular_values = svd.singularValues();
  double threshold =
      rtol * result.singular_values(0) * static_cast<double>(std::max(matrix.rows(), matrix.cols()));
  for (int i = 0; i < result.singular_values.size(); ++i)
    if (result.singular_values(i) > threshold) ++result.rank;
  return result;
}

LikqVerdict check_likq(const AbsNormalProblem& problem, const SwitchingSolution& sol, double tau) {
  LikqVerdict verdict;
  verdict.pattern = active_sets(problem, sol, tau);
  FirstOrderData fo = first_order(problem, sol, verdict.pattern);

  const int n = problem.dims.n;
  const int q = problem.dims.q;
  int rows = static_cast<int>(verdict.pattern.alpha.size() + verdict.pattern.beta.size()) + q;
  verdict.required = rows;
  verdict.stacked.resize(rows, n);
  int r = 0;
  for (int i : verdict.pattern.alpha) verdict.stacked.row(r++) = fo.Jz.row(i);
  for (int j : verdict.pattern.beta) verdict.stacked.row(r++) = fo.Jg.row(j);
  for (int j = 0; j < q; ++j) verdict.stacked.row(r++) = fo.Jh.row(j);

  RankResult rank = numerical_rank(verdict.stacked);
  verdict.rank = rank.rank;
  verdict.singular_values = rank.singular_values;
  verdict.holds = verdict.rank == verdict.required;
  return verdict;
}

Eigen::VectorXd jz_fd_oracle(const AbsNormalProblem& problem, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& direction, double h, double tau) {
  SwitchingSolution center = solve_switching(problem, x);
  SwitchingSolution plus = solve_switching(problem, x + h * direction);
  SwitchingSolution minus = solve_switching(problem, x - h * direction);

  for (const SwitchingSolution* sol : {&center, &plus, &minus}) {
    for (int i = 0; i < sol->z.size(); ++i) {
      if (std::abs(sol->z(i)) <= 10.0 * tau)
        throw OracleError("finite-difference oracle inapplicable: stencil point is within "
                          "10*tau of a kink of component " + std::to_string(i + 1));
    }
  }
  // A sign flip between stencil points witnesses a kink strictly inside the
  // stencil even when all three points clear the magnitude test.
  for (int i = 0; i < center.z.size(); ++i) {
    bool same = (center.z(i) > 0) == (plus.z(i) > 0) && (center.z(i) > 0) == (minus.z(i) > 0);
    if (!same)
      throw OracleError("finite-difference oracle inapplicable: component " +
                        std::to_string(i + 1) + " changes sign across the stencil");
  }
  return (plus.z - minus.z) / (2.0 * h);
}

}  // namespace absnf
