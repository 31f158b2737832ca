#include "absnf/strata.hpp"

#include <cmath>

namespace absnf {

Eigen::VectorXd JetPoint::to_flat() const {
  Eigen::VectorXd w(x.size() + y.size() + z.size() + c_val.size() + g_val.size() + h_val.size());
  w << x, y, z, c_val, g_val, h_val;
  return w;
}

JetPoint jet(const AbsNormalProblem& problem, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
             const Eigen::VectorXd& z) {
  JetPoint jp;
  jp.x = x;
  jp.y = y;
  jp.z = z;
  Point pt{x, y, z};
  jp.c_val = eval_all(problem.c.components, pt);
  jp.g_val = eval_all(problem.g, pt);
  jp.h_val = eval_all(problem.h, pt);
  return jp;
}

std::optional<Signature> membership(const JetPoint& jp, double tau) {
  int s = static_cast<int>(jp.z.size());
  double zscale = s > 0 ? tau * (1.0 + jp.z.cwiseAbs().maxCoeff()) : 0.0;
  for (int i = 0; i < s; ++i) {
    if (std::abs(jp.y(i) - std::abs(jp.z(i))) > zscale) return std::nullopt;
    if (std::abs(jp.z(i) - jp.c_val(i)) > zscale) return std::nullopt;
  }
  double gscale = jp.g_val.size() > 0 ? tau * (1.0 + jp.g_val.cwiseAbs().maxCoeff()) : 0.0;
  for (int j = 0; j < jp.g_val.size(); ++j)
    if (jp.g_val(j) < -gscale) return std::nullopt;
  double hscale = jp.h_val.size() > 0 ? tau * (1.0 + jp.h_val.cwiseAbs().maxCoeff()) : 0.0;
  for (int j = 0; j < jp.h_val.size(); ++j)
    if (std::abs(jp.h_val(j)) > hscale) return std::nullopt;

  Signature sig;
  sig.sigma = snap_signs(jp.z, tau);
  sig.omega = Eigen::VectorXi::Zero(jp.g_val.size());
  for (int j = 0; j < jp.g_val.size(); ++j)
    sig.omega(j) = std::abs(jp.g_val(j)) <= gscale ? 0 : 1;
  return sig;
}

Eigen::MatrixXd tangent_basis(const Eigen::VectorXi& sigma, const Eigen::VectorXi& omega, int n,
                              int q) {
  int s = static_cast<int>(sigma.size());
  int p = static_cast<int>(omega.size());
  int d = n + 2 * s;
  int m = s + p + q;

  int cols = n;
  for (int i = 0; i < s; ++i)
    if (sigma(i) != 0) ++cols;
  for (int j = 0; j < p; ++j)
    if (omega(j) == 1) ++cols;

  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(d + m, cols);
  int col = 0;
  for (int j = 0; j < n; ++j) basis(j, col++) = 1.0;
  for (int i = 0; i < s; ++i) {
    if (sigma(i) == 0) continue;
    basis(n + i, col) = 1.0;                                // y row: |sigma_i|
    basis(n + s + i, col) = static_cast<double>(sigma(i));  // z row
    basis(d + i, col) = static_cast<double>(sigma(i));      // c row
    ++col;
  }
  for (int j = 0; j < p; ++j) {
    if (omega(j) != 1) continue;
    basis(d + s + j, col++) = 1.0;  // g row
  }
  return basis;
}

namespace {

// Unit-infinity-norm row and column scaling. Diagonal scaling preserves the
// rank exactly; it keeps the relative singular-value threshold meaningful
// when derivative entries and the identity blocks live on very different
// scales.
Eigen::MatrixXd equilibrated(Eigen::MatrixXd a) {
  for (int i = 0; i < a.rows(); ++i) {
    double norm = a.row(i).cwiseAbs().maxCoeff();
    if (norm > 0.0) a.row(i) /= norm;
  }
  for (int j = 0; j < a.cols(); ++j) {
    double norm = a.col(j).cwiseAbs().maxCoeff();
    if (norm > 0.0) a.col(j) /= norm;
  }
  return a;
}

// Full Jacobian of (c, g, h) with respect to (x, y, z) at a free jet point.
Eigen::MatrixXd combined_jacobian(const AbsNormalProblem& problem, const Point& pt) {
  const int d = problem.dims.total();
  const int m = problem.dims.s + problem.dims.p + problem.dims.q;
  Eigen::MatrixXd J(m, d);
  int row = 0;
  for (const ExprPtr& e : problem.c.components) J.row(row++) = grad_expr(*e, pt).transpose();
  for (const ExprPtr& e : problem.g) J.row(row++) = grad_expr(*e, pt).transpose();
  for (const ExprPtr& e : problem.h) J.row(row++) = grad_expr(*e, pt).transpose();
  return J;
}

}  // namespace

TransversalityReport check_transversality(const AbsNormalProblem& problem,
                                          const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                          const Eigen::VectorXd& z, double tau) {
  JetPoint jp = jet(problem, x, y, z);
  std::optional<Signature> sig = membership(jp, tau);
  if (!sig)
    throw NotInStratifiedSetError("jet point violates y = |z|, z = c, g >= 0 or h = 0");

  const int d = problem.dims.total();
  const int m = problem.dims.s + problem.dims.p + problem.dims.q;
  // Differentiate at the point snapped onto the stratum, in step with
  // first_order; kink-location residue otherwise leaks into the rank test.
  Point pt{x, y, z};
  for (int i = 0; i < sig->sigma.size(); ++i) {
    if (sig->sigma(i) == 0) {
      pt.y(i) = 0.0;
      pt.z(i) = 0.0;
    }
  }
  Eigen::MatrixXd dphi = combined_jacobian(problem, pt);
  Eigen::MatrixXd basis = tangent_basis(sig->sigma, sig->omega, problem.dims.n, problem.dims.q);

  TransversalityReport report;
  report.signature = *sig;
  report.required = d + m;
  report.matrix.resize(d + m, d + basis.cols());
  report.matrix.topLeftCorner(d, d) = Eigen::MatrixXd::Identity(d, d);
  report.matrix.bottomLeftCorner(m, d) = dphi;
  report.matrix.rightCols(basis.cols()) = basis;

  RankResult rank = numerical_rank(equilibrated(report.matrix));
  report.rank = rank.rank;
  report.singular_values = rank.singular_values;
  report.holds = report.rank == report.required;
  return report;
}

std::pair<bool, bool> likq_transversality_agree(const AbsNormalProblem& problem,
                                                const Eigen::VectorXd& x, double tau) {
  SwitchingSolution sol = solve_switching(problem, x);
  LikqVerdict likq = check_likq(problem, sol, tau);
  TransversalityReport trans = check_transversality(problem, sol.x, sol.y, sol.z, tau);
  return {likq.holds, trans.holds};
}

bool whitney_refinement_check(const Eigen::VectorXi& sigma, const Eigen::VectorXi& omega,
                              const Eigen::VectorXi& sigma0, const Eigen::VectorXi& omega0, int n,
                              int q) {
  if (sigma0.size() != sigma.size() || omega0.size() != omega.size())
    throw IncompatibleSignatureError("signature lengths differ");
  for (int i = 0; i < sigma.size(); ++i)
    if (sigma0(i) != sigma(i) && sigma0(i) != 0)
      throw IncompatibleSignatureError("sigma0 is not a limit of sigma at component " +
                                       std::to_string(i + 1));
  for (int j = 0; j < omega.size(); ++j)
    if (omega0(j) != omega(j) && omega0(j) != 0)
      throw IncompatibleSignatureError("omega0 is not a limit of omega at component " +
                                       std::to_string(j + 1));

  Eigen::MatrixXd basis = tangent_basis(sigma, omega, n, q);
  Eigen::MatrixXd limit = tangent_basis(sigma0, omega0, n, q);
  Eigen::MatrixXd joined(basis.rows(), limit.cols() + basis.cols());
  joined << limit, basis;
  return numerical_rank(joined).rank == numerical_rank(basis).rank;
}

PiOperator build_pi(int n, int s, int p, int q) {
  PiOperator op;
  op.n = n;
  op.s = s;
  op.p = p;
  op.q = q;

  const int d = n + 2 * s;
  for (int i = 1; i <= s; ++i) op.block_rows.push_back(n + 2 * (i - 1));
  op.block_rows.push_back(d);
  op.block_rows.push_back(d);

  int d_breve = 0;
  for (int di : op.block_rows) d_breve += di;

  op.pi = Eigen::MatrixXi::Zero(d_breve, d);
  int row = 0;
  for (int i = 1; i <= s; ++i) {
    for (int j = 0; j < n; ++j) op.pi(row++, j) = 1;                    // x block
    for (int j = 0; j < i - 1; ++j) op.pi(row++, n + j) = 1;            // y_1..y_{i-1}
    for (int j = 0; j < i - 1; ++j) op.pi(row++, n + s + j) = 1;        // z_1..z_{i-1}
  }
  for (int b = 0; b < 2; ++b)
    for (int j = 0; j < d; ++j) op.pi(row++, j) = 1;

  // The trailing identity block makes a left inverse immediate.
  op.pi_left_inverse = Eigen::MatrixXi::Zero(d, d_breve);
  for (int j = 0; j < d; ++j) op.pi_left_inverse(j, d_breve - d + j) = 1;
  return op;
}

std::pair<bool, bool> structured_transversality_agree(const AbsNormalProblem& problem,
                                                      const Eigen::VectorXd& x, double tau) {
  const int n = problem.dims.n;
  const int s = problem.dims.s;
  const int q = problem.dims.q;
  const int d = problem.dims.total();
  const int m = s + problem.dims.p + q;

  SwitchingSolution sol = solve_switching(problem, x);
  (void)active_sets(problem, sol, tau);  // feasibility precondition
  TransversalityReport plain = check_transversality(problem, sol.x, sol.y, sol.z, tau);

  PiOperator op = build_pi(n, s, problem.dims.p, q);
  const int d_breve = op.d_breve();
  Point pt = snapped_point(sol, plain.signature.sigma);

  // Jacobian of the structured tuple (c_1, ..., c_s, g, h): each block row
  // differentiates one function with respect to its own input block only.
  Eigen::MatrixXd dphi_breve = Eigen::MatrixXd::Zero(m, d_breve);
  int col = 0;
  for (int i = 0; i < s; ++i) {
    Eigen::VectorXd grad = grad_expr(*problem.c.components[i], pt);
    // Input block i: (x, y_1..y_{i-1}, z_1..z_{i-1}) in that order.
    for (int j = 0; j < n; ++j) dphi_breve(i, col + j) = grad(j);
    for (int j = 0; j < i; ++j) dphi_breve(i, col + n + j) = grad(n + j);
    for (int j = 0; j < i; ++j) dphi_breve(i, col + n + i + j) = grad(n + s + j);
    col += op.block_rows[i];
  }
  for (std::size_t j = 0; j < problem.g.size(); ++j)
    dphi_breve.row(s + static_cast<int>(j)).segment(col, d) =
        grad_expr(*problem.g[j], pt).transpose();
  col += d;
  for (std::size_t j = 0; j < problem.h.size(); ++j)
    dphi_breve.row(s + static_cast<int>(problem.g.size() + j)).segment(col, d) =
        grad_expr(*problem.h[j], pt).transpose();

  Eigen::MatrixXd basis = tangent_basis(plain.signature.sigma, plain.signature.omega, n, q);
  Eigen::MatrixXd lifted_basis(d_breve + m, basis.cols());
  lifted_basis.topRows(d_breve) = op.pi.cast<double>() * basis.topRows(d);
  lifted_basis.bottomRows(m) = basis.bottomRows(m);

  Eigen::MatrixXd lifted(d_breve + m, d_breve + basis.cols());
  lifted.topLeftCorner(d_breve, d_breve) = Eigen::MatrixXd::Identity(d_breve, d_breve);
  lifted.bottomLeftCorner(m, d_breve) = dphi_breve;
  lifted.rightCols(basis.cols()) = lifted_basis;

  bool lifted_holds = numerical_rank(equilibrated(lifted)).rank == d_breve + m;
  return {plain.holds, lifted_holds};
}

int stratification_dimension(int n, int s, int p) {
  // The maximum over signatures is attained with every switch sign nonzero
  // and every inequality strictly positive.
  return n + s + p;
}

}  // namespace absnf
