#pragma once

#include <vector>

#include "absnf/problem.hpp"

namespace absnf {

/// Default activity tolerance; forward substitution is exact for the worked
/// examples, scanned and bisected kinks carry ~1e-10 residual.
inline constexpr double kDefaultTol = 1e-8;

/// Relative threshold for singular-value rank decisions.
inline constexpr double kRankRtol = 1e-10;

/// Snapped sign vector: entry i is 0 if |v_i| <= tau * (1 + ||v||_inf),
/// otherwise the strict sign of v_i.
Eigen::VectorXi snap_signs(const Eigen::VectorXd& v, double tau);

/// Active switches alpha (sigma_i = 0), binding inequalities beta
/// (omega_j = 0) and the snapped signatures at a feasible point.
/// Index sets are 0-based and ascending.
struct ActivePattern {
  std::vector<int> alpha;
  std::vector<int> beta;
  Eigen::VectorXi sigma;  // length s, entries in {-1, 0, 1}
  Eigen::VectorXi omega;  // length p, entries in {0, 1}
  double tau = kDefaultTol;
};

/// Classifies activity at a switching solution. Throws InfeasibleError when
/// some g_j < -tau * (1 + ||g||_inf) or some |h_j| > tau * (1 + ||h||_inf).
ActivePattern active_sets(const AbsNormalProblem& problem, const SwitchingSolution& sol,
                          double tau);

/// The evaluation point with active switches snapped onto their stratum:
/// z_i := 0 for sigma_i = 0, y = |z|. Bisected kinks carry ~1e-10 residual
/// in z; snapping makes matrix entries that vanish on the stratum vanish
/// exactly instead of sitting at the rank threshold.
Point snapped_point(const SwitchingSolution& sol, const Eigen::VectorXi& sigma);

/// First-order matrices of the switching equation and the constraints,
/// evaluated at the activity-snapped point (x, |z|, z):
///   Z = dc/dx, L = dc/dy, M = dc/dz  (L, M strictly lower triangular),
///   S = (I - L*Sigma - M)^{-1}       (unit lower triangular forward solve),
///   Jz = S*Z,
///   Jg = Gx + (Gy*Sigma + Gz)*Jz,  Jh = Hx + (Hy*Sigma + Hz)*Jz.
struct FirstOrderData {
  Eigen::MatrixXd Z, L, M;
  Eigen::MatrixXd Gx, Gy, Gz;
  Eigen::MatrixXd Hx, Hy, Hz;
  Eigen::MatrixXd S;
  Eigen::MatrixXd Jz, Jg, Jh;
};

FirstOrderData first_order(const AbsNormalProblem& problem, const SwitchingSolution& sol,
                           const ActivePattern& pattern);

/// Singular-value rank with threshold rtol * sigma_max * max(rows, cols).
struct RankResult {
  int rank = 0;
  Eigen::VectorXd singular_values;
};

RankResult numerical_rank(const Eigen::MatrixXd& matrix, double rtol = kRankRtol);

/// Verdict of the linear independence kink qualification: the stacked
/// matrix (P_alpha*Jz over P_beta*Jg over Jh) must have full row rank
/// |alpha| + |beta| + q.
struct LikqVerdict {
  bool holds = false;
  int rank = 0;
  int required = 0;
  Eigen::MatrixXd stacked;
  Eigen::VectorXd singular_values;
  ActivePattern pattern;
};

LikqVerdict check_likq(const AbsNormalProblem& problem, const SwitchingSolution& sol, double tau);

/// Central difference of the solution map x -> z(x) along `direction`.
/// Throws OracleError when a stencil point is too close to a kink
/// (|z_i| <= 10*tau) or the sign pattern changes across the stencil.
Eigen::VectorXd jz_fd_oracle(const AbsNormalProblem& problem, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& direction, double h, double tau);

}  // namespace absnf
