#pragma once

#include <optional>
#include <utility>

#include "absnf/analysis.hpp"

namespace absnf {

/// A point in jet space: inputs (x, y, z) paired with the values of
/// (c, g, h) at those inputs. y is a free coordinate here, not forced to
/// |z|; membership in the stratified set is a separate test.
struct JetPoint {
  Eigen::VectorXd x, y, z;
  Eigen::VectorXd c_val, g_val, h_val;

  Eigen::VectorXd to_flat() const;
};

JetPoint jet(const AbsNormalProblem& problem, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
             const Eigen::VectorXd& z);

/// Stratum signature: sign pattern of z and activity pattern of g.
struct Signature {
  Eigen::VectorXi sigma;  // {-1, 0, 1}^s
  Eigen::VectorXi omega;  // {0, 1}^p
};

/// Tests the stratified-set conditions y = |z|, z = c, g >= 0, h = 0 within
/// tau and returns the snapped signature of the containing stratum, or
/// nullopt if the jet point lies outside the set.
std::optional<Signature> membership(const JetPoint& jp, double tau);

/// Basis of the tangent space of the stratum with the given signature, as
/// columns in the ambient space R^{d+m} with coordinates ordered
/// (x, y, z, c, g, h). Column order: the n x-directions, then one column
/// (|sigma_i|, sigma_i, sigma_i) per nonzero sigma_i ascending, then one
/// g-direction per omega_j = 1 ascending. The h block is identically zero.
Eigen::MatrixXd tangent_basis(const Eigen::VectorXi& sigma, const Eigen::VectorXi& omega, int n,
                              int q);

struct TransversalityReport {
  bool holds = false;
  int rank = 0;
  int required = 0;
  Eigen::MatrixXd matrix;            // raw assembled matrix
  Eigen::VectorXd singular_values;   // of the equilibrated matrix behind the rank
  Signature signature;
};

/// Transversality of the 0-jet against the stratification at (x, y, z):
/// assembles [D j0 | tangent basis] with D j0 = [Id_d; (Z L M; Gx Gy Gz;
/// Hx Hy Hz)] and requires full row rank d + m. Throws
/// NotInStratifiedSetError when the jet point is outside the set.
TransversalityReport check_transversality(const AbsNormalProblem& problem,
                                          const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                          const Eigen::VectorXd& z, double tau);

/// Evaluates the LIKQ verdict and the transversality verdict at the
/// feasible point induced by x. The two booleans agree at every point; the
/// pair is returned unmerged so disagreement is observable.
std::pair<bool, bool> likq_transversality_agree(const AbsNormalProblem& problem,
                                                const Eigen::VectorXd& x, double tau);

/// Subspace inclusion between the tangent space of a limit stratum
/// (sigma0, omega0) and a refining stratum (sigma, omega). Preconditions:
/// sigma0_i in {sigma_i, 0} and omega0_j in {omega_j, 0}; throws
/// IncompatibleSignatureError otherwise. Inclusion is decided by
/// rank([B0 B]) == rank(B).
bool whitney_refinement_check(const Eigen::VectorXi& sigma, const Eigen::VectorXi& omega,
                              const Eigen::VectorXi& sigma0, const Eigen::VectorXi& omega0, int n,
                              int q);

/// The 0/1 selection operator that feeds the tuple (c_1, ..., c_s, g, h)
/// from a single (x, y, z): block i <= s selects (x, y_1..y_{i-1},
/// z_1..z_{i-1}); the last two blocks are identities. Integer arithmetic
/// throughout, so pi_left_inverse * pi == Id exactly.
struct PiOperator {
  int n = 0, s = 0, p = 0, q = 0;
  std::vector<int> block_rows;      // d_i per block, s + 2 entries
  Eigen::MatrixXi pi;               // d_breve x d
  Eigen::MatrixXi pi_left_inverse;  // d x d_breve

  int d() const { return n + 2 * s; }
  int d_breve() const { return static_cast<int>(pi.rows()); }
};

PiOperator build_pi(int n, int s, int p, int q);

/// Evaluates the plain transversality rank condition and the lifted
/// structured-jet condition rank [Id_dbreve, Pi*B_d; Dphi_breve, B_m] ==
/// d_breve + m at the feasible point induced by x; returns the two booleans
/// (always equal).
std::pair<bool, bool> structured_transversality_agree(const AbsNormalProblem& problem,
                                                      const Eigen::VectorXd& x, double tau);

/// Maximal stratum dimension over all signatures: n + s + p.
int stratification_dimension(int n, int s, int p);

}  // namespace absnf
