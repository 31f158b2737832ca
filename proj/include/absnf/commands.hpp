#pragma once

#include "absnf/explore.hpp"
#include "absnf/io.hpp"
#include "absnf/strata.hpp"

namespace absnf {

/// Solves the switching equation at x, classifies activity and reports the
/// LIKQ and transversality verdicts with their agreement flag. An
/// infeasible point is reported in-band, not thrown.
Report cmd_check(const AbsNormalProblem& problem, const Eigen::VectorXd& x, double tau);

/// Walks the segment on a uniform grid and reports z and the snapped sign
/// pattern per grid point, plus the intervals bracketing a sign change.
Report cmd_scan(const AbsNormalProblem& problem, const Segment& seg, int grid, double tau);

/// Locates kinks along the segment and reports the LIKQ verdict at each.
Report cmd_kinks(const AbsNormalProblem& problem, const Segment& seg, int grid, double tau_root,
                 double tau);

/// Runs the genericity experiment and reports per-trial results and the
/// aggregate fraction of trials with LIKQ everywhere.
Report cmd_perturb(const AbsNormalProblem& problem, const Segment& seg,
                   const std::optional<Box>& box, const GenericityConfig& config);

/// Generates a random valid problem and returns it in the file format.
std::string cmd_random(const Dims& dims, std::uint64_t seed);

struct VerifyConfig {
  std::uint64_t seed = 0;
  double tau = kDefaultTol;
  int workers = 1;
  int sample_count = 20;    // feasible samples for the agreement checks
  int gradient_points = 25; // evaluation points per expression for AD vs FD
  int jacobian_points = 25; // evaluation points for Jz vs FD
  double box_halfwidth = 2.0;
  int grid = 256;           // kink scan resolution along the box diagonal
  double tau_root = 1e-10;
};

/// Runs the built-in oracle suite on one problem: AD vs central
/// differences, Jz vs solution-map differences, and the two transversality
/// agreement oracles at sampled feasible points and located kinks.
Report cmd_verify(const AbsNormalProblem& problem, const VerifyConfig& config);

}  // namespace absnf
