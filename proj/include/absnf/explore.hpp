#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absnf/analysis.hpp"

namespace absnf {

/// Parametrized line x(t) = a + t * (b - a), t in [0, 1].
struct Segment {
  Eigen::VectorXd a;
  Eigen::VectorXd b;

  Eigen::VectorXd at(double t) const { return a + t * (b - a); }
};

/// Axis-aligned sampling box.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

/// A located kink: switching component `component` (0-based) vanishes at
/// x = seg.at(t).
struct Kink {
  double t = 0.0;
  int component = 0;
  Eigen::VectorXd x;
  double z_value = 0.0;
};

/// Scans z_i along the segment on a uniform grid and bisects every sign
/// change down to |z_i| <= tau_root. Exact grid zeros are returned
/// directly; roots of the same component closer than tau_root in t are
/// merged. Results are sorted by (t, component).
std::vector<Kink> locate_kinks(const AbsNormalProblem& problem, const Segment& seg, int grid,
                               double tau_root);

struct FeasibleSample {
  SwitchingSolution sol;
  bool projected = false;  // true when Gauss-Newton moved the draw onto h = 0
};

struct SampleReport {
  std::vector<FeasibleSample> accepted;
  int draws = 0;
  int rejected_infeasible = 0;
  int gauss_newton_failures = 0;
};

/// Draws `count` points uniformly from the box (streams derived from
/// (seed, draw index)), projects onto h = 0 by damped Gauss-Newton when
/// q > 0, and keeps draws that satisfy the inequality constraints within
/// tau. Non-convergent draws are skipped and counted.
SampleReport sample_feasible(const AbsNormalProblem& problem, const Box& box, int count,
                             std::uint64_t seed, double tau);

/// Adds an independent affine perturbation eps * (a0 + <a1, w>) to every
/// switching component (w = its admissible inputs) and to every constraint
/// row (w = all of (x, y, z)). Coefficients are uniform in [-1, 1],
/// deterministic in the seed; the result always passes validation.
AbsNormalProblem perturb(const AbsNormalProblem& problem, double eps, std::uint64_t seed);

struct PointVerdict {
  double t = 0.0;            // segment parameter for kinks, -1 for samples
  int component = -1;        // vanishing component for kinks, -1 for samples
  Eigen::VectorXd x;
  bool feasible = false;
  bool likq = false;
  std::optional<double> sigma_min;  // smallest singular value of the stacked matrix
};

struct TrialResult {
  std::uint64_t trial_seed = 0;
  std::vector<PointVerdict> points;
  int kinks_found = 0;
  bool likq_everywhere = true;  // vacuously true when no point was testable
  std::vector<std::string> errors;
};

struct GenericityConfig {
  double eps = 1e-2;
  int trials = 100;
  std::uint64_t seed = 0;
  double tau = kDefaultTol;
  double tau_root = 1e-10;
  int grid = 512;
  int workers = 1;
  int samples = 16;  // feasible samples per trial when p + q > 0
};

struct GenericityReport {
  GenericityConfig config;
  TrialResult base;  // unperturbed problem, evaluated once
  std::vector<TrialResult> trials;
  double fraction_likq_everywhere = 0.0;
};

/// For each trial: perturb with seed xor trial index, locate kinks along
/// the segment (and sample feasible points from `box` when p + q > 0), run
/// the LIKQ check at every point, and aggregate. Per-trial errors are
/// recorded, never fatal. Deterministic in (problem, config), independent
/// of the worker count.
GenericityReport genericity_experiment(const AbsNormalProblem& problem, const Segment& seg,
                                       const std::optional<Box>& box,
                                       const GenericityConfig& config);

/// Runs `fn(i)` for i in [0, count) on `workers` threads. Each index is
/// processed exactly once; `fn` must confine its effects to its own slot.
void parallel_for_indexed(int count, int workers, const std::function<void(int)>& fn);

}  // namespace absnf
