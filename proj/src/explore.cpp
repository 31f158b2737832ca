#include "absnf/explore.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "absnf/rng.hpp"

namespace absnf {

namespace {

// Bisection for z_i(x(t)) on [ta, tb] with a sign change. Returns the root
// parameter once |z_i| <= tau_root, or nullopt when the interval collapses
// to machine precision first.
std::optional<double> bisect_component(const AbsNormalProblem& problem, const Segment& seg,
                                       int component, double ta, double za, double tb,
                                       double tau_root) {
  for (int iter = 0; iter < 200; ++iter) {
    double tm = 0.5 * (ta + tb);
    double zm = solve_switching(problem, seg.at(tm)).z(component);
    if (std::abs(zm) <= tau_root) return tm;
    if ((za > 0.0) != (zm > 0.0)) {
      tb = tm;
    } else {
      ta = tm;
      za = zm;
    }
    if (tb - ta < 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(tm)))
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

std::vector<Kink> locate_kinks(const AbsNormalProblem& problem, const Segment& seg, int grid,
                               double tau_root) {
  if (grid < 2) throw Error("kink scan needs a grid of at least 2 points");
  const int s = problem.dims.s;
  std::vector<Kink> kinks;
  if (s == 0) return kinks;

  std::vector<double> ts(grid);
  std::vector<Eigen::VectorXd> zs(grid);
  for (int k = 0; k < grid; ++k) {
    ts[k] = static_cast<double>(k) / static_cast<double>(grid - 1);
    try {
      zs[k] = solve_switching(problem, seg.at(ts[k])).z;
    } catch (const DomainError& err) {
      throw DomainError("kink scan failed at t = " + std::to_string(ts[k]) + ": " + err.what());
    }
  }

  for (int i = 0; i < s; ++i) {
    std::vector<double> roots;
    for (int k = 0; k < grid; ++k)
      if (zs[k](i) == 0.0) roots.push_back(ts[k]);
    for (int k = 0; k + 1 < grid; ++k) {
      if (zs[k](i) * zs[k + 1](i) < 0.0) {
        if (auto t = bisect_component(problem, seg, i, ts[k], zs[k](i), ts[k + 1], tau_root))
          roots.push_back(*t);
      }
    }
    std::sort(roots.begin(), roots.end());
    double last = -std::numeric_limits<double>::infinity();
    for (double t : roots) {
      if (t - last <= tau_root) continue;
      last = t;
      Kink kink;
      kink.t = t;
      kink.component = i;
      kink.x = seg.at(t);
      kink.z_value = solve_switching(problem, kink.x).z(i);
      kinks.push_back(std::move(kink));
    }
  }

  std::sort(kinks.begin(), kinks.end(), [](const Kink& a, const Kink& b) {
    return a.t != b.t ? a.t < b.t : a.component < b.component;
  });
  return kinks;
}

namespace {

// One Gauss-Newton projection of x onto h(x, |z|, z) = 0, re-solving the
// switching equation at every candidate. Returns the projected x or nullopt.
std::optional<Eigen::VectorXd> project_equalities(const AbsNormalProblem& problem,
                                                  Eigen::VectorXd x, double tau) {
  for (int iter = 0; iter < 50; ++iter) {
    SwitchingSolution sol = solve_switching(problem, x);
    Eigen::VectorXd hv = eval_all(problem.h, sol.point());
    if (hv.size() == 0 || hv.cwiseAbs().maxCoeff() <= tau) return x;

    ActivePattern pattern;
    pattern.sigma = snap_signs(sol.z, tau);
    pattern.omega = Eigen::VectorXi::Zero(problem.dims.p);
    FirstOrderData fo = first_order(problem, sol, pattern);
    Eigen::VectorXd step = fo.Jh.completeOrthogonalDecomposition().solve(-hv);
    if (!step.allFinite()) return std::nullopt;

    double merit = hv.squaredNorm();
    double alpha = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 20; ++halving) {
      Eigen::VectorXd candidate = x + alpha * step;
      Eigen::VectorXd hn = eval_all(problem.h, solve_switching(problem, candidate).point());
      if (hn.squaredNorm() <= (1.0 - 1e-4 * alpha) * merit) {
        x = candidate;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) return std::nullopt;
  }
  SwitchingSolution sol = solve_switching(problem, x);
  Eigen::VectorXd hv = eval_all(problem.h, sol.point());
  if (hv.size() == 0 || hv.cwiseAbs().maxCoeff() <= tau) return x;
  return std::nullopt;
}

}  // namespace

SampleReport sample_feasible(const AbsNormalProblem& problem, const Box& box, int count,
                             std::uint64_t seed, double tau) {
  SampleReport report;
  const int n = problem.dims.n;
  for (int draw = 0; draw < count; ++draw) {
    ++report.draws;
    Rng rng(derive_stream(seed, static_cast<std::uint64_t>(draw)));
    Eigen::VectorXd x(n);
    for (int j = 0; j < n; ++j) x(j) = rng.uniform(box.lo(j), box.hi(j));

    try {
      bool projected = false;
      if (problem.dims.q > 0) {
        auto moved = project_equalities(problem, x, tau);
        if (!moved) {
          ++report.gauss_newton_failures;
          continue;
        }
        x = *moved;
        projected = true;
        // A projection that left the sampling region is not a sample of it.
        bool inside = true;
        for (int j = 0; j < n; ++j) {
          double margin = 0.25 * (box.hi(j) - box.lo(j));
          if (x(j) < box.lo(j) - margin || x(j) > box.hi(j) + margin) inside = false;
        }
        if (!inside) {
          ++report.gauss_newton_failures;
          continue;
        }
      }
      SwitchingSolution sol = solve_switching(problem, x);
      Eigen::VectorXd gv = eval_all(problem.g, sol.point());
      double gscale = gv.size() > 0 ? tau * (1.0 + gv.cwiseAbs().maxCoeff()) : 0.0;
      if (gv.size() > 0 && gv.minCoeff() < -gscale) {
        ++report.rejected_infeasible;
        continue;
      }
      report.accepted.push_back({std::move(sol), projected});
    } catch (const DomainError&) {
      ++report.rejected_infeasible;
    }
  }
  return report;
}

namespace {

// eps * (a0 + <a1, w>) over the admissible variables, coefficients drawn
// uniformly from [-1, 1] in a fixed order (constant, x ascending, y
// ascending, z ascending).
ExprPtr affine_term(Rng& rng, double eps, int n_vars_x, int limit_yz) {
  ExprPtr term = make_constant(eps * rng.uniform(-1.0, 1.0));
  for (int j = 1; j <= n_vars_x; ++j)
    term = make_binary(ExprKind::Add, term,
                       make_binary(ExprKind::Mul, make_constant(eps * rng.uniform(-1.0, 1.0)),
                                   make_variable(VarFamily::X, j)));
  for (int j = 1; j <= limit_yz; ++j)
    term = make_binary(ExprKind::Add, term,
                       make_binary(ExprKind::Mul, make_constant(eps * rng.uniform(-1.0, 1.0)),
                                   make_variable(VarFamily::Y, j)));
  for (int j = 1; j <= limit_yz; ++j)
    term = make_binary(ExprKind::Add, term,
                       make_binary(ExprKind::Mul, make_constant(eps * rng.uniform(-1.0, 1.0)),
                                   make_variable(VarFamily::Z, j)));
  return term;
}

}  // namespace

AbsNormalProblem perturb(const AbsNormalProblem& problem, double eps, std::uint64_t seed) {
  Rng rng(seed);
  AbsNormalProblem out = problem;
  const int n = problem.dims.n;
  const int s = problem.dims.s;
  for (int i = 0; i < s; ++i) {
    // Component i + 1 admits x, y_1..y_i, z_1..z_i (0-based i).
    out.c.components[i] =
        make_binary(ExprKind::Add, problem.c.components[i], affine_term(rng, eps, n, i));
  }
  for (std::size_t j = 0; j < problem.g.size(); ++j)
    out.g[j] = make_binary(ExprKind::Add, problem.g[j], affine_term(rng, eps, n, s));
  for (std::size_t j = 0; j < problem.h.size(); ++j)
    out.h[j] = make_binary(ExprKind::Add, problem.h[j], affine_term(rng, eps, n, s));
  return out;
}

namespace {

PointVerdict classify_point(const AbsNormalProblem& problem, const Eigen::VectorXd& x, double t,
                            int component, double tau) {
  PointVerdict pv;
  pv.t = t;
  pv.component = component;
  pv.x = x;
  SwitchingSolution sol = solve_switching(problem, x);
  try {
    LikqVerdict verdict = check_likq(problem, sol, tau);
    pv.feasible = true;
    pv.likq = verdict.holds;
    if (verdict.singular_values.size() > 0)
      pv.sigma_min = verdict.singular_values(verdict.singular_values.size() - 1);
  } catch (const InfeasibleError&) {
    pv.feasible = false;
  }
  return pv;
}

TrialResult evaluate_instance(const AbsNormalProblem& problem, const Segment& seg,
                              const std::optional<Box>& box, const GenericityConfig& config,
                              std::uint64_t trial_seed, std::uint64_t sample_seed) {
  TrialResult result;
  result.trial_seed = trial_seed;
  try {
    std::vector<Kink> kinks = locate_kinks(problem, seg, config.grid, config.tau_root);
    result.kinks_found = static_cast<int>(kinks.size());
    for (const Kink& kink : kinks)
      result.points.push_back(classify_point(problem, kink.x, kink.t, kink.component, config.tau));

    if (problem.dims.p + problem.dims.q > 0 && box) {
      SampleReport samples =
          sample_feasible(problem, *box, config.samples, sample_seed, config.tau);
      for (const FeasibleSample& sample : samples.accepted)
        result.points.push_back(classify_point(problem, sample.sol.x, -1.0, -1, config.tau));
    }

    for (const PointVerdict& pv : result.points)
      if (pv.feasible && !pv.likq) result.likq_everywhere = false;
  } catch (const Error& err) {
    result.errors.push_back(err.what());
    result.likq_everywhere = false;
  }
  return result;
}

}  // namespace

void parallel_for_indexed(int count, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  int spawned = std::min(workers, count);
  pool.reserve(spawned);
  for (int w = 0; w < spawned; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (std::thread& worker : pool) worker.join();
}

GenericityReport genericity_experiment(const AbsNormalProblem& problem, const Segment& seg,
                                       const std::optional<Box>& box,
                                       const GenericityConfig& config) {
  if (config.trials < 1) throw Error("genericity experiment needs at least one trial");
  GenericityReport report;
  report.config = config;
  report.base = evaluate_instance(problem, seg, box, config, config.seed,
                                  derive_stream(config.seed, 0x0b5eull));

  report.trials.resize(config.trials);
  parallel_for_indexed(config.trials, config.workers, [&](int trial) {
    std::uint64_t trial_seed = config.seed ^ static_cast<std::uint64_t>(trial);
    AbsNormalProblem perturbed = perturb(problem, config.eps, trial_seed);
    report.trials[static_cast<std::size_t>(trial)] = evaluate_instance(
        perturbed, seg, box, config, trial_seed, derive_stream(trial_seed, 0x5a3eull));
  });

  int everywhere = 0;
  for (const TrialResult& trial : report.trials)
    if (trial.likq_everywhere) ++everywhere;
  report.fraction_likq_everywhere =
      static_cast<double>(everywhere) / static_cast<double>(config.trials);
  return report;
}

}  // namespace absnf
