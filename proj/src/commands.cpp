#include "absnf/commands.hpp"

#include <cmath>

#include "absnf/rng.hpp"
#include "absnf/version.hpp"

namespace absnf {

namespace {

Report to_json(const Eigen::VectorXd& v) {
  Report arr = Report::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Report to_json(const Eigen::VectorXi& v) {
  Report arr = Report::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Report to_json(const Eigen::MatrixXd& m) {
  Report rows = Report::array();
  for (int i = 0; i < m.rows(); ++i) {
    Report row = Report::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Report one_based(const std::vector<int>& indices) {
  Report arr = Report::array();
  for (int i : indices) arr.push_back(i + 1);
  return arr;
}

Report report_header(const char* command, const AbsNormalProblem& problem, double tau) {
  Report r;
  r["tool"] = kToolName;
  r["version"] = kToolVersion;
  r["command"] = command;
  r["problem"] = {{"name", problem.name},
                  {"n", problem.dims.n},
                  {"s", problem.dims.s},
                  {"p", problem.dims.p},
                  {"q", problem.dims.q}};
  r["tolerance"] = tau;
  return r;
}

Report point_verdict_json(const PointVerdict& pv) {
  Report r;
  if (pv.component >= 0) {
    r["t"] = pv.t;
    r["component"] = pv.component + 1;
  } else {
    r["source"] = "sample";
  }
  r["x"] = to_json(pv.x);
  r["feasible"] = pv.feasible;
  if (pv.feasible) {
    r["likq"] = pv.likq;
    if (pv.sigma_min)
      r["sigma_min"] = *pv.sigma_min;
    else
      r["sigma_min"] = nullptr;
  }
  return r;
}

Report trial_json(const TrialResult& trial) {
  Report r;
  r["trial_seed"] = trial.trial_seed;
  r["kinks_found"] = trial.kinks_found;
  r["likq_everywhere"] = trial.likq_everywhere;
  Report points = Report::array();
  for (const PointVerdict& pv : trial.points) points.push_back(point_verdict_json(pv));
  r["points"] = std::move(points);
  Report errors = Report::array();
  for (const std::string& err : trial.errors) errors.push_back(err);
  r["errors"] = std::move(errors);
  return r;
}

}  // namespace

Report cmd_check(const AbsNormalProblem& problem, const Eigen::VectorXd& x, double tau) {
  Report report = report_header("check", problem, tau);
  SwitchingSolution sol = solve_switching(problem, x);
  report["x"] = to_json(sol.x);
  report["z"] = to_json(sol.z);
  report["y"] = to_json(sol.y);
  report["residual"] = sol.residual;

  try {
    LikqVerdict likq = check_likq(problem, sol, tau);
    TransversalityReport trans = check_transversality(problem, sol.x, sol.y, sol.z, tau);
    report["feasible"] = true;
    report["alpha"] = one_based(likq.pattern.alpha);
    report["beta"] = one_based(likq.pattern.beta);
    report["sigma"] = to_json(likq.pattern.sigma);
    report["omega"] = to_json(likq.pattern.omega);
    report["likq"] = {{"holds", likq.holds},
                      {"rank", likq.rank},
                      {"required", likq.required},
                      {"singular_values", to_json(likq.singular_values)},
                      {"stacked_matrix", to_json(likq.stacked)}};
    report["transversality"] = {{"holds", trans.holds},
                                {"rank", trans.rank},
                                {"required", trans.required},
                                {"singular_values", to_json(trans.singular_values)}};
    report["agree"] = likq.holds == trans.holds;
  } catch (const InfeasibleError& err) {
    report["feasible"] = false;
    report["violation"] = err.what();
  }
  return report;
}

Report cmd_scan(const AbsNormalProblem& problem, const Segment& seg, int grid, double tau) {
  if (grid < 2) throw Error("scan needs a grid of at least 2 points");
  Report report = report_header("scan", problem, tau);
  report["from"] = to_json(seg.a);
  report["to"] = to_json(seg.b);
  report["grid"] = grid;

  Report points = Report::array();
  Eigen::VectorXi previous;
  Report changes = Report::array();
  for (int k = 0; k < grid; ++k) {
    double t = static_cast<double>(k) / static_cast<double>(grid - 1);
    SwitchingSolution sol = solve_switching(problem, seg.at(t));
    Eigen::VectorXi sigma = snap_signs(sol.z, tau);
    Report entry;
    entry["t"] = t;
    entry["z"] = to_json(sol.z);
    entry["sigma"] = to_json(sigma);
    points.push_back(std::move(entry));
    if (k > 0) {
      for (int i = 0; i < sigma.size(); ++i) {
        if (previous(i) != 0 && sigma(i) != 0 && previous(i) != sigma(i)) {
          Report change;
          change["component"] = i + 1;
          change["t_lo"] = static_cast<double>(k - 1) / static_cast<double>(grid - 1);
          change["t_hi"] = t;
          changes.push_back(std::move(change));
        }
      }
    }
    previous = sigma;
  }
  report["points"] = std::move(points);
  report["sign_changes"] = std::move(changes);
  return report;
}

Report cmd_kinks(const AbsNormalProblem& problem, const Segment& seg, int grid, double tau_root,
                 double tau) {
  Report report = report_header("kinks", problem, tau);
  report["from"] = to_json(seg.a);
  report["to"] = to_json(seg.b);
  report["grid"] = grid;
  report["root_tolerance"] = tau_root;

  std::vector<Kink> kinks = locate_kinks(problem, seg, grid, tau_root);
  Report entries = Report::array();
  for (const Kink& kink : kinks) {
    Report entry;
    entry["t"] = kink.t;
    entry["component"] = kink.component + 1;
    entry["x"] = to_json(kink.x);
    entry["z_value"] = kink.z_value;
    SwitchingSolution sol = solve_switching(problem, kink.x);
    try {
      LikqVerdict likq = check_likq(problem, sol, tau);
      entry["feasible"] = true;
      entry["likq"] = likq.holds;
      entry["rank"] = likq.rank;
      entry["required"] = likq.required;
      entry["singular_values"] = to_json(likq.singular_values);
    } catch (const InfeasibleError& err) {
      entry["feasible"] = false;
      entry["violation"] = err.what();
    }
    entries.push_back(std::move(entry));
  }
  report["kinks"] = std::move(entries);
  return report;
}

Report cmd_perturb(const AbsNormalProblem& problem, const Segment& seg,
                   const std::optional<Box>& box, const GenericityConfig& config) {
  GenericityReport result = genericity_experiment(problem, seg, box, config);
  Report report = report_header("perturb", problem, config.tau);
  report["seed"] = config.seed;
  report["eps"] = config.eps;
  report["trials"] = config.trials;
  report["grid"] = config.grid;
  report["root_tolerance"] = config.tau_root;
  report["from"] = to_json(seg.a);
  report["to"] = to_json(seg.b);
  report["base"] = trial_json(result.base);
  Report trials = Report::array();
  for (const TrialResult& trial : result.trials) trials.push_back(trial_json(trial));
  report["trial_results"] = std::move(trials);
  report["fraction_likq_everywhere"] = result.fraction_likq_everywhere;
  return report;
}

std::string cmd_random(const Dims& dims, std::uint64_t seed) {
  return problem_to_text(random_problem(dims, seed));
}

namespace {

// Draws a point with all coordinates in [-hw, hw] at which every listed
// expression evaluates without domain errors on the central-difference
// stencil; bounded retries.
std::optional<Point> draw_admissible_point(Rng& rng, const Dims& dims, const ExprPtr& expr,
                                           double hw, double h) {
  for (int attempt = 0; attempt < 50; ++attempt) {
    Point pt;
    pt.x.resize(dims.n);
    pt.y.resize(dims.s);
    pt.z.resize(dims.s);
    for (int j = 0; j < dims.n; ++j) pt.x(j) = rng.uniform(-hw, hw);
    for (int j = 0; j < dims.s; ++j) pt.y(j) = rng.uniform(-hw, hw);
    for (int j = 0; j < dims.s; ++j) pt.z(j) = rng.uniform(-hw, hw);
    try {
      (void)grad_expr(*expr, pt);
      (void)fd_grad_oracle(*expr, pt, h);
      return pt;
    } catch (const DomainError&) {
      continue;
    }
  }
  return std::nullopt;
}

struct NamedExpr {
  std::string label;
  ExprPtr expr;
};

std::vector<NamedExpr> all_expressions(const AbsNormalProblem& problem) {
  std::vector<NamedExpr> out;
  for (int i = 0; i < problem.c.size(); ++i)
    out.push_back({"c" + std::to_string(i + 1), problem.c.components[static_cast<std::size_t>(i)]});
  for (std::size_t j = 0; j < problem.g.size(); ++j)
    out.push_back({"g" + std::to_string(j + 1), problem.g[j]});
  for (std::size_t j = 0; j < problem.h.size(); ++j)
    out.push_back({"h" + std::to_string(j + 1), problem.h[j]});
  if (problem.f) out.push_back({"f", problem.f});
  return out;
}

}  // namespace

Report cmd_verify(const AbsNormalProblem& problem, const VerifyConfig& config) {
  const Dims& dims = problem.dims;
  Report report = report_header("verify", problem, config.tau);
  report["seed"] = config.seed;
  Report checks = Report::array();
  bool all_passed = true;
  const double fd_step = 1e-6;
  const double grad_tol = 1e-6;

  // AD gradients against central differences, expression by expression.
  {
    double worst = 0.0;
    int tested = 0;
    Rng rng(derive_stream(config.seed, 1));
    for (const NamedExpr& entry : all_expressions(problem)) {
      for (int k = 0; k < config.gradient_points; ++k) {
        auto pt = draw_admissible_point(rng, dims, entry.expr, config.box_halfwidth, fd_step);
        if (!pt) continue;
        Eigen::VectorXd ad = grad_expr(*entry.expr, *pt);
        if (ad.size() == 0) continue;
        Eigen::VectorXd fd = fd_grad_oracle(*entry.expr, *pt, fd_step);
        double scale = 1.0 + ad.cwiseAbs().maxCoeff();
        // Only trust the difference quotient where halving the step
        // reproduces it; a wrong gradient would agree with neither.
        Eigen::VectorXd fd_half = fd_grad_oracle(*entry.expr, *pt, 0.5 * fd_step);
        if ((fd - fd_half).cwiseAbs().maxCoeff() > 0.2 * grad_tol * scale) continue;
        double dev = (ad - fd).cwiseAbs().maxCoeff() / scale;
        worst = std::max(worst, dev);
        ++tested;
      }
    }
    bool pass = worst <= grad_tol;
    all_passed = all_passed && pass;
    checks.push_back({{"name", "gradient-vs-central-difference"},
                      {"pass", pass},
                      {"points", tested},
                      {"worst_deviation", worst}});
  }

  // Jz against central differences of the solution map at non-kink points.
  {
    double worst = 0.0;
    int tested = 0;
    Rng rng(derive_stream(config.seed, 2));
    for (int k = 0; k < config.jacobian_points; ++k) {
      Eigen::VectorXd x(dims.n);
      for (int j = 0; j < dims.n; ++j) x(j) = rng.uniform(-config.box_halfwidth, config.box_halfwidth);
      Eigen::VectorXd dir = Eigen::VectorXd::Zero(dims.n);
      if (dims.n > 0) dir(rng.uniform_int(0, dims.n - 1)) = 1.0;
      try {
        Eigen::VectorXd fd = jz_fd_oracle(problem, x, dir, fd_step, config.tau);
        SwitchingSolution sol = solve_switching(problem, x);
        ActivePattern pattern;
        pattern.sigma = snap_signs(sol.z, config.tau);
        pattern.omega = Eigen::VectorXi::Zero(dims.p);
        FirstOrderData fo = first_order(problem, sol, pattern);
        Eigen::VectorXd ad = fo.Jz * dir;
        if (ad.size() == 0) {
          ++tested;
          continue;
        }
        double scale = 1.0 + ad.cwiseAbs().maxCoeff();
        Eigen::VectorXd fd_half = jz_fd_oracle(problem, x, dir, 0.5 * fd_step, config.tau);
        if ((fd - fd_half).cwiseAbs().maxCoeff() > 0.2 * grad_tol * scale) continue;
        double dev = (ad - fd).cwiseAbs().maxCoeff() / scale;
        worst = std::max(worst, dev);
        ++tested;
      } catch (const OracleError&) {
        continue;
      } catch (const DomainError&) {
        continue;
      }
    }
    bool pass = worst <= grad_tol;
    all_passed = all_passed && pass;
    checks.push_back({{"name", "solution-jacobian-vs-central-difference"},
                      {"pass", pass},
                      {"points", tested},
                      {"worst_deviation", worst}});
  }

  // Agreement oracles at sampled feasible points and located kinks.
  {
    std::vector<Eigen::VectorXd> points;
    Box box;
    box.lo = Eigen::VectorXd::Constant(dims.n, -config.box_halfwidth);
    box.hi = Eigen::VectorXd::Constant(dims.n, config.box_halfwidth);
    SampleReport samples =
        sample_feasible(problem, box, config.sample_count, derive_stream(config.seed, 3), config.tau);
    for (const FeasibleSample& sample : samples.accepted) points.push_back(sample.sol.x);
    if (dims.n > 0) {
      Segment diag{box.lo, box.hi};
      for (const Kink& kink : locate_kinks(problem, diag, config.grid, config.tau_root))
        points.push_back(kink.x);
    }

    const int count = static_cast<int>(points.size());
    std::vector<int> plain_agree(points.size(), -1);      // -1 skipped, 0 disagree, 1 agree
    std::vector<int> structured_agree(points.size(), -1);
    parallel_for_indexed(count, config.workers, [&](int i) {
      const Eigen::VectorXd& x = points[static_cast<std::size_t>(i)];
      try {
        auto [likq, trans] = likq_transversality_agree(problem, x, config.tau);
        plain_agree[static_cast<std::size_t>(i)] = likq == trans ? 1 : 0;
        auto [plain, lifted] = structured_transversality_agree(problem, x, config.tau);
        structured_agree[static_cast<std::size_t>(i)] = plain == lifted ? 1 : 0;
      } catch (const InfeasibleError&) {
        // kink off the feasible set; the equivalence only covers feasible points
      } catch (const DomainError&) {
      }
    });

    auto summarize = [&](const std::vector<int>& flags, const char* name) {
      int tested = 0, agreed = 0;
      for (int flag : flags) {
        if (flag < 0) continue;
        ++tested;
        if (flag == 1) ++agreed;
      }
      bool pass = tested == agreed;
      all_passed = all_passed && pass;
      checks.push_back(
          {{"name", name}, {"pass", pass}, {"points", tested}, {"agreed", agreed}});
    };
    summarize(plain_agree, "likq-vs-transversality");
    summarize(structured_agree, "structured-vs-plain-transversality");
  }

  report["checks"] = std::move(checks);
  report["all_passed"] = all_passed;
  return report;
}

}  // namespace absnf
