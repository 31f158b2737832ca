#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>

#include "absnf/commands.hpp"
#include "absnf/version.hpp"

namespace {

using absnf::Report;

void emit(const Report& report, bool pretty, const std::string& out_path) {
  std::string text = pretty ? absnf::render_pretty(report) : absnf::dump_report(report);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream file(out_path);
    if (!file) throw absnf::Error("cannot write to '" + out_path + "'");
    file << text;
  }
}

void emit_text(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream file(out_path);
    if (!file) throw absnf::Error("cannot write to '" + out_path + "'");
    file << text;
  }
}

absnf::Segment make_segment(const absnf::AbsNormalProblem& problem, const std::string& from,
                            const std::string& to) {
  absnf::Segment seg;
  seg.a = absnf::parse_point(from, problem.dims.n);
  seg.b = absnf::parse_point(to, problem.dims.n);
  if ((seg.a - seg.b).cwiseAbs().maxCoeff() == 0.0)
    throw absnf::Error("segment endpoints must differ");
  return seg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Abs-normal-form analysis: switching solutions, kink qualification and "
               "transversality checks, perturbation experiments"};
  app.require_subcommand(1);
  app.fallthrough();  // shared flags may follow the subcommand

  double tol = absnf::kDefaultTol;
  std::uint64_t seed = 0;
  bool pretty = false;
  std::string out_path;
  app.add_option("--tol", tol, "activity tolerance")->capture_default_str();
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  app.add_flag("--pretty", pretty, "human-readable tables instead of JSON");
  app.add_option("--out", out_path, "write the report to a file instead of stdout");

  std::string problem_path, point_text, from_text, to_text, dims_text, box_text;
  int grid = 512;
  double root_tol = 1e-10;
  double eps = 1e-2;
  int trials = 100;
  int samples = 16;
  int workers = 1;

  CLI::App* check = app.add_subcommand("check", "LIKQ and transversality verdicts at a point");
  check->add_option("problem", problem_path, "problem file")->required();
  check->add_option("--point", point_text, "evaluation point, e.g. \"3,-5\" or \"pi\"")->required();

  CLI::App* scan = app.add_subcommand("scan", "sign-pattern profile along a segment");
  scan->add_option("problem", problem_path, "problem file")->required();
  scan->add_option("--from", from_text, "segment start")->required();
  scan->add_option("--to", to_text, "segment end")->required();
  scan->add_option("--grid", grid, "grid points")->capture_default_str();

  CLI::App* kinks = app.add_subcommand("kinks", "locate kinks along a segment and check LIKQ");
  kinks->add_option("problem", problem_path, "problem file")->required();
  kinks->add_option("--from", from_text, "segment start")->required();
  kinks->add_option("--to", to_text, "segment end")->required();
  kinks->add_option("--grid", grid, "grid points")->capture_default_str();
  kinks->add_option("--root-tol", root_tol, "bisection tolerance on |z_i|")->capture_default_str();

  CLI::App* perturb = app.add_subcommand("perturb", "seeded perturbation experiment");
  perturb->add_option("problem", problem_path, "problem file")->required();
  perturb->add_option("--from", from_text, "segment start")->required();
  perturb->add_option("--to", to_text, "segment end")->required();
  perturb->add_option("--grid", grid, "grid points")->capture_default_str();
  perturb->add_option("--root-tol", root_tol, "bisection tolerance")->capture_default_str();
  perturb->add_option("--eps", eps, "perturbation magnitude")->capture_default_str();
  perturb->add_option("--trials", trials, "number of perturbed instances")->capture_default_str();
  perturb->add_option("--samples", samples, "feasible samples per trial (constrained problems)")
      ->capture_default_str();
  perturb->add_option("--box", box_text, "sampling box as \"lo,hi\" (constrained problems)");
  perturb->add_option("--workers", workers, "worker threads")->capture_default_str();

  CLI::App* random = app.add_subcommand("random", "generate a random valid problem file");
  random->add_option("--dims", dims_text, "dimensions as \"n,s,p,q\"")->required();

  CLI::App* verify = app.add_subcommand("verify", "run the built-in oracle suite on a problem");
  verify->add_option("problem", problem_path, "problem file")->required();
  verify->add_option("--samples", samples, "feasible samples for the agreement checks")
      ->capture_default_str();
  verify->add_option("--workers", workers, "worker threads")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) {
      absnf::AbsNormalProblem problem = absnf::load_problem(problem_path);
      Eigen::VectorXd x = absnf::parse_point(point_text, problem.dims.n);
      emit(absnf::cmd_check(problem, x, tol), pretty, out_path);
    } else if (scan->parsed()) {
      absnf::AbsNormalProblem problem = absnf::load_problem(problem_path);
      emit(absnf::cmd_scan(problem, make_segment(problem, from_text, to_text), grid, tol), pretty,
           out_path);
    } else if (kinks->parsed()) {
      absnf::AbsNormalProblem problem = absnf::load_problem(problem_path);
      emit(absnf::cmd_kinks(problem, make_segment(problem, from_text, to_text), grid, root_tol,
                            tol),
           pretty, out_path);
    } else if (perturb->parsed()) {
      absnf::AbsNormalProblem problem = absnf::load_problem(problem_path);
      absnf::Segment seg = make_segment(problem, from_text, to_text);
      std::optional<absnf::Box> box;
      if (!box_text.empty()) {
        Eigen::VectorXd bounds = absnf::parse_point(box_text, 2);
        box = absnf::Box{Eigen::VectorXd::Constant(problem.dims.n, bounds(0)),
                         Eigen::VectorXd::Constant(problem.dims.n, bounds(1))};
      } else if (problem.dims.p + problem.dims.q > 0) {
        box = absnf::Box{seg.a.cwiseMin(seg.b), seg.a.cwiseMax(seg.b)};
      }
      absnf::GenericityConfig config;
      config.eps = eps;
      config.trials = trials;
      config.seed = seed;
      config.tau = tol;
      config.tau_root = root_tol;
      config.grid = grid;
      config.workers = workers;
      config.samples = samples;
      emit(absnf::cmd_perturb(problem, seg, box, config), pretty, out_path);
    } else if (random->parsed()) {
      Eigen::VectorXd dims_vec = absnf::parse_point(dims_text, 4);
      for (int i = 0; i < 4; ++i)
        if (dims_vec(i) < 0 || dims_vec(i) != std::floor(dims_vec(i)))
          throw absnf::Error("--dims expects four non-negative integers");
      absnf::Dims dims{static_cast<int>(dims_vec(0)), static_cast<int>(dims_vec(1)),
                       static_cast<int>(dims_vec(2)), static_cast<int>(dims_vec(3))};
      emit_text(absnf::cmd_random(dims, seed), out_path);
    } else if (verify->parsed()) {
      absnf::AbsNormalProblem problem = absnf::load_problem(problem_path);
      absnf::VerifyConfig config;
      config.seed = seed;
      config.tau = tol;
      config.workers = workers;
      config.sample_count = samples;
      emit(absnf::cmd_verify(problem, config), pretty, out_path);
    }
  } catch (const absnf::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
