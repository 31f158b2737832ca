#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "absnf/commands.hpp"
#include "absnf/io.hpp"
#include "absnf/rng.hpp"

using namespace absnf;

namespace {

std::string data_path(const std::string& name) { return std::string(ABSNF_DATA_DIR) + "/" + name; }

struct CliResult {
  int exit_code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  std::string command = std::string(ABSNF_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buffer{};
  CliResult result;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (std::size_t read = std::fread(buffer.data(), 1, buffer.size(), pipe))
    result.output.append(buffer.data(), read);
  int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

}  // namespace

TEST_CASE("problem files load") {
  AbsNormalProblem sine = load_problem(data_path("sine.absnf"));
  CHECK(sine.name == "sine");
  CHECK(sine.dims.n == 1);
  CHECK(sine.dims.s == 1);
  REQUIRE(sine.c.size() == 1);
  CHECK(print_expr(sine.c.components[0]) == "-sin(x1)");
  REQUIRE(sine.f != nullptr);

  AbsNormalProblem constrained = load_problem(data_path("constrained.absnf"));
  CHECK(constrained.dims.p == 1);
  CHECK(constrained.dims.q == 1);
}

TEST_CASE("file errors cite line numbers") {
  auto expect_error = [](const std::string& text, const std::string& needle) {
    try {
      parse_problem_text(text, "t");
      FAIL_CHECK("expected a parse failure for:\n", text);
    } catch (const ParseError& err) {
      CHECK_MESSAGE(std::string(err.what()).find(needle) != std::string::npos,
                    "message was: ", err.what());
    } catch (const ValidationError& err) {
      CHECK_MESSAGE(std::string(err.what()).find(needle) != std::string::npos,
                    "message was: ", err.what());
    }
  };

  expect_error("n = 1\ns = 1\np = 0\nq = 0\nz1 = y1\n", "line 5");
  expect_error("n = 1\ns = 2\np = 0\nq = 0\nz1 = x1\n", "switching component 2 undefined");
  expect_error("n = 1\ns = 1\np = 0\nq = 0\nz1 = sin(x1\n", "line 5");
  expect_error("n = 1\nn = 2\ns = 0\np = 0\nq = 0\n", "declared twice");
  expect_error("z1 = x1\n", "must be declared before");
  expect_error("n = 1\ns = 0\np = 0\nq = 0\nw1 = x1\n", "unknown key");
  expect_error("n = 1\ns = 2\np = 0\nq = 0\nz2 = x1\n", "ascending order");
  expect_error("n = 1\ns = 0\np = 0\nq = 0\ng1 = x1\n", "exceeds the declared dimension");
  expect_error("n = 1\ns = 0\np = 1\nq = 0\n", "g1 undefined");
}

TEST_CASE("comments and blank lines are ignored") {
  AbsNormalProblem problem = parse_problem_text(
      "# heading\n\nname = demo\nn = 1\ns = 1\np = 0\nq = 0\n\nz1 = x1  # trailing\n", "t");
  CHECK(problem.name == "demo");
  CHECK(print_expr(problem.c.components[0]) == "x1");
}

TEST_CASE("problem text round-trips structurally") {
  for (const char* name : {"sine.absnf", "flat_kink.absnf", "abs_diff.absnf", "constrained.absnf"}) {
    AbsNormalProblem first = load_problem(data_path(name));
    AbsNormalProblem second = parse_problem_text(problem_to_text(first), first.name);
    CHECK(second.name == first.name);
    REQUIRE(second.c.size() == first.c.size());
    for (int i = 0; i < first.c.size(); ++i)
      CHECK(expr_equal(first.c.components[i], second.c.components[i]));
    REQUIRE(second.g.size() == first.g.size());
    for (std::size_t j = 0; j < first.g.size(); ++j) CHECK(expr_equal(first.g[j], second.g[j]));
  }
}

TEST_CASE("problem loader survives shuffled and truncated inputs") {
  std::string base = problem_to_text(random_problem(Dims{2, 3, 1, 1}, 13));
  Rng rng(14);
  for (int i = 0; i < 300; ++i) {
    std::string mutated = base;
    int cut = rng.uniform_int(0, static_cast<int>(mutated.size()));
    mutated.resize(static_cast<std::size_t>(cut));
    if (rng.uniform() < 0.5) mutated += "\nz9 = q*"; // trailing junk line
    try {
      AbsNormalProblem problem = parse_problem_text(mutated, "fuzz");
      CHECK(validate(problem).valid());
    } catch (const ParseError&) {
    } catch (const ValidationError&) {
    }
  }
}

TEST_CASE("point parsing understands pi forms") {
  CHECK(parse_point("3,-5", 2)(1) == -5.0);
  CHECK(parse_point("pi", 1)(0) == doctest::Approx(std::numbers::pi).epsilon(1e-15));
  CHECK(parse_point("-pi", 1)(0) == doctest::Approx(-std::numbers::pi).epsilon(1e-15));
  CHECK(parse_point("2*pi", 1)(0) == doctest::Approx(2 * std::numbers::pi).epsilon(1e-15));
  CHECK(parse_point("0.5*pi, 1", 2)(0) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));
  CHECK_THROWS_AS(parse_point("1,2", 3), Error);
  CHECK_THROWS_AS(parse_point("abc", 1), Error);
  CHECK_THROWS_AS(parse_point("1,,2", 3), Error);
}

TEST_CASE("reports serialize reals with 17 significant digits") {
  Report r;
  r["value"] = 0.1;
  r["third"] = 1.0 / 3.0;
  std::string dump = dump_report(r);
  CHECK(dump.find("0.10000000000000001") != std::string::npos);
  CHECK(dump.find("0.33333333333333331") != std::string::npos);
}

TEST_CASE("report serialization round-trips") {
  Report r;
  r["tool"] = "absnf";
  r["pi"] = std::numbers::pi;
  r["tiny"] = 5e-324;
  r["negative"] = -1.2345678901234567e-100;
  r["ints"] = {1, 2, 3};
  r["nested"] = {{"a", true}, {"b", nullptr}, {"c", "text with \"quotes\""}};
  std::string once = dump_report(r);
  Report parsed = Report::parse(once);
  CHECK(dump_report(parsed) == once);
  CHECK(parsed["pi"].get<double>() == std::numbers::pi);
  CHECK(parsed["tiny"].get<double>() == 5e-324);
}

TEST_CASE("command reports round-trip byte for byte") {
  AbsNormalProblem sine = load_problem(data_path("sine.absnf"));
  std::vector<std::string> dumps;
  dumps.push_back(dump_report(cmd_check(sine, parse_point("pi", 1), kDefaultTol)));
  Segment seg{Eigen::VectorXd::Constant(1, -4.0), Eigen::VectorXd::Constant(1, 4.0)};
  dumps.push_back(dump_report(cmd_kinks(sine, seg, 128, 1e-10, kDefaultTol)));
  GenericityConfig config;
  config.trials = 3;
  config.grid = 64;
  dumps.push_back(dump_report(cmd_perturb(sine, seg, std::nullopt, config)));
  for (const std::string& dump : dumps) CHECK(dump_report(Report::parse(dump)) == dump);
}

TEST_CASE("random problems are valid and reproducible") {
  Dims dims{2, 3, 1, 1};
  std::string first = cmd_random(dims, 7);
  std::string second = cmd_random(dims, 7);
  CHECK(first == second);
  CHECK(cmd_random(dims, 8) != first);

  AbsNormalProblem problem = parse_problem_text(first, "random");
  CHECK(problem.dims.n == 2);
  CHECK(problem.c.size() == 3);
  CHECK(problem.g.size() == 1);
  CHECK(problem.h.size() == 1);

  std::string smooth = cmd_random(Dims{2, 0, 0, 0}, 5);
  CHECK(smooth.find("z1") == std::string::npos);
  AbsNormalProblem smooth_problem = parse_problem_text(smooth, "smooth");
  CHECK(smooth_problem.c.size() == 0);
}

TEST_CASE("check command reports the worked verdicts") {
  AbsNormalProblem sine = load_problem(data_path("sine.absnf"));
  Report at_pi = cmd_check(sine, parse_point("pi", 1), kDefaultTol);
  CHECK(at_pi["feasible"] == true);
  CHECK(at_pi["likq"]["holds"] == true);
  CHECK(at_pi["transversality"]["holds"] == true);
  CHECK(at_pi["agree"] == true);
  CHECK(at_pi["alpha"] == Report::array({1}));

  AbsNormalProblem flat = load_problem(data_path("flat_kink.absnf"));
  Report at_zero = cmd_check(flat, parse_point("0", 1), kDefaultTol);
  CHECK(at_zero["likq"]["holds"] == false);
  CHECK(at_zero["transversality"]["holds"] == false);
  CHECK(at_zero["agree"] == true);

  Report at_one = cmd_check(flat, parse_point("1", 1), kDefaultTol);
  CHECK(at_one["alpha"].empty());
  CHECK(at_one["likq"]["holds"] == true);

  // infeasible points surface in-band
  AbsNormalProblem constrained = load_problem(data_path("constrained.absnf"));
  Report bad = cmd_check(constrained, parse_point("-3,3", 2), kDefaultTol);
  CHECK(bad["feasible"] == false);
  CHECK(std::string(bad["violation"]).find("g1") != std::string::npos);
}

TEST_CASE("verify command passes on the example problems") {
  for (const char* name : {"sine.absnf", "flat_kink.absnf", "abs_diff.absnf"}) {
    AbsNormalProblem problem = load_problem(data_path(name));
    VerifyConfig config;
    config.seed = 42;
    Report report = cmd_verify(problem, config);
    CHECK_MESSAGE(report["all_passed"] == true, "verify failed for ", name, ":\n",
                  dump_report(report));
  }
}

TEST_CASE("verify reports are worker-count independent") {
  AbsNormalProblem problem = load_problem(data_path("abs_diff.absnf"));
  VerifyConfig config;
  config.seed = 9;
  config.workers = 1;
  std::string serial = dump_report(cmd_verify(problem, config));
  config.workers = 4;
  std::string parallel = dump_report(cmd_verify(problem, config));
  CHECK(serial == parallel);
}

TEST_CASE("cli: check exits zero and emits parseable json") {
  CliResult result = run_cli("check " + data_path("sine.absnf") + " --point pi");
  CHECK(result.exit_code == 0);
  Report report = Report::parse(result.output);
  CHECK(report["likq"]["holds"] == true);

  // a failing LIKQ verdict is a finding, not an error
  CliResult finding = run_cli("check " + data_path("flat_kink.absnf") + " --point 0");
  CHECK(finding.exit_code == 0);
  CHECK(Report::parse(finding.output)["likq"]["holds"] == false);
}

TEST_CASE("cli: operational failures exit nonzero") {
  CHECK(run_cli("check /no/such/file --point 0").exit_code != 0);
  CHECK(run_cli("check " + data_path("sine.absnf") + " --point 1,2").exit_code != 0);
  CHECK(run_cli("scan " + data_path("sine.absnf") + " --from 0 --to 1 --grid 0").exit_code != 0);
  CHECK(run_cli("definitely-not-a-command").exit_code != 0);
  CHECK(run_cli("kinks " + data_path("sine.absnf") + " --from 1 --to 1").exit_code != 0);
}

TEST_CASE("cli: kinks finds the three sine kinks") {
  CliResult result =
      run_cli("kinks " + data_path("sine.absnf") + " --from -4 --to 4 --grid 200");
  REQUIRE(result.exit_code == 0);
  Report report = Report::parse(result.output);
  REQUIRE(report["kinks"].size() == 3);
  for (const auto& kink : report["kinks"]) CHECK(kink["likq"] == true);
}

TEST_CASE("cli: random output loads back") {
  CliResult result = run_cli("random --dims 2,2,1,0 --seed 77");
  REQUIRE(result.exit_code == 0);
  AbsNormalProblem problem = parse_problem_text(result.output, "random");
  CHECK(problem.dims.s == 2);

  CHECK(run_cli("random --dims 2,2").exit_code != 0);
}

TEST_CASE("cli: pretty rendering is human-oriented text") {
  CliResult result = run_cli("check " + data_path("sine.absnf") + " --point pi --pretty");
  REQUIRE(result.exit_code == 0);
  CHECK(result.output.find("likq") != std::string::npos);
  CHECK(result.output.find('{') == std::string::npos);
}

TEST_CASE("cli: scan profiles the sign pattern") {
  CliResult result = run_cli("scan " + data_path("sine.absnf") + " --from -4 --to 4 --grid 65");
  REQUIRE(result.exit_code == 0);
  Report report = Report::parse(result.output);
  CHECK(report["points"].size() == 65);
  CHECK(report["sign_changes"].size() >= 2);  // -sin(x) flips around -pi, 0, pi
}

TEST_CASE("cli: --out writes the report to a file") {
  std::string path = "/tmp/absnf_out_test.json";
  std::remove(path.c_str());
  CliResult result =
      run_cli("check " + data_path("sine.absnf") + " --point pi --out " + path);
  REQUIRE(result.exit_code == 0);
  CHECK(result.output.empty());
  std::ifstream file(path);
  REQUIRE(file.good());
  std::stringstream buffer;
  buffer << file.rdbuf();
  CHECK(Report::parse(buffer.str())["likq"]["holds"] == true);
  std::remove(path.c_str());
}

TEST_CASE("cli: perturb reports the experiment aggregate") {
  CliResult result = run_cli("perturb " + data_path("flat_kink.absnf") +
                             " --from -1 --to 1 --eps 1e-2 --trials 10 --grid 128 --seed 5");
  REQUIRE(result.exit_code == 0);
  Report report = Report::parse(result.output);
  CHECK(report["base"]["likq_everywhere"] == false);
  CHECK(report["fraction_likq_everywhere"].get<double>() == 1.0);
  CHECK(report["trial_results"].size() == 10);
}

TEST_CASE("verify passes on a random instance") {
  // seed 42 happens to draw a constant equality constraint, so the
  // agreement checks run over zero feasible points; the suite still has to
  // complete and pass
  AbsNormalProblem problem = random_problem(Dims{3, 2, 1, 1}, 42);
  VerifyConfig config;
  config.seed = 42;
  Report report = cmd_verify(problem, config);
  CHECK_MESSAGE(report["all_passed"] == true, dump_report(report));
}

TEST_CASE("verify exercises feasible points on a constrained problem") {
  AbsNormalProblem problem = load_problem(data_path("constrained.absnf"));
  VerifyConfig config;
  config.seed = 12;
  Report report = cmd_verify(problem, config);
  CHECK_MESSAGE(report["all_passed"] == true, dump_report(report));
  for (const auto& check : report["checks"])
    CHECK(check["points"].get<int>() > 0);
}
