#include <doctest.h>

#include <cmath>
#include <numbers>

#include "absnf/expr.hpp"
#include "test_support.hpp"

using namespace absnf;

namespace {

Point point1(double x) {
  Point p;
  p.x = Eigen::VectorXd::Constant(1, x);
  p.y = Eigen::VectorXd(0);
  p.z = Eigen::VectorXd(0);
  return p;
}

}  // namespace

TEST_CASE("parse builds the expected trees") {
  Dims dims{1, 2, 0, 0};

  ExprPtr e = parse_expr("-sin(x1)", dims);
  REQUIRE(e->kind == ExprKind::Neg);
  REQUIRE(e->lhs->kind == ExprKind::Sin);
  REQUIRE(e->lhs->lhs->kind == ExprKind::Variable);
  CHECK(e->lhs->lhs->family == VarFamily::X);
  CHECK(e->lhs->lhs->index == 1);

  ExprPtr sub = parse_expr("y1 - y2", dims);
  REQUIRE(sub->kind == ExprKind::Sub);
  CHECK(sub->lhs->family == VarFamily::Y);
  CHECK(sub->lhs->index == 1);
  CHECK(sub->rhs->index == 2);

  ExprPtr pow = parse_expr("x1^3", dims);
  REQUIRE(pow->kind == ExprKind::IntPow);
  CHECK(pow->exponent == 3);

  ExprPtr neg_pow = parse_expr("-x1^2", dims);
  REQUIRE(neg_pow->kind == ExprKind::Neg);
  CHECK(neg_pow->lhs->kind == ExprKind::IntPow);

  ExprPtr nested = parse_expr("2.5e-1 * (x1 + z2) / cos(y1)", dims);
  CHECK(nested->kind == ExprKind::Div);
}

TEST_CASE("parse reports positions and range violations") {
  Dims dims{1, 1, 0, 0};

  CHECK_THROWS_AS(parse_expr("sin(x1", dims), ParseError);
  try {
    parse_expr("sin(x1", dims);
  } catch (const ParseError& err) {
    CHECK(err.position == 7);
  }

  CHECK_THROWS_AS(parse_expr("x2", dims), ParseError);
  CHECK_THROWS_AS(parse_expr("y2 + 1", dims), ParseError);
  CHECK_THROWS_AS(parse_expr("x0", dims), ParseError);
  CHECK_THROWS_AS(parse_expr("x", dims), ParseError);
  CHECK_THROWS_AS(parse_expr("foo(x1)", dims), ParseError);
  CHECK_THROWS_AS(parse_expr("x1 +", dims), ParseError);
  CHECK_THROWS_AS(parse_expr("x1^2.5", dims), ParseError);
  CHECK_THROWS_AS(parse_expr("", dims), ParseError);
  CHECK_THROWS_AS(parse_expr("--x1", dims), ParseError);
}

TEST_CASE("evaluation follows real arithmetic") {
  Dims dims{1, 0, 0, 0};
  CHECK(eval_expr(parse_expr("-sin(x1)", dims), point1(0.0)) == 0.0);
  CHECK(eval_expr(parse_expr("sin(x1) - x1", dims), point1(0.0)) == 0.0);

  Dims dims2{0, 2, 0, 0};
  Point p;
  p.x = Eigen::VectorXd(0);
  p.y = Eigen::VectorXd(2);
  p.y << 3.0, 5.0;
  p.z = Eigen::VectorXd::Zero(2);
  CHECK(eval_expr(parse_expr("y1 - y2", dims2), p) == -2.0);

  CHECK(eval_expr(parse_expr("x1^0", dims), point1(0.0)) == 1.0);
  CHECK(eval_expr(parse_expr("x1^3", dims), point1(2.0)) == 8.0);
  CHECK(eval_expr(parse_expr("x1^-2", dims), point1(2.0)) == 0.25);
}

TEST_CASE("domain errors are typed and cite the node") {
  Dims dims{1, 0, 0, 0};
  CHECK_THROWS_AS(eval_expr(parse_expr("log(x1)", dims), point1(-1.0)), DomainError);
  CHECK_THROWS_AS(eval_expr(parse_expr("sqrt(x1)", dims), point1(-1.0)), DomainError);
  CHECK_THROWS_AS(eval_expr(parse_expr("1/x1", dims), point1(0.0)), DomainError);
  CHECK_THROWS_AS(eval_expr(parse_expr("x1^-1", dims), point1(0.0)), DomainError);
  try {
    eval_expr(parse_expr("log(x1)", dims), point1(-1.0));
  } catch (const DomainError& err) {
    CHECK(std::string(err.what()).find("log(x1)") != std::string::npos);
  }
}

TEST_CASE("gradients at the worked points") {
  Dims dims{1, 1, 0, 0};
  Point p = Point::zero(dims);

  Eigen::VectorXd g = grad_expr(parse_expr("-sin(x1)", dims), p);
  REQUIRE(g.size() == 3);
  CHECK(g(0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(g(1) == 0.0);
  CHECK(g(2) == 0.0);

  Eigen::VectorXd g2 = grad_expr(parse_expr("sin(x1) - x1", dims), p);
  CHECK(g2(0) == 0.0);
  CHECK(g2(1) == 0.0);
  CHECK(g2(2) == 0.0);

  Dims dims2{0, 2, 0, 0};
  Point p2;
  p2.x = Eigen::VectorXd(0);
  p2.y = Eigen::VectorXd(2);
  p2.y << 2.0, 0.0;
  p2.z = Eigen::VectorXd(2);
  p2.z << 0.0, 3.0;
  Eigen::VectorXd g3 = grad_expr(parse_expr("y1*z2", dims2), p2);
  REQUIRE(g3.size() == 4);
  CHECK(g3(0) == 3.0);  // d/dy1
  CHECK(g3(1) == 0.0);
  CHECK(g3(2) == 0.0);
  CHECK(g3(3) == 2.0);  // d/dz2
}

TEST_CASE("central-difference oracle on closed forms") {
  Dims dims{1, 1, 0, 0};
  Point p = Point::zero(dims);

  Eigen::VectorXd fd = fd_grad_oracle(parse_expr("-sin(x1)", dims), p, 1e-6);
  CHECK(std::abs(fd(0) - (-1.0)) <= 1e-9);
  CHECK(fd(1) == 0.0);
  CHECK(fd(2) == 0.0);

  Eigen::VectorXd fdc = fd_grad_oracle(parse_expr("7", dims), p, 1e-6);
  CHECK(fdc.cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd fdq = fd_grad_oracle(parse_expr("x1*x1", dims), point1(3.0), 1e-6);
  CHECK(std::abs(fdq(0) - 6.0) <= 1e-9);
}

TEST_CASE("print-parse round trip is structurally idempotent") {
  Dims dims{2, 2, 0, 0};
  const char* samples[] = {
      "-sin(x1)",
      "x1 - x2 - y1",
      "x1 - (x2 - y1)",
      "x1 * (x2 + 1) / (y1 - 2)",
      "-(x1 + x2)^2",
      "2 * -x1",
      "x1 - -x2",
      "sin(cos(exp(x1))) + sqrt(x2 + 4) * log(y2 + 5)",
      "x1^-3 + 0.25e2",
      "(-x1)^2",
  };
  for (const char* text : samples) {
    ExprPtr first = parse_expr(text, dims);
    ExprPtr second = parse_expr(print_expr(first), dims);
    CHECK_MESSAGE(expr_equal(first, second), "round trip failed for: ", text);
  }
}

TEST_CASE("round trip holds for random trees") {
  Dims dims{3, 2, 0, 0};
  Rng rng(2024);
  for (int i = 0; i < 300; ++i) {
    ExprPtr e = testing::random_deep_expr(rng, 5, dims);
    std::string printed = print_expr(e);
    ExprPtr reparsed = parse_expr(printed, dims);
    // Programmatic trees may contain negative constants, which print into
    // Neg(constant); printing again must reach a fixed point.
    CHECK(print_expr(reparsed) == printed);
  }
}

TEST_CASE("forward-mode gradients match the oracle on random expressions") {
  Dims dims{2, 2, 0, 0};
  Rng rng(7);
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    ExprPtr e = testing::random_deep_expr(rng, 5, dims);
    for (int k = 0; k < 10; ++k) {
      auto p = testing::draw_well_defined_point(rng, *e, dims);
      if (!p) break;
      Eigen::VectorXd ad;
      try {
        ad = grad_expr(e, *p);
      } catch (const DomainError&) {
        continue;  // derivative undefined even where the value exists
      }
      if (!ad.allFinite() || ad.cwiseAbs().maxCoeff() > 1e6) continue;
      Eigen::VectorXd fd = fd_grad_oracle(e, *p);
      double tol = 1e-6 * (1.0 + ad.cwiseAbs().maxCoeff());
      // Step-halving consistency guards against points where the central
      // difference itself has not converged; a wrong AD value would agree
      // with neither step size.
      Eigen::VectorXd fd_half = fd_grad_oracle(e, *p, 0.5e-6);
      if ((fd - fd_half).cwiseAbs().maxCoeff() > 0.2 * tol) continue;
      CHECK_MESSAGE((ad - fd).cwiseAbs().maxCoeff() <= tol, "mismatch for ", print_expr(e));
      ++checked;
    }
  }
  CHECK(checked > 2000);
}

TEST_CASE("parser rejects garbage without crashing") {
  Dims dims{2, 2, 0, 0};
  Rng rng(99);
  const std::string alphabet = "xyz123+-*/^().seincoqrtlg ";
  for (int i = 0; i < 2000; ++i) {
    std::string text;
    int len = rng.uniform_int(0, 24);
    for (int k = 0; k < len; ++k)
      text += alphabet[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<int>(alphabet.size()) - 1))];
    try {
      ExprPtr e = parse_expr(text, dims);
      // whatever parsed must round-trip
      CHECK(expr_equal(e, parse_expr(print_expr(e), dims)));
    } catch (const ParseError& err) {
      CHECK(err.position >= 1);
      CHECK(err.position <= static_cast<int>(text.size()) + 1);
    }
  }
}

TEST_CASE("evaluation is deterministic") {
  Dims dims{2, 1, 0, 0};
  ExprPtr e = parse_expr("sin(x1) * exp(x2) - y1 / (z1 + 3)", dims);
  Point p;
  p.x = Eigen::VectorXd(2);
  p.x << 0.3, -1.2;
  p.y = Eigen::VectorXd::Constant(1, 0.7);
  p.z = Eigen::VectorXd::Constant(1, 0.1);
  double first = eval_expr(e, p);
  for (int i = 0; i < 10; ++i) CHECK(eval_expr(e, p) == first);
}

TEST_CASE("dual evaluation differentiates along a direction") {
  Dims dims{2, 0, 0, 0};
  ExprPtr e = parse_expr("x1 * x2", dims);
  Point p;
  p.x = Eigen::VectorXd(2);
  p.x << 3.0, 5.0;
  p.y = Eigen::VectorXd(0);
  p.z = Eigen::VectorXd(0);
  Eigen::VectorXd dir(2);
  dir << 1.0, 1.0;
  DualValue d = eval_dir(e, p, dir);
  CHECK(d.value == 15.0);
  CHECK(d.deriv == 8.0);  // x2 + x1
}
