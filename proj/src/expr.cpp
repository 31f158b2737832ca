#include "absnf/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace absnf {

ExprPtr make_constant(double value) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Constant;
  e->value = value;
  return e;
}

ExprPtr make_variable(VarFamily family, int index) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Variable;
  e->family = family;
  e->index = index;
  return e;
}

ExprPtr make_unary(ExprKind kind, ExprPtr child) {
  auto e = std::make_shared<Expr>();
  e->kind = kind;
  e->lhs = std::move(child);
  return e;
}

ExprPtr make_binary(ExprKind kind, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->kind = kind;
  e->lhs = std::move(lhs);
  e->rhs = std::move(rhs);
  return e;
}

ExprPtr make_int_pow(ExprPtr child, int exponent) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::IntPow;
  e->exponent = exponent;
  e->lhs = std::move(child);
  return e;
}

Point Point::zero(const Dims& dims) {
  Point p;
  p.x = Eigen::VectorXd::Zero(dims.n);
  p.y = Eigen::VectorXd::Zero(dims.s);
  p.z = Eigen::VectorXd::Zero(dims.s);
  return p;
}

Point Point::from_flat(const Eigen::VectorXd& w, const Dims& dims) {
  Point p;
  p.x = w.segment(0, dims.n);
  p.y = w.segment(dims.n, dims.s);
  p.z = w.segment(dims.n + dims.s, dims.s);
  return p;
}

Eigen::VectorXd Point::to_flat() const {
  Eigen::VectorXd w(x.size() + y.size() + z.size());
  w << x, y, z;
  return w;
}

// ---------------------------------------------------------------------------
// Parser: recursive descent over
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := ["-"] atom ["^" integer]
//   atom   := number | var | func "(" expr ")" | "(" expr ")"
// ---------------------------------------------------------------------------

namespace {

class Parser {
 public:
  Parser(const std::string& text, const Dims& dims) : text_(text), dims_(dims) {}

  ExprPtr run() {
    ExprPtr e = parse_expr_rule();
    skip_ws();
    if (pos_ < text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  const std::string& text_;
  Dims dims_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, static_cast<int>(pos_) + 1);
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool consume(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!consume(c)) fail(std::string("expected '") + c + "' " + what);
  }

  ExprPtr parse_expr_rule() {
    ExprPtr e = parse_term();
    for (;;) {
      if (consume('+')) {
        e = make_binary(ExprKind::Add, e, parse_term());
      } else if (consume('-')) {
        e = make_binary(ExprKind::Sub, e, parse_term());
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_term() {
    ExprPtr e = parse_factor();
    for (;;) {
      if (consume('*')) {
        e = make_binary(ExprKind::Mul, e, parse_factor());
      } else if (consume('/')) {
        e = make_binary(ExprKind::Div, e, parse_factor());
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_factor() {
    bool negate = consume('-');
    ExprPtr e = parse_atom();
    if (consume('^')) e = make_int_pow(e, parse_integer());
    if (negate) e = make_unary(ExprKind::Neg, e);
    return e;
  }

  int parse_integer() {
    skip_ws();
    std::size_t start = pos_;
    if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) ++pos_;
    std::size_t digits = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ == digits) {
      pos_ = start;
      fail("expected integer exponent");
    }
    int value = 0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (res.ec != std::errc{}) {
      pos_ = start;
      fail("exponent out of range");
    }
    return value;
  }

  ExprPtr parse_atom() {
    char c = peek();
    if (c == '(') {
      ++pos_;
      ExprPtr e = parse_expr_rule();
      expect(')', "to close parenthesis");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_name();
    fail("expected number, variable, function or parenthesis");
  }

  ExprPtr parse_number() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    if (pos_ == start || (pos_ == start + 1 && text_[start] == '.')) {
      pos_ = start;
      fail("malformed number");
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      std::size_t digits = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ == digits) pos_ = mark;  // "2e" — the 'e' is not part of the number
    }
    double value = std::strtod(text_.substr(start, pos_ - start).c_str(), nullptr);
    return make_constant(value);
  }

  ExprPtr parse_name() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::string name = text_.substr(start, pos_ - start);

    if (name == "sin" || name == "cos" || name == "exp" || name == "log" || name == "sqrt") {
      expect('(', ("after '" + name + "'").c_str());
      ExprPtr arg = parse_expr_rule();
      expect(')', "to close function argument");
      ExprKind kind = name == "sin"   ? ExprKind::Sin
                      : name == "cos" ? ExprKind::Cos
                      : name == "exp" ? ExprKind::Exp
                      : name == "log" ? ExprKind::Log
                                      : ExprKind::Sqrt;
      return make_unary(kind, arg);
    }

    if (name == "x" || name == "y" || name == "z") {
      std::size_t digits = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ == digits) fail("variable '" + name + "' needs a positive index");
      int index = 0;
      auto res = std::from_chars(text_.data() + digits, text_.data() + pos_, index);
      if (res.ec != std::errc{} || index < 1) {
        pos_ = start;
        fail("variable index must be a positive integer");
      }
      VarFamily family = name == "x" ? VarFamily::X : name == "y" ? VarFamily::Y : VarFamily::Z;
      int limit = family == VarFamily::X ? dims_.n : dims_.s;
      if (index > limit) {
        pos_ = start;
        fail("variable " + name + std::to_string(index) + " exceeds declared dimension " +
             std::to_string(limit));
      }
      return make_variable(family, index);
    }

    pos_ = start;
    fail("unknown identifier '" + name + "'");
  }
};

}  // namespace

ExprPtr parse_expr(const std::string& text, const Dims& dims) {
  return Parser(text, dims).run();
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

namespace {

// Precedence levels: Add/Sub 1, Mul/Div 2, Neg 3, IntPow 4, atoms 5.
// A negative constant prints with a leading '-', so it behaves like Neg.
int precedence(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Add:
    case ExprKind::Sub:
      return 1;
    case ExprKind::Mul:
    case ExprKind::Div:
      return 2;
    case ExprKind::Neg:
      return 3;
    case ExprKind::IntPow:
      return 4;
    case ExprKind::Constant:
      return e.value < 0.0 ? 3 : 5;
    default:
      return 5;
  }
}

bool is_atom(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Constant:
      return e.value >= 0.0;  // a leading '-' would re-parse as Neg
    case ExprKind::Variable:
    case ExprKind::Sin:
    case ExprKind::Cos:
    case ExprKind::Exp:
    case ExprKind::Log:
    case ExprKind::Sqrt:
      return true;
    default:
      return false;
  }
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void print_rec(const Expr& e, std::string& out);

void print_child(const Expr& child, bool parens, std::string& out) {
  if (parens) {
    out += '(';
    print_rec(child, out);
    out += ')';
  } else {
    print_rec(child, out);
  }
}

void print_rec(const Expr& e, std::string& out) {
  switch (e.kind) {
    case ExprKind::Constant:
      out += format_double(e.value);
      return;
    case ExprKind::Variable:
      out += e.family == VarFamily::X ? 'x' : e.family == VarFamily::Y ? 'y' : 'z';
      out += std::to_string(e.index);
      return;
    case ExprKind::Neg:
      out += '-';
      print_child(*e.lhs, precedence(*e.lhs) <= 3, out);
      return;
    case ExprKind::Sin:
    case ExprKind::Cos:
    case ExprKind::Exp:
    case ExprKind::Log:
    case ExprKind::Sqrt: {
      out += e.kind == ExprKind::Sin   ? "sin"
             : e.kind == ExprKind::Cos ? "cos"
             : e.kind == ExprKind::Exp ? "exp"
             : e.kind == ExprKind::Log ? "log"
                                       : "sqrt";
      out += '(';
      print_rec(*e.lhs, out);
      out += ')';
      return;
    }
    case ExprKind::IntPow:
      print_child(*e.lhs, !is_atom(*e.lhs), out);
      out += '^';
      out += std::to_string(e.exponent);
      return;
    case ExprKind::Add:
    case ExprKind::Sub:
    case ExprKind::Mul:
    case ExprKind::Div: {
      int prec = precedence(e);
      print_child(*e.lhs, precedence(*e.lhs) < prec, out);
      out += e.kind == ExprKind::Add   ? " + "
             : e.kind == ExprKind::Sub ? " - "
             : e.kind == ExprKind::Mul ? " * "
                                       : " / ";
      // Right operands at the same precedence need parentheses because the
      // grammar is left-associative; Neg (prec 3) re-parses fine on the right.
      print_child(*e.rhs, precedence(*e.rhs) <= prec && precedence(*e.rhs) != 3, out);
      return;
    }
  }
}

}  // namespace

std::string print_expr(const Expr& e) {
  std::string out;
  print_rec(e, out);
  return out;
}

bool expr_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprKind::Constant:
      return a.value == b.value;
    case ExprKind::Variable:
      return a.family == b.family && a.index == b.index;
    case ExprKind::IntPow:
      return a.exponent == b.exponent && expr_equal(*a.lhs, *b.lhs);
    case ExprKind::Neg:
    case ExprKind::Sin:
    case ExprKind::Cos:
    case ExprKind::Exp:
    case ExprKind::Log:
    case ExprKind::Sqrt:
      return expr_equal(*a.lhs, *b.lhs);
    default:
      return expr_equal(*a.lhs, *b.lhs) && expr_equal(*a.rhs, *b.rhs);
  }
}

void visit_variables(const Expr& e, const std::function<void(VarFamily, int)>& fn) {
  switch (e.kind) {
    case ExprKind::Constant:
      return;
    case ExprKind::Variable:
      fn(e.family, e.index);
      return;
    default:
      if (e.lhs) visit_variables(*e.lhs, fn);
      if (e.rhs) visit_variables(*e.rhs, fn);
  }
}

// ---------------------------------------------------------------------------
// Evaluation and forward-mode differentiation
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void domain_fail(const Expr& e, const std::string& what) {
  throw DomainError(what + " in '" + print_expr(e) + "'");
}

double var_value(const Expr& e, const Point& p) {
  int i = e.index - 1;
  switch (e.family) {
    case VarFamily::X:
      return p.x(i);
    case VarFamily::Y:
      return p.y(i);
    default:
      return p.z(i);
  }
}

// Exact integer power by repeated squaring; negative exponents go through
// the reciprocal and reject a zero base.
double int_pow_value(const Expr& e, double base) {
  int exp = e.exponent;
  if (exp < 0 && base == 0.0) domain_fail(e, "zero base with negative exponent");
  unsigned int k = exp < 0 ? static_cast<unsigned int>(-(static_cast<long long>(exp)))
                           : static_cast<unsigned int>(exp);
  double result = 1.0;
  double acc = base;
  while (k > 0) {
    if (k & 1u) result *= acc;
    acc *= acc;
    k >>= 1u;
  }
  return exp < 0 ? 1.0 / result : result;
}

}  // namespace

double eval_expr(const Expr& e, const Point& p) {
  switch (e.kind) {
    case ExprKind::Constant:
      return e.value;
    case ExprKind::Variable:
      return var_value(e, p);
    case ExprKind::Neg:
      return -eval_expr(*e.lhs, p);
    case ExprKind::Sin:
      return std::sin(eval_expr(*e.lhs, p));
    case ExprKind::Cos:
      return std::cos(eval_expr(*e.lhs, p));
    case ExprKind::Exp:
      return std::exp(eval_expr(*e.lhs, p));
    case ExprKind::Log: {
      double v = eval_expr(*e.lhs, p);
      if (v <= 0.0) domain_fail(e, "log of non-positive value");
      return std::log(v);
    }
    case ExprKind::Sqrt: {
      double v = eval_expr(*e.lhs, p);
      if (v < 0.0) domain_fail(e, "sqrt of negative value");
      return std::sqrt(v);
    }
    case ExprKind::Add:
      return eval_expr(*e.lhs, p) + eval_expr(*e.rhs, p);
    case ExprKind::Sub:
      return eval_expr(*e.lhs, p) - eval_expr(*e.rhs, p);
    case ExprKind::Mul:
      return eval_expr(*e.lhs, p) * eval_expr(*e.rhs, p);
    case ExprKind::Div: {
      double denom = eval_expr(*e.rhs, p);
      if (denom == 0.0) domain_fail(e, "division by zero");
      return eval_expr(*e.lhs, p) / denom;
    }
    case ExprKind::IntPow:
      return int_pow_value(e, eval_expr(*e.lhs, p));
  }
  throw Error("unreachable expression kind");
}

namespace {

DualValue eval_dir_rec(const Expr& e, const Point& p, const Eigen::VectorXd& dir, int n, int s) {
  switch (e.kind) {
    case ExprKind::Constant:
      return {e.value, 0.0};
    case ExprKind::Variable: {
      int offset = e.family == VarFamily::X   ? e.index - 1
                   : e.family == VarFamily::Y ? n + e.index - 1
                                              : n + s + e.index - 1;
      return {var_value(e, p), dir(offset)};
    }
    case ExprKind::Neg: {
      DualValue a = eval_dir_rec(*e.lhs, p, dir, n, s);
      return {-a.value, -a.deriv};
    }
    case ExprKind::Sin: {
      DualValue a = eval_dir_rec(*e.lhs, p, dir, n, s);
      return {std::sin(a.value), std::cos(a.value) * a.deriv};
    }
    case ExprKind::Cos: {
      DualValue a = eval_dir_rec(*e.lhs, p, dir, n, s);
      return {std::cos(a.value), -std::sin(a.value) * a.deriv};
    }
    case ExprKind::Exp: {
      DualValue a = eval_dir_rec(*e.lhs, p, dir, n, s);
      double v = std::exp(a.value);
      return {v, v * a.deriv};
    }
    case ExprKind::Log: {
      DualValue a = eval_dir_rec(*e.lhs, p, dir, n, s);
      if (a.value <= 0.0) domain_fail(e, "log of non-positive value");
      return {std::log(a.value), a.deriv / a.value};
    }
    case ExprKind::Sqrt: {
      DualValue a = eval_dir_rec(*e.lhs, p, dir, n, s);
      if (a.value < 0.0) domain_fail(e, "sqrt of negative value");
      double v = std::sqrt(a.value);
      if (a.deriv == 0.0) return {v, 0.0};
      if (a.value == 0.0) domain_fail(e, "sqrt not differentiable at zero");
      return {v, a.deriv / (2.0 * v)};
    }
    case ExprKind::Add: {
      DualValue a = eval_dir_rec(*e.lhs, p, dir, n, s);
      DualValue b = eval_dir_rec(*e.rhs, p, dir, n, s);
      return {a.value + b.value, a.deriv + b.deriv};
    }
    case ExprKind::Sub: {
      DualValue a = eval_dir_rec(*e.lhs, p, dir, n, s);
      DualValue b = eval_dir_rec(*e.rhs, p, dir, n, s);
      return {a.value - b.value, a.deriv - b.deriv};
    }
    case ExprKind::Mul: {
      DualValue a = eval_dir_rec(*e.lhs, p, dir, n, s);
      DualValue b = eval_dir_rec(*e.rhs, p, dir, n, s);
      return {a.value * b.value, a.deriv * b.value + a.value * b.deriv};
    }
    case ExprKind::Div: {
      DualValue a = eval_dir_rec(*e.lhs, p, dir, n, s);
      DualValue b = eval_dir_rec(*e.rhs, p, dir, n, s);
      if (b.value == 0.0) domain_fail(e, "division by zero");
      double v = a.value / b.value;
      return {v, (a.deriv - v * b.deriv) / b.value};
    }
    case ExprKind::IntPow: {
      DualValue a = eval_dir_rec(*e.lhs, p, dir, n, s);
      double v = int_pow_value(e, a.value);
      if (e.exponent == 0) return {v, 0.0};
      if (a.value == 0.0) {
        // d/du u^k at 0 is 0 for k >= 2 and 1 for k = 1.
        return {v, e.exponent == 1 ? a.deriv : 0.0};
      }
      double dv = static_cast<double>(e.exponent) * v / a.value * a.deriv;
      return {v, dv};
    }
  }
  throw Error("unreachable expression kind");
}

}  // namespace

DualValue eval_dir(const Expr& e, const Point& p, const Eigen::VectorXd& dir) {
  return eval_dir_rec(e, p, dir, static_cast<int>(p.x.size()), static_cast<int>(p.y.size()));
}

Eigen::VectorXd grad_expr(const Expr& e, const Point& p) {
  int d = static_cast<int>(p.x.size() + p.y.size() + p.z.size());
  Eigen::VectorXd grad(d);
  Eigen::VectorXd seed = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < d; ++i) {
    seed(i) = 1.0;
    grad(i) = eval_dir(e, p, seed).deriv;
    seed(i) = 0.0;
  }
  return grad;
}

Eigen::VectorXd fd_grad_oracle(const Expr& e, const Point& p, double h) {
  Dims dims{static_cast<int>(p.x.size()), static_cast<int>(p.y.size()), 0, 0};
  Eigen::VectorXd w = p.to_flat();
  int d = static_cast<int>(w.size());
  Eigen::VectorXd grad(d);
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd wp = w;
    Eigen::VectorXd wm = w;
    wp(i) += h;
    wm(i) -= h;
    double fp = eval_expr(e, Point::from_flat(wp, dims));
    double fm = eval_expr(e, Point::from_flat(wm, dims));
    grad(i) = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace absnf
