#include "absnf/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>

#include "absnf/rng.hpp"

namespace absnf {

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

namespace {

std::string format_real_17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_json(const Report& j, std::string& out, int depth) {
  const std::string pad(2 * static_cast<std::size_t>(depth), ' ');
  const std::string pad_in(2 * static_cast<std::size_t>(depth + 1), ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::null:
      out += "null";
      return;
    case nlohmann::json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      return;
    case nlohmann::json::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      return;
    case nlohmann::json::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      return;
    case nlohmann::json::value_t::number_float: {
      double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      if (v == 0.0) {
        // "-0" would re-parse as the integer 0 and drop the sign bit
        out += std::signbit(v) ? "-0.0" : "0";
        return;
      }
      out += format_real_17(v);
      return;
    }
    case nlohmann::json::value_t::string:
      out += nlohmann::json(j.get<std::string>()).dump();
      return;
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        out += pad_in;
        write_json(j[i], out, depth + 1);
        if (i + 1 < j.size()) out += ',';
        out += '\n';
      }
      out += pad + "]";
      return;
    }
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      std::size_t i = 0;
      for (const auto& item : j.items()) {
        out += pad_in + nlohmann::json(item.key()).dump() + ": ";
        write_json(item.value(), out, depth + 1);
        if (++i < j.size()) out += ',';
        out += '\n';
      }
      out += pad + "}";
      return;
    }
    default:
      out += "null";
      return;
  }
}

}  // namespace

std::string dump_report(const Report& report) {
  std::string out;
  write_json(report, out, 0);
  out += '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Pretty rendering
// ---------------------------------------------------------------------------

namespace {

std::string pretty_scalar(const Report& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::null:
      return "-";
    case nlohmann::json::value_t::boolean:
      return j.get<bool>() ? "yes" : "no";
    case nlohmann::json::value_t::number_float: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6g", j.get<double>());
      return buf;
    }
    case nlohmann::json::value_t::number_integer:
      return std::to_string(j.get<std::int64_t>());
    case nlohmann::json::value_t::number_unsigned:
      return std::to_string(j.get<std::uint64_t>());
    case nlohmann::json::value_t::string:
      return j.get<std::string>();
    default:
      return "";
  }
}

bool is_scalar(const Report& j) { return !j.is_array() && !j.is_object(); }

bool is_scalar_array(const Report& j) {
  if (!j.is_array()) return false;
  for (const auto& item : j)
    if (!is_scalar(item)) return false;
  return true;
}

std::string inline_array(const Report& j) {
  std::string out = "[";
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (i) out += ", ";
    out += pretty_scalar(j[i]);
  }
  return out + "]";
}

void render_table(const Report& rows, const std::string& title, std::string& out) {
  std::vector<std::string> columns;
  for (const auto& row : rows)
    for (const auto& item : row.items())
      if (is_scalar(item.value()) || is_scalar_array(item.value()))
        if (std::find(columns.begin(), columns.end(), item.key()) == columns.end())
          columns.push_back(item.key());

  std::vector<std::vector<std::string>> cells;
  cells.push_back(columns);
  for (const auto& row : rows) {
    std::vector<std::string> line;
    for (const std::string& col : columns) {
      if (!row.contains(col))
        line.push_back("");
      else if (is_scalar(row[col]))
        line.push_back(pretty_scalar(row[col]));
      else
        line.push_back(inline_array(row[col]));
    }
    cells.push_back(std::move(line));
  }

  std::vector<std::size_t> widths(columns.size(), 0);
  for (const auto& line : cells)
    for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], line[c].size());

  out += title + " (" + std::to_string(rows.size()) + ")\n";
  for (std::size_t r = 0; r < cells.size(); ++r) {
    out += "  ";
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      out += cells[r][c];
      out += std::string(widths[c] - cells[r][c].size() + 2, ' ');
    }
    out += '\n';
    if (r == 0) {
      std::size_t total = 2;
      for (std::size_t w : widths) total += w + 2;
      out += "  " + std::string(total - 2, '-') + '\n';
    }
  }
}

void render_value(const std::string& key, const Report& value, int depth, std::string& out) {
  std::string indent(2 * static_cast<std::size_t>(depth), ' ');
  if (is_scalar(value)) {
    out += indent + key + ": " + pretty_scalar(value) + '\n';
  } else if (is_scalar_array(value)) {
    out += indent + key + ": " + inline_array(value) + '\n';
  } else if (value.is_array()) {
    bool all_objects = !value.empty();
    for (const auto& item : value)
      if (!item.is_object()) all_objects = false;
    if (all_objects) {
      out += '\n';
      render_table(value, indent + key, out);
    } else {
      out += indent + key + ":\n";
      for (const auto& item : value) render_value("-", item, depth + 1, out);
    }
  } else {
    out += indent + key + ":\n";
    for (const auto& item : value.items()) render_value(item.key(), item.value(), depth + 1, out);
  }
}

}  // namespace

std::string render_pretty(const Report& report) {
  std::string out;
  for (const auto& item : report.items()) render_value(item.key(), item.value(), 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Problem files
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& text) {
  std::size_t begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  std::size_t end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

[[noreturn]] void line_fail(int line, const std::string& message) {
  throw ParseError("line " + std::to_string(line) + ": " + message, 0, line);
}

int parse_dim(const std::string& value, int line) {
  try {
    std::size_t consumed = 0;
    int v = std::stoi(value, &consumed);
    if (consumed != value.size() || v < 0) line_fail(line, "expected a non-negative integer");
    return v;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    line_fail(line, "expected a non-negative integer");
  }
}

// Key of the form <letter><positive index>, e.g. "z2".
std::optional<std::pair<char, int>> indexed_key(const std::string& key) {
  if (key.size() < 2) return std::nullopt;
  char letter = key[0];
  if (letter != 'z' && letter != 'g' && letter != 'h') return std::nullopt;
  for (std::size_t i = 1; i < key.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(key[i]))) return std::nullopt;
  int index = std::stoi(key.substr(1));
  if (index < 1) return std::nullopt;
  return std::make_pair(letter, index);
}

}  // namespace

AbsNormalProblem parse_problem_text(const std::string& text, const std::string& fallback_name) {
  AbsNormalProblem problem;
  problem.name = fallback_name;

  std::optional<int> n, s, p, q;
  bool dims_fixed = false;
  std::vector<ExprPtr> g_rows, h_rows;
  std::vector<int> z_lines;  // line number per switching component

  auto require_dims = [&](int line) {
    if (dims_fixed) return;
    if (!n || !s || !p || !q)
      line_fail(line, "dimensions n, s, p, q must be declared before any expression");
    problem.dims = Dims{*n, *s, *p, *q};
    g_rows.assign(static_cast<std::size_t>(*p), nullptr);
    h_rows.assign(static_cast<std::size_t>(*q), nullptr);
    dims_fixed = true;
  };

  auto parse_line_expr = [&](const std::string& value, int line) -> ExprPtr {
    try {
      return parse_expr(value, problem.dims);
    } catch (const ParseError& err) {
      line_fail(line, std::string(err.what()) + " (column " + std::to_string(err.position) + ")");
    }
  };

  std::istringstream stream(text);
  std::string raw;
  int line = 0;
  while (std::getline(stream, raw)) {
    ++line;
    std::string content = raw;
    if (auto hash = content.find('#'); hash != std::string::npos) content.resize(hash);
    content = trim(content);
    if (content.empty()) continue;

    std::size_t eq = content.find('=');
    if (eq == std::string::npos) line_fail(line, "expected 'key = value'");
    std::string key = trim(content.substr(0, eq));
    std::string value = trim(content.substr(eq + 1));
    if (key.empty()) line_fail(line, "missing key before '='");
    if (value.empty()) line_fail(line, "missing value after '='");

    if (key == "name") {
      problem.name = value;
    } else if (key == "n" || key == "s" || key == "p" || key == "q") {
      if (dims_fixed) line_fail(line, "dimension '" + key + "' declared after expressions");
      auto& slot = key == "n" ? n : key == "s" ? s : key == "p" ? p : q;
      if (slot) line_fail(line, "dimension '" + key + "' declared twice");
      slot = parse_dim(value, line);
    } else if (key == "f") {
      require_dims(line);
      if (problem.f) line_fail(line, "objective 'f' declared twice");
      problem.f = parse_line_expr(value, line);
    } else if (auto indexed = indexed_key(key)) {
      require_dims(line);
      auto [letter, index] = *indexed;
      if (letter == 'z') {
        if (index != static_cast<int>(problem.c.components.size()) + 1)
          line_fail(line, "switching lines must appear in ascending order starting at z1; got z" +
                              std::to_string(index));
        if (index > problem.dims.s)
          line_fail(line, "z" + std::to_string(index) + " exceeds the declared s = " +
                              std::to_string(problem.dims.s));
        ExprPtr expr = parse_line_expr(value, line);
        // Strict triangularity is checked right here so the error can cite
        // the offending line.
        const int component = index;
        std::vector<std::string> violations;
        visit_variables(*expr, [&](VarFamily family, int vindex) {
          if (family == VarFamily::X) return;
          if (vindex >= component) {
            char vletter = family == VarFamily::Y ? 'y' : 'z';
            violations.push_back("switching component " + std::to_string(component) +
                                 " references " + vletter + std::to_string(vindex) +
                                 " (violates strict triangularity)");
          }
        });
        if (!violations.empty()) line_fail(line, violations.front());
        problem.c.components.push_back(std::move(expr));
        z_lines.push_back(line);
      } else {
        auto& rows = letter == 'g' ? g_rows : h_rows;
        int limit = letter == 'g' ? problem.dims.p : problem.dims.q;
        if (index > limit)
          line_fail(line, std::string(1, letter) + std::to_string(index) +
                              " exceeds the declared dimension " + std::to_string(limit));
        if (rows[static_cast<std::size_t>(index - 1)])
          line_fail(line, std::string(1, letter) + std::to_string(index) + " declared twice");
        rows[static_cast<std::size_t>(index - 1)] = parse_line_expr(value, line);
      }
    } else {
      line_fail(line, "unknown key '" + key + "'");
    }
  }

  if (!dims_fixed) {
    if (!n || !s || !p || !q)
      throw ParseError("problem file must declare n, s, p and q", 0, line);
    problem.dims = Dims{*n, *s, *p, *q};
    g_rows.assign(static_cast<std::size_t>(*p), nullptr);
    h_rows.assign(static_cast<std::size_t>(*q), nullptr);
  }

  if (static_cast<int>(problem.c.components.size()) != problem.dims.s)
    throw ParseError("switching component " +
                         std::to_string(problem.c.components.size() + 1) + " undefined",
                     0, line);
  for (std::size_t j = 0; j < g_rows.size(); ++j)
    if (!g_rows[j])
      throw ParseError("inequality constraint g" + std::to_string(j + 1) + " undefined", 0, line);
  for (std::size_t j = 0; j < h_rows.size(); ++j)
    if (!h_rows[j])
      throw ParseError("equality constraint h" + std::to_string(j + 1) + " undefined", 0, line);
  problem.g = std::move(g_rows);
  problem.h = std::move(h_rows);

  ValidationReport report = validate(problem);
  if (!report.valid()) {
    std::string message = "problem failed validation:";
    for (const std::string& violation : report.violations) message += "\n  " + violation;
    throw ValidationError(message);
  }
  return problem;
}

AbsNormalProblem load_problem(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw Error("cannot open problem file '" + path + "'");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  std::string stem = path;
  if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
  if (auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
  return parse_problem_text(buffer.str(), stem);
}

std::string problem_to_text(const AbsNormalProblem& problem) {
  std::ostringstream out;
  out << "name = " << problem.name << "\n";
  out << "n = " << problem.dims.n << "\n";
  out << "s = " << problem.dims.s << "\n";
  out << "p = " << problem.dims.p << "\n";
  out << "q = " << problem.dims.q << "\n";
  for (int i = 0; i < problem.c.size(); ++i)
    out << "z" << (i + 1) << " = " << print_expr(problem.c.components[static_cast<std::size_t>(i)])
        << "\n";
  for (std::size_t j = 0; j < problem.g.size(); ++j)
    out << "g" << (j + 1) << " = " << print_expr(problem.g[j]) << "\n";
  for (std::size_t j = 0; j < problem.h.size(); ++j)
    out << "h" << (j + 1) << " = " << print_expr(problem.h[j]) << "\n";
  if (problem.f) out << "f = " << print_expr(problem.f) << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Points
// ---------------------------------------------------------------------------

namespace {

double parse_coordinate(const std::string& token) {
  std::string body = trim(token);
  if (body.empty()) throw Error("empty coordinate");

  double scale = 1.0;
  bool is_pi = false;
  if (body.size() >= 2 && body.compare(body.size() - 2, 2, "pi") == 0) {
    is_pi = true;
    body.resize(body.size() - 2);
    body = trim(body);
    if (!body.empty() && body.back() == '*') {
      body.pop_back();
      body = trim(body);
    }
    if (body.empty())
      scale = 1.0;
    else if (body == "-")
      scale = -1.0;
    else if (body == "+")
      scale = 1.0;
    else {
      char* end = nullptr;
      scale = std::strtod(body.c_str(), &end);
      if (end != body.c_str() + body.size())
        throw Error("malformed coordinate '" + trim(token) + "'");
    }
  }
  if (is_pi) return scale * std::numbers::pi;

  char* end = nullptr;
  double value = std::strtod(body.c_str(), &end);
  if (end != body.c_str() + body.size())
    throw Error("malformed coordinate '" + trim(token) + "'");
  return value;
}

}  // namespace

Eigen::VectorXd parse_point(const std::string& text, int expected_length) {
  std::vector<double> values;
  std::string token;
  std::istringstream stream(text);
  while (std::getline(stream, token, ',')) values.push_back(parse_coordinate(token));
  if (expected_length >= 0 && static_cast<int>(values.size()) != expected_length)
    throw Error("expected " + std::to_string(expected_length) + " coordinates, got " +
                std::to_string(values.size()));
  Eigen::VectorXd point(static_cast<int>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) point(static_cast<int>(i)) = values[i];
  return point;
}

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

namespace {

struct VarRef {
  VarFamily family;
  int index;
};

ExprPtr random_expr(Rng& rng, int depth, const std::vector<VarRef>& vars) {
  int roll = depth <= 0 ? 8 + rng.uniform_int(0, 1) : rng.uniform_int(0, 9);
  switch (roll) {
    case 0:
    case 1:
      return make_binary(ExprKind::Add, random_expr(rng, depth - 1, vars),
                         random_expr(rng, depth - 1, vars));
    case 2:
    case 3:
      return make_binary(ExprKind::Sub, random_expr(rng, depth - 1, vars),
                         random_expr(rng, depth - 1, vars));
    case 4:
    case 5:
      return make_binary(ExprKind::Mul, random_expr(rng, depth - 1, vars),
                         random_expr(rng, depth - 1, vars));
    case 6:
      return make_unary(ExprKind::Sin, random_expr(rng, depth - 1, vars));
    case 7:
      return make_unary(ExprKind::Cos, random_expr(rng, depth - 1, vars));
    case 8:
      return make_constant(rng.uniform(-2.0, 2.0));
    default: {
      if (vars.empty()) return make_constant(rng.uniform(-2.0, 2.0));
      const VarRef& var = vars[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<int>(vars.size()) - 1))];
      return make_variable(var.family, var.index);
    }
  }
}

}  // namespace

AbsNormalProblem random_problem(const Dims& dims, std::uint64_t seed) {
  Rng rng(seed);
  AbsNormalProblem problem;
  problem.dims = dims;
  problem.name = "random-" + std::to_string(dims.n) + "-" + std::to_string(dims.s) + "-" +
                 std::to_string(dims.p) + "-" + std::to_string(dims.q) + "-seed" +
                 std::to_string(seed);

  std::vector<VarRef> vars;
  for (int j = 1; j <= dims.n; ++j) vars.push_back({VarFamily::X, j});
  for (int i = 1; i <= dims.s; ++i) {
    // Component i admits y_j, z_j only for j < i.
    problem.c.components.push_back(random_expr(rng, 3, vars));
    vars.push_back({VarFamily::Y, i});
    vars.push_back({VarFamily::Z, i});
  }
  for (int j = 0; j < dims.p; ++j) problem.g.push_back(random_expr(rng, 3, vars));
  for (int j = 0; j < dims.q; ++j) problem.h.push_back(random_expr(rng, 3, vars));
  problem.f = random_expr(rng, 3, vars);
  return problem;
}

}  // namespace absnf
