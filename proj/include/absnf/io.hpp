#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>

#include "absnf/problem.hpp"

namespace absnf {

/// Reports are ordered JSON trees; insertion order is preserved so that
/// serialization is reproducible byte for byte.
using Report = nlohmann::ordered_json;

/// Serializes a report. Every floating-point number is written with 17
/// significant digits, enough to round-trip IEEE doubles exactly.
std::string dump_report(const Report& report);

/// Renders selected report fields as human-readable text tables.
std::string render_pretty(const Report& report);

/// Parses the line-oriented problem file format:
///   name = <string>
///   n = <int> ; s = <int> ; p = <int> ; q = <int>  (one per line, before
///   any expression)
///   z<i> = <expr>   (i = 1..s, ascending)
///   g<j> = <expr>   (j = 1..p)
///   h<j> = <expr>   (j = 1..q)
///   f = <expr>      (optional)
/// '#' starts a comment, blank lines are ignored. Errors cite line numbers.
AbsNormalProblem parse_problem_text(const std::string& text, const std::string& fallback_name);

/// Loads and validates a problem file from disk.
AbsNormalProblem load_problem(const std::string& path);

/// Writes a problem back into the file format.
std::string problem_to_text(const AbsNormalProblem& problem);

/// Parses a comma-separated point such as "3,-5". Coordinates accept plain
/// decimals, "pi", "-pi" and scaled forms like "2*pi" or "0.5*pi".
Eigen::VectorXd parse_point(const std::string& text, int expected_length);

/// Generates a random valid problem: every switching component is a random
/// depth-<=3 expression over its admissible variables built from
/// {+, -, *, sin, cos} and constants in [-2, 2]; constraint rows and the
/// objective range over all variables. Deterministic in the seed.
AbsNormalProblem random_problem(const Dims& dims, std::uint64_t seed);

}  // namespace absnf
