///
/// \file cli.hpp
///
/// Command-line front end: `spectrum`, `ep`, `sweep`, `simulate`, `extract`.
/// Exit codes are 0 on success, 1 when a warning was raised, 2 on invalid
/// input.
///
#ifndef PTDIMER_TOOLS_CLI_HPP
#define PTDIMER_TOOLS_CLI_HPP

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ptdimer::cli
{

inline constexpr int kExitOk = 0;
inline constexpr int kExitWarning = 1;
inline constexpr int kExitInvalid = 2;

/// Parses "7.91mH", "10.14n", "1kΩ", "350", "2.5e-3". SI prefixes p, n, u/µ,
/// m, k, M, G are case-sensitive; a trailing unit symbol (H, F, Ω, Ohm, ohm,
/// s, V, A) is accepted and ignored.
double parse_quantity(std::string_view text);

/// Flat "section.key" -> value view of a JSON config file. Numbers are
/// rendered at full precision, arrays are joined with commas.
std::map<std::string, std::string> flatten_config(std::string_view json_text);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ptdimer::cli

#endif /* PTDIMER_TOOLS_CLI_HPP */
