#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

// Small helpers shared by the line-oriented file formats.
namespace semgraph::text {

std::vector<std::string_view> split_ws(std::string_view line);

/// Splits on commas and whitespace ("1, 2" and "1 2" both give two fields).
std::vector<std::string_view> split_fields(std::string_view line);

/// Whole-token parse; leading '+' is accepted for reals.
template <typename T>
bool parse_number(std::string_view token, T& out) {
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    if (token.empty()) return false;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
    return ec == std::errc{} && ptr == token.data() + token.size();
}

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

std::string trim(std::string_view s);

}  // namespace semgraph::text
