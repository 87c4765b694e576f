#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace thermo::text {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
/// Splits on runs of spaces/tabs.
std::vector<std::string_view> split_ws(std::string_view s);

/// Whole-string decimal parse; nullopt on junk, trailing characters or empty input.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

}  // namespace thermo::text
