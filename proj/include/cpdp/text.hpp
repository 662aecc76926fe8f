#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cpdp {

// Small text helpers shared by the CSV readers and writers.

std::string_view trim(std::string_view s);

std::vector<std::string> split_csv_line(std::string_view line);

/// Parses a finite double using the whole token; nullopt otherwise.
std::optional<double> parse_double(std::string_view token);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

}  // namespace cpdp
