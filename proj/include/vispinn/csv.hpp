// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace vispinn {

inline constexpr std::string_view kVersion = "0.1.0";

/// Shortest text that parses back to the same double (17 significant digits).
std::string format_double(double x);

/// `# vispinn schema=<name> seed=<seed> version=<semver>`
void write_csv_metadata(std::ostream& out, std::string_view schema, std::uint64_t seed);

/// Splits one CSV line on commas (no quoting; the library never emits quotes).
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace vispinn
