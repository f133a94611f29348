// SPDX-License-Identifier: MIT
#include "vispinn/csv.hpp"

#include <fmt/format.h>

namespace vispinn {

std::string format_double(double x) { return fmt::format("{:.17g}", x); }

void write_csv_metadata(std::ostream& out, std::string_view schema, std::uint64_t seed) {
  out << fmt::format("# vispinn schema={} seed={} version={}\n", schema, seed, kVersion);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

}  // namespace vispinn
