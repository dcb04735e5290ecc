#pragma once

#include <string>
#include <vector>

namespace nlostrack::io {

/// Shortest round-trip decimal representation (std::to_chars), so values
/// written to traces parse back bit-identical.
std::string format_double(double v);

double parse_double(const std::string& s);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace nlostrack::io
