#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace edgecoop::csv {

/// Shortest round-trip decimal form of `value`.
std::string fmt(double value);

std::vector<std::string> split(std::string_view line, char sep = ',');

double to_double(std::string_view field);
long long to_int(std::string_view field);

/// Writes one comma-separated row.
void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// A header plus data rows.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
};

/// Reads a plain CSV table (first line is the header). Blank lines and lines
/// starting with '#' are skipped.
Table read_table(std::istream& in);

/// Reads a file made of "[name]" sections, each holding a CSV table.
std::map<std::string, Table> read_sections(std::istream& in);

}  // namespace edgecoop::csv
