#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace geoproto {

/// RFC-4180 table: header plus rows of unparsed fields.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
  std::size_t require_column(std::string_view name) const;
};

struct CsvReadOptions {
  // Lines starting with '#' before the header are skipped. Output files of
  // this tool carry a provenance comment line there.
  bool skip_leading_comments = true;
};

CsvTable parse_csv(std::istream& in, const CsvReadOptions& options = {});
CsvTable read_csv(const std::string& path, const CsvReadOptions& options = {});

/// Quotes a field when it contains a delimiter, quote, or line break.
std::string csv_escape(std::string_view field);

/// Writes one record terminated by "\n".
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

/// Parses a whole field as a finite double; std::nullopt on any junk.
std::optional<double> parse_double(std::string_view field);

}  // namespace geoproto
