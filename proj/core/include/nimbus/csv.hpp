#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace nimbus::csv {

/// Shortest decimal string that round-trips the exact double (std::to_chars).
/// Every number the tools write goes through here so reruns are byte-stable.
std::string format_double(double value);

/// Strict full-string parse. `context` names the file or field for the error.
double parse_double(std::string_view text, const char* context);
long parse_long(std::string_view text, const char* context);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position for `name`, or -1.
  int column(std::string_view name) const;
};

/// Comma-separated with double-quote quoting ("" escapes a quote); tolerates
/// CRLF line ends. Every row must match the header width.
Table read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Quotes the field only when it contains a comma, quote or newline.
std::string escape_field(std::string_view field);

}  // namespace nimbus::csv
