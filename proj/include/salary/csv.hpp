#ifndef SALARY_CSV_HPP
#define SALARY_CSV_HPP

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "salary/common.hpp"

namespace salary::csv {

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  }
};

// RFC 4180 subset: comma separator, double-quote quoting with "" escapes,
// CRLF or LF line endings. A leading UTF-8 BOM is skipped.
inline Table parse(std::istream& in) {
  Table table;
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  if (content.rfind("\xEF\xBB\xBF", 0) == 0) pos = 3;

  std::size_t line = 1;
  bool first = true;
  while (pos < content.size()) {
    Row row;
    std::string field;
    bool in_quotes = false;
    bool field_quoted = false;
    const std::size_t row_line = line;
    for (;;) {
      if (pos >= content.size()) {
        if (in_quotes) throw ParseError("unterminated quoted field", row_line);
        row.push_back(std::move(field));
        break;
      }
      char c = content[pos++];
      if (in_quotes) {
        if (c == '"') {
          if (pos < content.size() && content[pos] == '"') {
            field.push_back('"');
            ++pos;
          } else {
            in_quotes = false;
          }
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
        }
        continue;
      }
      if (c == '"') {
        if (!field.empty() || field_quoted) throw ParseError("stray quote in field", line);
        in_quotes = true;
        field_quoted = true;
      } else if (c == ',') {
        row.push_back(std::move(field));
        field.clear();
        field_quoted = false;
      } else if (c == '\r') {
        // swallowed; '\n' terminates the record
      } else if (c == '\n') {
        ++line;
        row.push_back(std::move(field));
        break;
      } else {
        if (field_quoted) throw ParseError("characters after closing quote", line);
        field.push_back(c);
      }
    }
    if (row.size() == 1 && row[0].empty()) continue;  // blank line
    if (first) {
      table.header = std::move(row);
      first = false;
    } else {
      if (row.size() != table.header.size())
        throw ParseError("expected " + std::to_string(table.header.size()) + " fields, found " +
                             std::to_string(row.size()),
                         row_line);
      table.rows.push_back(std::move(row));
      table.line_numbers.push_back(row_line);
    }
  }
  if (first) throw ParseError("missing header row", 1);
  return table;
}

inline Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return parse(in);
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& out, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << quote(row[i]);
  }
  out << '\n';
}

/// Shortest representation that round-trips, so written files are
/// deterministic and lossless.
inline std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf, end);
}

inline std::optional<double> parse_number(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

inline bool is_blank(std::string_view text) {
  return text.find_first_not_of(" \t") == std::string_view::npos;
}

}  // namespace salary::csv

#endif  // SALARY_CSV_HPP
