// Minimal RFC-4180-ish CSV reader/writer. Quoted fields may contain the
// delimiter, doubled quotes, and newlines. Line numbers are tracked so
// ingestion errors can blame the exact input line.
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pmxplain/common.hpp"

namespace pmxplain {

struct CsvRow {
  std::vector<std::string> cells;
  uint64_t line = 0;  // 1-based line of the row's first character
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  int column_index(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return int(i);
    return -1;
  }
};

inline CsvTable parse_csv(const std::string& text, char delimiter = ',') {
  CsvTable table;
  std::vector<std::string> record;
  std::string cell;
  uint64_t line = 1, record_line = 1;
  bool in_quotes = false, any_cell = false, have_header = false;

  auto end_cell = [&] {
    record.push_back(cell);
    cell.clear();
    any_cell = false;
  };
  auto end_record = [&] {
    end_cell();
    // Skip records that are entirely empty (trailing newline, blank lines).
    bool all_empty = true;
    for (const auto& c : record)
      if (!c.empty()) all_empty = false;
    if (!(record.size() == 1 && all_empty)) {
      if (!have_header) {
        table.header = record;
        have_header = true;
      } else {
        table.rows.push_back({record, record_line});
      }
    }
    record.clear();
    record_line = line;
  };

  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        cell += c;
      }
      continue;
    }
    if (c == '"' && cell.empty() && !any_cell) {
      in_quotes = true;
      any_cell = true;
    } else if (c == delimiter) {
      end_cell();
    } else if (c == '\r') {
      // swallow; \r\n handled by the \n branch
    } else if (c == '\n') {
      ++line;
      end_record();
    } else {
      cell += c;
      any_cell = true;
    }
  }
  if (in_quotes) throw ValidationError("unterminated quote in CSV input");
  if (!cell.empty() || !record.empty()) end_record();
  return table;
}

inline CsvTable read_csv_file(const std::string& path, char delimiter = ',') {
  return parse_csv(read_file(path), delimiter);
}

inline std::string csv_escape(std::string_view field, char delimiter = ',') {
  bool needs_quotes = false;
  for (char c : field)
    if (c == delimiter || c == '"' || c == '\n' || c == '\r') needs_quotes = true;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_join(const std::vector<std::string>& fields,
                            char delimiter = ',') {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out += delimiter;
    out += csv_escape(fields[i], delimiter);
  }
  out += '\n';
  return out;
}

}  // namespace pmxplain
