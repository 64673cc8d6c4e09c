// Event-log data model: attribute schemas, events, traces, logs, CSV
// ingestion, KPI labelers, and prefix enumeration.
//
// Conventions baked in here:
//   - timestamps are mandatory and stored as UTC seconds;
//   - the activity column becomes an ordinary categorical attribute named
//     "ACTIVITY", so the explanation layer treats it like any other;
//   - a missing categorical cell becomes the explicit sentinel value
//     kMissingValue, and the sentinel joins the attribute's domain;
//   - a log is a multiset of traces: identical traces may repeat.
#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "pmxplain/common.hpp"
#include "pmxplain/csv.hpp"

namespace pmxplain {

inline const std::string kMissingValue = "⟂missing";  // "⟂missing"
inline const std::string kActivityAttribute = "ACTIVITY";

enum class AttributeKind : uint8_t { categorical, numeric, boolean, timestamp };

struct AttributeSchema {
  std::string name;
  AttributeKind kind = AttributeKind::categorical;
  std::vector<std::string> domain;  // categorical: ordered observed values
  double num_min = 0.0;             // numeric: observed range
  double num_max = 0.0;

  bool operator==(const AttributeSchema&) const = default;
};

using AttributeValue = std::variant<double, bool, std::string>;

struct Event {
  // std::map keeps iteration order deterministic.
  std::map<std::string, AttributeValue> assignments;
  int64_t timestamp = 0;  // UTC seconds; required

  std::optional<std::string> activity() const {
    auto it = assignments.find(kActivityAttribute);
    if (it == assignments.end()) return std::nullopt;
    if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
    return std::nullopt;
  }

  bool operator==(const Event&) const = default;
};

struct Trace {
  std::string case_id;
  std::vector<Event> events;  // non-decreasing in timestamp, length >= 1

  size_t length() const { return events.size(); }
  bool operator==(const Trace&) const = default;
};

struct EventLog {
  std::vector<Trace> traces;  // multiset: duplicates allowed
  std::vector<AttributeSchema> schema;

  const AttributeSchema* find_attribute(const std::string& name) const {
    for (const auto& a : schema)
      if (a.name == name) return &a;
    return nullptr;
  }

  bool operator==(const EventLog&) const = default;
};

// ---------------------------------------------------------------------------
// Timestamps
// ---------------------------------------------------------------------------

// Parses a timestamp using a strptime-style format (default ISO-8601,
// seconds resolution, interpreted as UTC). format == "epoch" reads a raw
// number of seconds.
inline std::optional<int64_t> parse_timestamp(const std::string& text,
                                              const std::string& format) {
  if (format == "epoch") {
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str()) return std::nullopt;
    while (*end == ' ') ++end;
    if (*end != '\0') return std::nullopt;
    return int64_t(v);
  }
  std::tm tm = {};
  std::istringstream ss(text);
  ss >> std::get_time(&tm, format.c_str());
  if (ss.fail()) return std::nullopt;
  tm.tm_isdst = 0;
  return int64_t(timegm(&tm));
}

inline std::string format_timestamp(int64_t utc_seconds) {
  std::time_t t = utc_seconds;
  std::tm tm = {};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

struct ColumnMapping {
  std::string case_column = "case_id";
  std::string activity_column = "activity";
  std::string timestamp_column = "timestamp";
  std::string timestamp_format = "%Y-%m-%dT%H:%M:%S";
  char delimiter = ',';
};

struct IngestResult {
  EventLog log;
  uint64_t rows_total = 0;
  uint64_t rows_bad = 0;
  uint64_t traces_dropped = 0;
  std::vector<std::string> row_errors;  // one line per problem, with line no.

  std::string report() const {
    std::string out;
    out += "rows_total=" + std::to_string(rows_total) + "\n";
    out += "rows_bad=" + std::to_string(rows_bad) + "\n";
    out += "traces_dropped=" + std::to_string(traces_dropped) + "\n";
    for (const auto& e : row_errors) out += e + "\n";
    return out;
  }
};

namespace detail {

inline bool parse_number(const std::string& s, double* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) return false;
  while (*end == ' ') ++end;
  if (*end != '\0') return false;
  *out = v;
  return true;
}

inline bool parse_bool_literal(const std::string& s, bool* out) {
  std::string lower;
  lower.reserve(s.size());
  for (char c : s) lower += char(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "true") { *out = true; return true; }
  if (lower == "false") { *out = false; return true; }
  return false;
}

}  // namespace detail

// Reads an event log from a parsed CSV table. The mapping names the case-id,
// activity and timestamp columns; every other column becomes an attribute
// whose kind is inferred from its cells (numeric if all non-empty cells parse
// as numbers, boolean if all are true/false, categorical otherwise). Traces
// containing any unparsable timestamp are dropped whole and reported, since a
// partial trace would corrupt remaining-time labels.
//
// kind_overrides pins the kind of named columns, bypassing inference; the
// online path uses it so running-case files are read with the kinds the
// model was trained on.
inline IngestResult ingest_table(
    const CsvTable& table, const ColumnMapping& mapping,
    const std::map<std::string, AttributeKind>* kind_overrides = nullptr) {
  IngestResult result;
  int case_col = table.column_index(mapping.case_column);
  int act_col = table.column_index(mapping.activity_column);
  int ts_col = table.column_index(mapping.timestamp_column);
  if (case_col < 0)
    throw ValidationError("case_column: column '" + mapping.case_column +
                          "' not found in CSV header");
  if (act_col < 0)
    throw ValidationError("activity_column: column '" + mapping.activity_column +
                          "' not found in CSV header");
  if (ts_col < 0)
    throw ValidationError("timestamp_column: column '" + mapping.timestamp_column +
                          "' not found in CSV header");

  // Free attribute columns, in header order.
  struct FreeColumn {
    int index;
    std::string name;
    AttributeKind kind;
  };
  std::vector<FreeColumn> free_cols;
  for (int c = 0; c < int(table.header.size()); ++c) {
    if (c == case_col || c == act_col || c == ts_col) continue;
    if (table.header[c].empty())
      throw ValidationError("CSV header has an unnamed column at position " +
                            std::to_string(c + 1));
    free_cols.push_back({c, table.header[c], AttributeKind::numeric});
  }

  // Kind inference pass.
  for (auto& fc : free_cols) {
    if (kind_overrides) {
      auto it = kind_overrides->find(fc.name);
      if (it != kind_overrides->end()) {
        fc.kind = it->second;
        continue;
      }
    }
    bool all_numeric = true, all_boolean = true, any_value = false;
    for (const auto& row : table.rows) {
      if (fc.index >= int(row.cells.size())) continue;
      const std::string& cell = row.cells[fc.index];
      if (cell.empty()) continue;
      any_value = true;
      double d;
      bool b;
      if (!detail::parse_number(cell, &d)) all_numeric = false;
      if (!detail::parse_bool_literal(cell, &b)) all_boolean = false;
    }
    if (!any_value)
      fc.kind = AttributeKind::categorical;
    else if (all_boolean)
      fc.kind = AttributeKind::boolean;
    else if (all_numeric)
      fc.kind = AttributeKind::numeric;
    else
      fc.kind = AttributeKind::categorical;
  }

  // Group rows by case id in first-seen order.
  std::vector<std::string> case_order;
  std::map<std::string, std::vector<const CsvRow*>> by_case;
  for (const auto& row : table.rows) {
    ++result.rows_total;
    if (case_col >= int(row.cells.size()) || row.cells[case_col].empty()) {
      ++result.rows_bad;
      result.row_errors.push_back("line " + std::to_string(row.line) +
                                  ": empty case id; row skipped");
      continue;
    }
    const std::string& id = row.cells[case_col];
    auto [it, inserted] = by_case.try_emplace(id);
    if (inserted) case_order.push_back(id);
    it->second.push_back(&row);
  }

  EventLog& log = result.log;
  for (const auto& id : case_order) {
    Trace trace;
    trace.case_id = id;
    bool drop = false;
    for (const CsvRow* row : by_case[id]) {
      auto cell_at = [&](int c) -> std::string {
        return c < int(row->cells.size()) ? row->cells[c] : std::string();
      };
      Event ev;
      auto ts = parse_timestamp(cell_at(ts_col), mapping.timestamp_format);
      if (!ts) {
        ++result.rows_bad;
        result.row_errors.push_back(
            "line " + std::to_string(row->line) + ": unparsable timestamp '" +
            cell_at(ts_col) + "' (format " + mapping.timestamp_format +
            "); trace '" + id + "' dropped");
        drop = true;
        continue;
      }
      ev.timestamp = *ts;
      std::string act = cell_at(act_col);
      ev.assignments[kActivityAttribute] =
          act.empty() ? kMissingValue : act;
      for (const auto& fc : free_cols) {
        std::string cell = cell_at(fc.index);
        switch (fc.kind) {
          case AttributeKind::categorical:
            ev.assignments[fc.name] = cell.empty() ? kMissingValue : cell;
            break;
          case AttributeKind::numeric: {
            double d;
            if (detail::parse_number(cell, &d)) ev.assignments[fc.name] = d;
            break;  // empty numeric cell: attribute absent from the event
          }
          case AttributeKind::boolean: {
            bool b;
            if (detail::parse_bool_literal(cell, &b)) ev.assignments[fc.name] = b;
            break;
          }
          case AttributeKind::timestamp:
            break;
        }
      }
      trace.events.push_back(std::move(ev));
    }
    if (drop || trace.events.empty()) {
      ++result.traces_dropped;
      continue;
    }
    std::stable_sort(trace.events.begin(), trace.events.end(),
                     [](const Event& a, const Event& b) {
                       return a.timestamp < b.timestamp;
                     });
    log.traces.push_back(std::move(trace));
  }

  // Schema: ACTIVITY first, then free columns in header order. Categorical
  // domains are sorted observed values (the sentinel participates like any
  // other value, appearing exactly once when some event omitted the cell).
  auto build_categorical = [&](const std::string& name) {
    AttributeSchema a;
    a.name = name;
    a.kind = AttributeKind::categorical;
    std::set<std::string> values;
    for (const auto& tr : log.traces)
      for (const auto& ev : tr.events) {
        auto it = ev.assignments.find(name);
        if (it != ev.assignments.end())
          values.insert(std::get<std::string>(it->second));
      }
    a.domain.assign(values.begin(), values.end());
    return a;
  };
  log.schema.push_back(build_categorical(kActivityAttribute));
  for (const auto& fc : free_cols) {
    if (fc.kind == AttributeKind::categorical) {
      log.schema.push_back(build_categorical(fc.name));
    } else {
      AttributeSchema a;
      a.name = fc.name;
      a.kind = fc.kind;
      bool first = true;
      for (const auto& tr : log.traces)
        for (const auto& ev : tr.events) {
          auto it = ev.assignments.find(fc.name);
          if (it == ev.assignments.end()) continue;
          double v = fc.kind == AttributeKind::numeric
                         ? std::get<double>(it->second)
                         : (std::get<bool>(it->second) ? 1.0 : 0.0);
          if (first) {
            a.num_min = a.num_max = v;
            first = false;
          } else {
            a.num_min = std::min(a.num_min, v);
            a.num_max = std::max(a.num_max, v);
          }
        }
      log.schema.push_back(a);
    }
  }
  return result;
}

inline IngestResult ingest_csv(
    const std::string& path, const ColumnMapping& mapping,
    const std::map<std::string, AttributeKind>* kind_overrides = nullptr) {
  return ingest_table(read_csv_file(path, mapping.delimiter), mapping,
                      kind_overrides);
}

// ---------------------------------------------------------------------------
// KPI labelers
// ---------------------------------------------------------------------------

enum class KpiKind : uint8_t {
  remaining_time,       // seconds until the trace's last event
  activity_occurrence,  // does `target` occur strictly after position i?
  end_of_case_numeric,  // numeric attribute read from the final event
};

struct KpiLabeler {
  KpiKind kind = KpiKind::remaining_time;
  std::string target;  // activity name or attribute name, per kind

  bool binary() const { return kind == KpiKind::activity_occurrence; }

  std::string name() const {
    switch (kind) {
      case KpiKind::remaining_time: return "remaining_time";
      case KpiKind::activity_occurrence: return "occurrence of " + target;
      case KpiKind::end_of_case_numeric: return target;
    }
    return {};
  }
};

// KPI value of a trace after its first i events (i is 1-based).
// Booleans are returned as 0/1.
inline double label(const KpiLabeler& labeler, const Trace& trace, size_t i) {
  size_t n = trace.length();
  if (i < 1 || i > n)
    throw ValidationError("prefix index " + std::to_string(i) +
                          " out of range for trace of length " +
                          std::to_string(n));
  switch (labeler.kind) {
    case KpiKind::remaining_time:
      return double(trace.events[n - 1].timestamp - trace.events[i - 1].timestamp);
    case KpiKind::activity_occurrence: {
      if (i >= n) return 0.0;  // nothing can occur after the last event
      for (size_t j = i; j < n; ++j) {
        auto act = trace.events[j].activity();
        if (act && *act == labeler.target) return 1.0;
      }
      return 0.0;
    }
    case KpiKind::end_of_case_numeric: {
      const Event& last = trace.events[n - 1];
      auto it = last.assignments.find(labeler.target);
      if (it == last.assignments.end())
        throw LabelingError("trace '" + trace.case_id +
                            "': final event lacks attribute '" +
                            labeler.target + "'");
      if (const auto* d = std::get_if<double>(&it->second)) return *d;
      if (const auto* b = std::get_if<bool>(&it->second)) return *b ? 1.0 : 0.0;
      throw LabelingError("trace '" + trace.case_id + "': attribute '" +
                          labeler.target + "' is not numeric");
    }
  }
  throw RuntimeError("unreachable KPI kind");
}

// ---------------------------------------------------------------------------
// Prefix enumeration
// ---------------------------------------------------------------------------

struct PrefixRef {
  size_t trace_index;
  size_t length;  // i, 1-based prefix length

  bool operator==(const PrefixRef&) const = default;
};

// Every prefix of every trace with length >= min_len, in deterministic order:
// trace ingestion order, then increasing i.
inline std::vector<PrefixRef> enumerate_prefixes(const EventLog& log,
                                                 size_t min_len = 1) {
  if (min_len < 1) throw ValidationError("min_len must be >= 1");
  std::vector<PrefixRef> out;
  for (size_t t = 0; t < log.traces.size(); ++t)
    for (size_t i = min_len; i <= log.traces[t].length(); ++i)
      out.push_back({t, i});
  return out;
}

}  // namespace pmxplain
