// Report generation: the offline heatmap (net prefix counts per explanation
// label and timestep offset, rendered as CSV and a self-contained SVG) and
// the online per-case explanation table.
//
// Heatmap counting is prefix-level: within one prefix, records sharing a
// label and offset collapse to the sign of their summed psi, so a prefix
// moves a cell by at most one in either direction.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pmxplain/common.hpp"
#include "pmxplain/csv.hpp"
#include "pmxplain/encoding.hpp"
#include "pmxplain/event_log.hpp"
#include "pmxplain/explainer.hpp"

namespace pmxplain {

// Row label for a record: "ATTR=VALUE", "ATTR!=VALUE", or, for numerics,
// "Low/High value of ATTR" split at the training median.
inline std::string heatmap_label(const ExplanationRecord& rec,
                                 const FeatureSchema& schema) {
  switch (rec.relation) {
    case Relation::equals:
      return rec.attribute + "=" + rec.value;
    case Relation::not_equals:
      return rec.attribute + "!=" + rec.value;
    case Relation::numeric: {
      const FeatureDescriptor* f = schema.find_scalar(rec.attribute);
      double median = f ? f->median : 0.0;
      return (rec.numeric_value < median ? "Low value of " : "High value of ") +
             rec.attribute;
    }
  }
  return rec.attribute;
}

struct HeatmapMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::vector<int64_t>> cells;  // [row][t], t = offset 0..-(W-1)
  int window = 0;
  std::string kpi_name;
  uint64_t prefix_count = 0;

  int64_t max_abs() const {
    int64_t m = 0;
    for (const auto& row : cells)
      for (int64_t c : row) m = std::max(m, std::abs(c));
    return m;
  }
};

// Aggregates per-prefix explanation records into the heatmap. Rows are
// sorted by descending peak |cell| (label ascending on ties) and capped at
// top_rows.
inline HeatmapMatrix aggregate_heatmap(
    std::span<const std::vector<ExplanationRecord>> per_prefix, int window,
    const FeatureSchema& schema, std::string kpi_name, int top_rows = 30) {
  if (window < 1) throw ValidationError("heatmap window must be >= 1");
  std::map<std::string, std::vector<int64_t>> rows;
  for (const auto& records : per_prefix) {
    // Collapse this prefix's records per (label, offset).
    std::map<std::pair<std::string, int>, double> signed_sum;
    for (const auto& rec : records) {
      int t = -rec.timestep_offset;  // column index
      if (t < 0 || t >= window) continue;
      signed_sum[{heatmap_label(rec, schema), t}] += rec.weight;
    }
    for (const auto& [key, sum] : signed_sum) {
      if (sum == 0.0) continue;
      auto& row = rows.try_emplace(key.first, size_t(window), 0).first->second;
      row[size_t(key.second)] += sum > 0 ? 1 : -1;
    }
  }

  std::vector<std::pair<std::string, std::vector<int64_t>>> ordered(
      rows.begin(), rows.end());
  auto peak = [](const std::vector<int64_t>& row) {
    int64_t m = 0;
    for (int64_t c : row) m = std::max(m, std::abs(c));
    return m;
  };
  std::stable_sort(ordered.begin(), ordered.end(),
                   [&](const auto& a, const auto& b) {
                     int64_t pa = peak(a.second), pb = peak(b.second);
                     if (pa != pb) return pa > pb;
                     return a.first < b.first;
                   });
  if (int(ordered.size()) > top_rows) ordered.resize(size_t(top_rows));

  HeatmapMatrix hm;
  hm.window = window;
  hm.kpi_name = std::move(kpi_name);
  hm.prefix_count = per_prefix.size();
  for (auto& [label, row] : ordered) {
    hm.row_labels.push_back(label);
    hm.cells.push_back(std::move(row));
  }
  return hm;
}

inline std::string heatmap_to_csv(const HeatmapMatrix& hm) {
  std::vector<std::string> header{"explanation"};
  for (int t = 0; t < hm.window; ++t) header.push_back(std::to_string(-t));
  std::string out = csv_join(header);
  for (size_t r = 0; r < hm.row_labels.size(); ++r) {
    std::vector<std::string> fields{hm.row_labels[r]};
    for (int64_t c : hm.cells[r]) fields.push_back(std::to_string(c));
    out += csv_join(fields);
  }
  return out;
}

// Self-contained SVG: red cells for positive counts, blue for negative,
// intensity proportional to |cell| / max|cell|. Integer geometry and fixed
// formatting keep the output byte-deterministic.
inline std::string heatmap_to_svg(const HeatmapMatrix& hm) {
  const int cell_w = 64, cell_h = 22, top = 52, right = 16, bottom = 14;
  size_t label_chars = 0;
  for (const auto& l : hm.row_labels) label_chars = std::max(label_chars, l.size());
  int left = 16 + int(label_chars) * 8;
  int width = left + cell_w * hm.window + right;
  int height = top + cell_h * int(hm.row_labels.size()) + bottom;
  int64_t max_abs = hm.max_abs();

  auto escape = [](const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '&') out += "&amp;";
      else if (c == '<') out += "&lt;";
      else if (c == '>') out += "&gt;";
      else out += c;
    }
    return out;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" font-family=\"monospace\">\n";
  svg += "<rect width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(left) + "\" y=\"20\" font-size=\"14\">" +
         escape(hm.kpi_name) + " (" + std::to_string(hm.prefix_count) +
         " prefixes)</text>\n";
  for (int t = 0; t < hm.window; ++t)
    svg += "<text x=\"" + std::to_string(left + t * cell_w + cell_w / 2) +
           "\" y=\"44\" font-size=\"11\" text-anchor=\"middle\">" +
           std::to_string(-t) + "</text>\n";
  for (size_t r = 0; r < hm.row_labels.size(); ++r) {
    int y = top + int(r) * cell_h;
    svg += "<text x=\"" + std::to_string(left - 6) + "\" y=\"" +
           std::to_string(y + cell_h / 2 + 4) +
           "\" font-size=\"11\" text-anchor=\"end\">" +
           escape(hm.row_labels[r]) + "</text>\n";
    for (int t = 0; t < hm.window; ++t) {
      int64_t c = hm.cells[r][size_t(t)];
      int fade = 255;
      if (max_abs > 0 && c != 0)
        fade = 255 - int(std::llround(195.0 * double(std::abs(c)) /
                                      double(max_abs)));
      std::string fill =
          c > 0 ? "rgb(255," + std::to_string(fade) + "," + std::to_string(fade) + ")"
          : c < 0 ? "rgb(" + std::to_string(fade) + "," + std::to_string(fade) + ",255)"
                  : "rgb(255,255,255)";
      int x = left + t * cell_w;
      svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) +
             "\" width=\"" + std::to_string(cell_w) + "\" height=\"" +
             std::to_string(cell_h) + "\" fill=\"" + fill +
             "\" stroke=\"rgb(180,180,180)\"/>\n";
      svg += "<text x=\"" + std::to_string(x + cell_w / 2) + "\" y=\"" +
             std::to_string(y + cell_h / 2 + 4) +
             "\" font-size=\"10\" text-anchor=\"middle\">" + std::to_string(c) +
             "</text>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

// ---------------------------------------------------------------------------
// Online explanation tables
// ---------------------------------------------------------------------------

// "Xd Xh Xm", e.g. 454020 seconds -> "5d 6h 7m". Negative predictions clamp
// to zero for display.
inline std::string format_duration(double seconds) {
  int64_t s = std::max<int64_t>(0, int64_t(std::llround(seconds)));
  int64_t days = s / 86400;
  int64_t hours = s % 86400 / 3600;
  int64_t minutes = s % 3600 / 60;
  return std::to_string(days) + "d " + std::to_string(hours) + "h " +
         std::to_string(minutes) + "m";
}

inline std::string format_prediction(double value, KpiKind kind) {
  switch (kind) {
    case KpiKind::remaining_time:
      return format_duration(value);
    case KpiKind::activity_occurrence:
      return value >= 0.5 ? "1" : "0";
    case KpiKind::end_of_case_numeric:
      return format_g(value, 6);
  }
  return format_g(value, 6);
}

// One explanation phrase: the heatmap label plus an " (-t)" suffix for
// offsets before the last event.
inline std::string explanation_phrase(const ExplanationRecord& rec,
                                      const FeatureSchema& schema) {
  std::string s = heatmap_label(rec, schema);
  if (rec.timestep_offset < 0)
    s += " (" + std::to_string(rec.timestep_offset) + ")";
  return s;
}

struct OnlineCase {
  std::string case_id;
  double prediction = 0.0;
  std::vector<ExplanationRecord> records;  // already significance-filtered
};

// CSV with columns CASE_ID, PREDICTION, INCREASING, DECREASING: the top_k
// largest-|psi| records per sign, joined with " AND "; "-" when a side is
// empty.
inline std::string render_online_table(std::span<const OnlineCase> cases,
                                       int top_k, KpiKind kind,
                                       const FeatureSchema& schema) {
  if (top_k < 1) throw ValidationError("online table top_k must be >= 1");
  std::string out = csv_join({"CASE_ID", "PREDICTION", "INCREASING", "DECREASING"});
  for (const auto& c : cases) {
    auto side = [&](bool increasing) {
      std::vector<const ExplanationRecord*> recs;
      for (const auto& r : c.records)
        if (r.increasing() == increasing) recs.push_back(&r);
      std::stable_sort(recs.begin(), recs.end(),
                       [](const ExplanationRecord* a, const ExplanationRecord* b) {
                         return std::abs(a->weight) > std::abs(b->weight);
                       });
      if (int(recs.size()) > top_k) recs.resize(size_t(top_k));
      if (recs.empty()) return std::string("-");
      std::string joined;
      for (size_t i = 0; i < recs.size(); ++i) {
        if (i) joined += " AND ";
        joined += explanation_phrase(*recs[i], schema);
      }
      return joined;
    };
    out += csv_join({c.case_id, format_prediction(c.prediction, kind),
                     side(true), side(false)});
  }
  return out;
}

}  // namespace pmxplain
