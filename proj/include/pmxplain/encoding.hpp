// Event-to-vector encoding: feature schema construction, one-hot layout,
// prefix encoding with left-padding, dataset assembly with trace-level
// train/validation/test splitting, and a binary dataset cache.
//
// Layout: an event vector has one dimension per numeric/boolean attribute and
// one per (categorical attribute, domain value) pair, in schema order, with
// derived time features appended last. A prefix of m events becomes an M x n
// matrix whose first M-m rows are zero (left padding), flattened row-major
// into the vector chi that the predictors and the attribution engine consume.
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pmxplain/common.hpp"
#include "pmxplain/event_log.hpp"

namespace pmxplain {

enum class FeatureKind : uint8_t { numeric, boolean, onehot };

struct FeatureDescriptor {
  std::string attribute;
  std::string value;  // one-hot features only
  FeatureKind kind = FeatureKind::numeric;
  bool derived = false;   // time_from_start / time_since_previous
  bool scaled = false;    // min-max scaling applied at encode time
  double scale_min = 0.0;
  double scale_max = 1.0;
  double median = 0.0;    // training median of the raw value (numeric/boolean)

  bool operator==(const FeatureDescriptor&) const = default;
};

inline const std::string kTimeFromStart = "time_from_start";
inline const std::string kTimeSincePrevious = "time_since_previous";

struct FeatureSchema {
  std::vector<FeatureDescriptor> features;
  // [begin, end) feature index ranges, one per categorical attribute.
  std::vector<std::pair<int, int>> onehot_groups;

  int width() const { return int(features.size()); }

  uint64_t fingerprint() const {
    HashAccum h;
    for (const auto& f : features) {
      h.add(f.attribute);
      h.add(f.value);
      h.add_u64(uint64_t(f.kind));
      h.add_u64(f.derived ? 1 : 0);
      h.add_u64(f.scaled ? 1 : 0);
      h.add_double(f.scale_min);
      h.add_double(f.scale_max);
      h.add_double(f.median);
    }
    return h.digest();
  }

  const FeatureDescriptor* find_scalar(const std::string& attribute) const {
    for (const auto& f : features)
      if (f.kind != FeatureKind::onehot && f.attribute == attribute) return &f;
    return nullptr;
  }

  bool operator==(const FeatureSchema&) const = default;
};

struct EncodingOptions {
  bool scale_numerics = true;
  bool add_time_from_start = true;
  bool add_time_since_previous = false;
  int cardinality_cap = 1000;
};

namespace detail {

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Builds the deterministic feature layout for a log. Numeric attributes are
// min-max scaled to [0,1] when enabled (parameters recorded so explanations
// can cite raw values); derived time features are computed per event at
// encode time and their scaling/median statistics come from the whole log.
inline FeatureSchema build_schema(const EventLog& log,
                                  const EncodingOptions& options = {}) {
  if (log.traces.empty())
    throw ValidationError("build_schema: event log has no traces");
  FeatureSchema schema;

  auto values_of = [&](const std::string& name) {
    std::vector<double> vals;
    for (const auto& tr : log.traces)
      for (const auto& ev : tr.events) {
        auto it = ev.assignments.find(name);
        if (it == ev.assignments.end()) continue;
        if (const auto* d = std::get_if<double>(&it->second))
          vals.push_back(*d);
        else if (const auto* b = std::get_if<bool>(&it->second))
          vals.push_back(*b ? 1.0 : 0.0);
      }
    return vals;
  };

  for (const auto& attr : log.schema) {
    switch (attr.kind) {
      case AttributeKind::categorical: {
        if (int(attr.domain.size()) > options.cardinality_cap)
          throw ValidationError(
              "attribute '" + attr.name + "' has " +
              std::to_string(attr.domain.size()) +
              " categorical values, above the cap of " +
              std::to_string(options.cardinality_cap) +
              "; exclude the column or raise cardinality_cap");
        int begin = schema.width();
        for (const auto& v : attr.domain) {
          FeatureDescriptor f;
          f.attribute = attr.name;
          f.value = v;
          f.kind = FeatureKind::onehot;
          schema.features.push_back(std::move(f));
        }
        schema.onehot_groups.push_back({begin, schema.width()});
        break;
      }
      case AttributeKind::numeric: {
        FeatureDescriptor f;
        f.attribute = attr.name;
        f.kind = FeatureKind::numeric;
        f.scaled = options.scale_numerics;
        f.scale_min = attr.num_min;
        f.scale_max = attr.num_max;
        f.median = detail::median_of(values_of(attr.name));
        schema.features.push_back(std::move(f));
        break;
      }
      case AttributeKind::boolean: {
        FeatureDescriptor f;
        f.attribute = attr.name;
        f.kind = FeatureKind::boolean;
        f.median = detail::median_of(values_of(attr.name));
        schema.features.push_back(std::move(f));
        break;
      }
      case AttributeKind::timestamp:
        break;  // the event timestamp feeds derived features only
    }
  }

  auto add_derived = [&](const std::string& name, std::vector<double> vals) {
    FeatureDescriptor f;
    f.attribute = name;
    f.kind = FeatureKind::numeric;
    f.derived = true;
    f.scaled = options.scale_numerics;
    if (!vals.empty()) {
      auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
      f.scale_min = *lo;
      f.scale_max = *hi;
    }
    f.median = detail::median_of(std::move(vals));
    schema.features.push_back(std::move(f));
  };

  if (options.add_time_from_start) {
    std::vector<double> vals;
    for (const auto& tr : log.traces)
      for (const auto& ev : tr.events)
        vals.push_back(double(ev.timestamp - tr.events.front().timestamp));
    add_derived(kTimeFromStart, std::move(vals));
  }
  if (options.add_time_since_previous) {
    std::vector<double> vals;
    for (const auto& tr : log.traces)
      for (size_t j = 0; j < tr.events.size(); ++j)
        vals.push_back(j == 0 ? 0.0
                              : double(tr.events[j].timestamp -
                                       tr.events[j - 1].timestamp));
    add_derived(kTimeSincePrevious, std::move(vals));
  }
  return schema;
}

// ---------------------------------------------------------------------------
// Encoded prefixes
// ---------------------------------------------------------------------------

struct EncodedPrefix {
  std::vector<double> chi;  // flattened, size max_len * width, row-major
  int max_len = 0;          // M
  int width = 0;            // n
  int length = 0;           // m, actual (non-padding) rows
  uint64_t schema_fingerprint = 0;

  std::span<const double> row(int r) const {
    return {chi.data() + size_t(r) * width, size_t(width)};
  }
  int first_row() const { return max_len - length; }

  bool operator==(const EncodedPrefix&) const = default;
};

struct EncodeStats {
  uint64_t unseen_values = 0;  // categorical values absent from the schema
};

namespace detail {

inline double scale_feature(const FeatureDescriptor& f, double raw) {
  if (!f.scaled) return raw;
  double span = f.scale_max - f.scale_min;
  if (span <= 0.0) return 0.0;
  return (raw - f.scale_min) / span;
}

inline double unscale_feature(const FeatureDescriptor& f, double encoded) {
  if (!f.scaled) return encoded;
  double span = f.scale_max - f.scale_min;
  if (span <= 0.0) return f.scale_min;
  return encoded * span + f.scale_min;
}

}  // namespace detail

// Encodes a prefix of events to the padded matrix. base_timestamp anchors
// the time_from_start feature; by default it is the first event of the given
// span (callers that truncate long prefixes pass the true trace start).
// Unseen categorical values encode as an all-zero one-hot group and are
// counted in stats.
inline EncodedPrefix encode_prefix(const FeatureSchema& schema,
                                   std::span<const Event> prefix, int max_len,
                                   EncodeStats* stats = nullptr,
                                   std::optional<int64_t> base_timestamp = {}) {
  int m = int(prefix.size());
  if (m > max_len)
    throw ValidationError(
        "prefix of length " + std::to_string(m) +
        " exceeds the maximum of " + std::to_string(max_len) +
        "; truncate to the most recent " + std::to_string(max_len) +
        " events before encoding");
  int n = schema.width();
  EncodedPrefix out;
  out.max_len = max_len;
  out.width = n;
  out.length = m;
  out.schema_fingerprint = schema.fingerprint();
  out.chi.assign(size_t(max_len) * n, 0.0);
  if (m == 0) return out;

  int64_t t0 = base_timestamp.value_or(prefix.front().timestamp);
  for (int j = 0; j < m; ++j) {
    const Event& ev = prefix[j];
    double* row = out.chi.data() + size_t(max_len - m + j) * n;
    // Track which categorical attributes found a matching descriptor, to
    // spot unseen values.
    std::map<std::string, bool> matched;
    for (int d = 0; d < n; ++d) {
      const FeatureDescriptor& f = schema.features[d];
      switch (f.kind) {
        case FeatureKind::onehot: {
          auto it = ev.assignments.find(f.attribute);
          if (it == ev.assignments.end()) break;
          const auto* s = std::get_if<std::string>(&it->second);
          if (s && *s == f.value) {
            row[d] = 1.0;
            matched[f.attribute] = true;
          } else {
            matched.try_emplace(f.attribute, false);
          }
          break;
        }
        case FeatureKind::numeric: {
          double raw = 0.0;
          bool present = false;
          if (f.derived) {
            if (f.attribute == kTimeFromStart) {
              raw = double(ev.timestamp - t0);
              present = true;
            } else if (f.attribute == kTimeSincePrevious) {
              raw = j == 0 ? 0.0
                           : double(ev.timestamp - prefix[j - 1].timestamp);
              present = true;
            }
          } else {
            auto it = ev.assignments.find(f.attribute);
            if (it != ev.assignments.end()) {
              if (const auto* dv = std::get_if<double>(&it->second)) {
                raw = *dv;
                present = true;
              }
            }
          }
          // An absent numeric attribute encodes as 0 (the scaled floor).
          row[d] = present ? detail::scale_feature(f, raw) : 0.0;
          break;
        }
        case FeatureKind::boolean: {
          auto it = ev.assignments.find(f.attribute);
          if (it != ev.assignments.end())
            if (const auto* b = std::get_if<bool>(&it->second))
              row[d] = *b ? 1.0 : 0.0;
          break;
        }
      }
    }
    if (stats)
      for (const auto& [attr, hit] : matched)
        if (!hit) ++stats->unseen_values;
  }
  return out;
}

// Inverse of encode for one non-padding row: reconstructs the assignments
// covered by the schema (derived features are skipped; an all-zero one-hot
// group yields no assignment).
inline std::map<std::string, AttributeValue> decode_row(
    const FeatureSchema& schema, const EncodedPrefix& x, int row_index) {
  std::map<std::string, AttributeValue> out;
  std::span<const double> row = x.row(row_index);
  for (int d = 0; d < schema.width(); ++d) {
    const FeatureDescriptor& f = schema.features[d];
    if (f.derived) continue;
    switch (f.kind) {
      case FeatureKind::onehot:
        if (row[d] == 1.0) out[f.attribute] = f.value;
        break;
      case FeatureKind::numeric:
        out[f.attribute] = detail::unscale_feature(f, row[d]);
        break;
      case FeatureKind::boolean:
        out[f.attribute] = row[d] > 0.5;
        break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

enum class Split : uint8_t { train, validation, test };

struct DataItem {
  EncodedPrefix x;
  double y = 0.0;
  std::string case_id;
  int prefix_len = 0;  // true prefix length i (>= x.length when truncated)
  Split split = Split::train;
};

struct SplitRatios {
  double test_fraction = 1.0 / 3.0;        // fraction of traces held for test
  double validation_fraction = 0.2;        // fraction of training traces
  uint64_t seed = 1;
};

struct Dataset {
  uint64_t schema_fingerprint = 0;
  int max_len = 0;
  int width = 0;
  std::vector<DataItem> items;
  uint64_t skipped_traces = 0;  // labeler failures

  std::vector<const DataItem*> split_items(Split s) const {
    std::vector<const DataItem*> out;
    for (const auto& it : items)
      if (it.split == s) out.push_back(&it);
    return out;
  }
};

// Split assignment is a pure function of (seed, case_id): prefixes of one
// trace never straddle splits.
inline Split split_of(const std::string& case_id, const SplitRatios& ratios) {
  Rng r1(Rng::mix(ratios.seed, fnv1a64(case_id)));
  if (r1.next_double() < ratios.test_fraction) return Split::test;
  Rng r2(Rng::mix(ratios.seed ^ 0x5bd1e995u, fnv1a64(case_id)));
  if (r2.next_double() < ratios.validation_fraction) return Split::validation;
  return Split::train;
}

// One item per prefix of length >= min_len. Prefixes longer than max_len are
// truncated to their most recent max_len events when truncate_long is set
// (the CLI's choice); otherwise they raise. Traces the labeler rejects are
// skipped and counted.
inline Dataset build_dataset(const EventLog& log, const KpiLabeler& labeler,
                             const FeatureSchema& schema,
                             const SplitRatios& ratios, int max_len,
                             size_t min_len = 1, bool truncate_long = true,
                             EncodeStats* stats = nullptr) {
  if (ratios.test_fraction < 0 || ratios.test_fraction >= 1)
    throw ValidationError("test_fraction must lie in [0, 1)");
  if (ratios.validation_fraction < 0 || ratios.validation_fraction >= 1)
    throw ValidationError("validation_fraction must lie in [0, 1)");
  if (max_len < 1) throw ValidationError("max_len must be >= 1");

  Dataset ds;
  ds.max_len = max_len;
  ds.width = schema.width();
  ds.schema_fingerprint = schema.fingerprint();
  for (const auto& trace : log.traces) {
    Split split = split_of(trace.case_id, ratios);
    std::vector<DataItem> trace_items;
    bool failed = false;
    for (size_t i = min_len; i <= trace.length(); ++i) {
      double y;
      try {
        y = label(labeler, trace, i);
      } catch (const LabelingError&) {
        failed = true;
        break;
      }
      size_t begin = 0;
      if (int(i) > max_len) {
        if (!truncate_long)
          throw ValidationError("trace '" + trace.case_id +
                                "' has a prefix longer than max_len " +
                                std::to_string(max_len));
        begin = i - size_t(max_len);
      }
      DataItem item;
      item.x = encode_prefix(
          schema,
          std::span<const Event>(trace.events.data() + begin, i - begin),
          max_len, stats, trace.events.front().timestamp);
      item.y = y;
      item.case_id = trace.case_id;
      item.prefix_len = int(i);
      item.split = split;
      trace_items.push_back(std::move(item));
    }
    if (failed) {
      ++ds.skipped_traces;
      continue;
    }
    for (auto& it : trace_items) ds.items.push_back(std::move(it));
  }
  return ds;
}

// 95th-percentile trace length (rank ceil(0.95 N)), the default prefix
// window M; caps pathological long tails.
inline int percentile95_length(const std::vector<size_t>& lengths) {
  if (lengths.empty()) return 1;
  std::vector<size_t> sorted = lengths;
  std::sort(sorted.begin(), sorted.end());
  size_t rank = (sorted.size() * 95 + 99) / 100;  // ceil(0.95 N)
  if (rank == 0) rank = 1;
  return int(std::max<size_t>(1, sorted[rank - 1]));
}

// ---------------------------------------------------------------------------
// Binary dataset cache
// ---------------------------------------------------------------------------

inline constexpr char kDatasetMagic[8] = {'P', 'M', 'X', 'D', 'S', 'E', 'T', '1'};

inline void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw RuntimeError("cannot write dataset cache: " + path);
  os.write(kDatasetMagic, sizeof kDatasetMagic);
  write_u32(os, 1);  // version
  write_u64(os, ds.schema_fingerprint);
  write_u32(os, uint32_t(ds.max_len));
  write_u32(os, uint32_t(ds.width));
  write_u64(os, ds.skipped_traces);
  write_u64(os, ds.items.size());
  for (const auto& it : ds.items) {
    write_str(os, it.case_id);
    write_u32(os, uint32_t(it.prefix_len));
    write_u8(os, uint8_t(it.split));
    write_f64(os, it.y);
    write_u32(os, uint32_t(it.x.length));
    // Only non-padding rows are stored; padding is reconstructed on load.
    const double* rows = it.x.chi.data() + size_t(it.x.first_row()) * ds.width;
    os.write(reinterpret_cast<const char*>(rows),
             std::streamsize(sizeof(double) * size_t(it.x.length) * ds.width));
  }
  if (!os) throw RuntimeError("short write on dataset cache: " + path);
}

inline Dataset load_dataset(const std::string& path,
                            std::optional<uint64_t> expected_fingerprint = {}) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw RuntimeError("cannot open dataset cache: " + path);
  char magic[8];
  read_raw(is, magic, sizeof magic, "magic");
  if (std::memcmp(magic, kDatasetMagic, sizeof magic) != 0)
    throw RuntimeError("not a dataset cache file: " + path);
  uint32_t version = read_u32(is);
  if (version != 1)
    throw RuntimeError("unsupported dataset cache version " +
                       std::to_string(version));
  Dataset ds;
  ds.schema_fingerprint = read_u64(is);
  if (expected_fingerprint && *expected_fingerprint != ds.schema_fingerprint)
    throw RuntimeError("dataset cache schema fingerprint mismatch: cache has " +
                       hex64(ds.schema_fingerprint) + ", expected " +
                       hex64(*expected_fingerprint));
  ds.max_len = int(read_u32(is));
  ds.width = int(read_u32(is));
  ds.skipped_traces = read_u64(is);
  uint64_t count = read_u64(is);
  ds.items.resize(size_t(count));
  for (auto& it : ds.items) {
    it.case_id = read_str(is);
    it.prefix_len = int(read_u32(is));
    it.split = Split(read_u8(is));
    it.y = read_f64(is);
    int m = int(read_u32(is));
    it.x.max_len = ds.max_len;
    it.x.width = ds.width;
    it.x.length = m;
    it.x.schema_fingerprint = ds.schema_fingerprint;
    it.x.chi.assign(size_t(ds.max_len) * ds.width, 0.0);
    double* rows = it.x.chi.data() + size_t(ds.max_len - m) * ds.width;
    read_raw(is, rows, sizeof(double) * size_t(m) * ds.width, "prefix rows");
  }
  return ds;
}

}  // namespace pmxplain
