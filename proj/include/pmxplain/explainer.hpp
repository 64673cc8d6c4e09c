// Turns a Shapley attribution into explanation records: significance
// filtering against the interval [mu - delta*xi, mu + delta*xi], the
// categorical equals / not-equals mapping, numeric explanations, and the
// K(attribute, value, offset) lookup.
//
// mu and xi are computed over active features only (population standard
// deviation): padding and frozen dimensions carry structural zeros that
// would otherwise drown the signal of heavily padded prefixes. "Outside the
// interval" is strict, so boundary ties are filtered out.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pmxplain/common.hpp"
#include "pmxplain/encoding.hpp"
#include "pmxplain/event_log.hpp"
#include "pmxplain/shapley.hpp"

namespace pmxplain {

enum class Relation : uint8_t { equals, not_equals, numeric };

struct ExplanationRecord {
  std::string attribute;
  Relation relation = Relation::numeric;
  std::string value;          // categorical value; empty for numeric
  double numeric_value = 0.0; // raw instance value, numeric relation only
  int timestep_offset = 0;    // 0 = last event, -1 = second last, ...
  double weight = 0.0;        // the psi behind this record; never 0

  bool increasing() const { return weight > 0.0; }
};

struct FilterInterval {
  double mu = 0.0;
  double xi = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double psi) const { return psi >= lo && psi <= hi; }
};

inline FilterInterval significance_interval(const ShapleyAttribution& attr,
                                            double delta) {
  if (delta < 0.0) throw ValidationError("delta must be >= 0");
  if (attr.active.empty())
    throw ValidationError("significance_interval: no active features");
  double mu = 0.0;
  for (int i : attr.active) mu += attr.values[size_t(i)];
  mu /= double(attr.active.size());
  double var = 0.0;
  for (int i : attr.active) {
    double d = attr.values[size_t(i)] - mu;
    var += d * d;
  }
  var /= double(attr.active.size());
  double xi = std::sqrt(var);
  return {mu, xi, mu - delta * xi, mu + delta * xi};
}

// Indices (with their psi) strictly outside the interval, ascending by
// index. An empty result is valid: no significant factors.
inline std::vector<std::pair<int, double>> filter_significant(
    const ShapleyAttribution& attr, double delta) {
  FilterInterval interval = significance_interval(attr, delta);
  std::vector<std::pair<int, double>> out;
  for (int i : attr.active) {
    double psi = attr.values[size_t(i)];
    if (!interval.contains(psi)) out.emplace_back(i, psi);
  }
  return out;
}

// Maps significant indices to explanation records. A one-hot feature whose
// instance value is 1 yields "attribute equals value"; value 0 yields
// "attribute not_equals value". Numeric and boolean features yield numeric
// records carrying the raw (unscaled) instance value. Indices with an exactly
// zero psi are dropped: a record carries a direction, and zero has none.
inline std::vector<ExplanationRecord> to_explanations(
    const ShapleyAttribution& attr,
    std::span<const std::pair<int, double>> significant,
    const FeatureSchema& schema, const EncodedPrefix& instance) {
  std::vector<ExplanationRecord> out;
  for (const auto& [flat, psi] : significant) {
    if (psi == 0.0) continue;
    int row = flat / attr.width;
    int feature = flat % attr.width;
    if (row < instance.first_row())
      throw RuntimeError("explanation index " + std::to_string(flat) +
                         " lies in a padding row; attribution is corrupt");
    ExplanationRecord rec;
    const FeatureDescriptor& f = schema.features[size_t(feature)];
    rec.attribute = f.attribute;
    rec.timestep_offset = row - (attr.max_len - 1);
    rec.weight = psi;
    double x = instance.chi[size_t(flat)];
    if (f.kind == FeatureKind::onehot) {
      rec.relation = x == 1.0 ? Relation::equals : Relation::not_equals;
      rec.value = f.value;
    } else {
      rec.relation = Relation::numeric;
      rec.numeric_value = detail::unscale_feature(f, x);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::string relation_name(Relation r) {
  switch (r) {
    case Relation::equals: return "equals";
    case Relation::not_equals: return "not_equals";
    case Relation::numeric: return "numeric";
  }
  return {};
}

// Record serialization: one row per explanation record, keyed by case id.
inline std::string records_to_csv(
    std::span<const std::pair<std::string, std::vector<ExplanationRecord>>>
        per_case) {
  std::string out =
      csv_join({"case_id", "attribute", "relation", "value", "timestep_offset",
                "weight"});
  for (const auto& [case_id, records] : per_case)
    for (const auto& rec : records)
      out += csv_join({case_id, rec.attribute, relation_name(rec.relation),
                       rec.relation == Relation::numeric
                           ? format_g(rec.numeric_value)
                           : rec.value,
                       std::to_string(rec.timestep_offset),
                       format_g(rec.weight)});
  return out;
}

// K(a, v, offset): an equals record matches only its own (attribute, value);
// a not_equals record on value u matches every other domain value; a numeric
// record matches any value of its attribute. Values outside the attribute's
// declared domain contribute zero. Overlapping matches sum.
inline double k_lookup(std::span<const ExplanationRecord> records,
                       const std::vector<AttributeSchema>& attributes,
                       const std::string& attribute, const AttributeValue& v,
                       int offset) {
  const AttributeSchema* schema = nullptr;
  for (const auto& a : attributes)
    if (a.name == attribute) schema = &a;
  if (!schema) return 0.0;

  // Domain membership per Def-style semantics.
  const std::string* v_str = std::get_if<std::string>(&v);
  if (schema->kind == AttributeKind::categorical) {
    if (!v_str) return 0.0;
    if (std::find(schema->domain.begin(), schema->domain.end(), *v_str) ==
        schema->domain.end())
      return 0.0;
  } else {
    double num;
    if (const auto* d = std::get_if<double>(&v)) num = *d;
    else if (const auto* b = std::get_if<bool>(&v)) num = *b ? 1.0 : 0.0;
    else return 0.0;
    if (num < schema->num_min || num > schema->num_max) return 0.0;
  }

  double total = 0.0;
  for (const auto& rec : records) {
    if (rec.attribute != attribute || rec.timestep_offset != offset) continue;
    switch (rec.relation) {
      case Relation::equals:
        if (v_str && *v_str == rec.value) total += rec.weight;
        break;
      case Relation::not_equals:
        if (v_str && *v_str != rec.value) total += rec.weight;
        break;
      case Relation::numeric:
        total += rec.weight;
        break;
    }
  }
  return total;
}

}  // namespace pmxplain
