// Synthetic event-log generator with planted, known causal rules, used to
// validate explanation quality end to end: a small sequential process
// skeleton with an optional rework loop, per-trace case attributes, and
// rules whose conditions inject a known additive delay, a forced activity,
// or an additive cost.
//
// Generation is a pure function of (spec, seed): every trace derives its own
// RNG stream from the pair, so traces are independent of generation order.
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pmxplain/common.hpp"
#include "pmxplain/csv.hpp"
#include "pmxplain/event_log.hpp"

namespace pmxplain {

enum class SynthEffect : uint8_t { add_delay, force_activity, add_cost };

inline std::string synth_effect_name(SynthEffect e) {
  switch (e) {
    case SynthEffect::add_delay: return "delay";
    case SynthEffect::force_activity: return "force_activity";
    case SynthEffect::add_cost: return "cost";
  }
  return {};
}

struct SynthRule {
  std::string attribute;        // condition: attribute == value
  std::string value;
  SynthEffect effect = SynthEffect::add_delay;
  double magnitude = 0.0;       // seconds (delay) or cost units
  std::string target_activity;  // force_activity only
  double affected_fraction = 0.3;
};

struct SynthSpec {
  int n_traces = 1000;
  uint64_t seed = 7;
  double noise_seconds = 0.0;   // uniform per-gap jitter amplitude
  std::vector<std::string> activities = {"Receive",  "Validate", "Process",
                                         "Review",   "Approve",  "Archive"};
  double rework_probability = 0.2;  // repeats (Process, Review) once
  double base_gap_seconds = 600.0;
  double base_event_cost = 2.0;
  bool include_amount = true;   // nuisance numeric attribute
  int64_t start_epoch = 1767225600;  // 2026-01-01T00:00:00Z
  std::vector<SynthRule> rules;
};

namespace detail {

inline void validate_synth_spec(const SynthSpec& spec) {
  if (spec.n_traces < 1) throw ValidationError("synth: n_traces must be >= 1");
  if (spec.activities.size() < 2)
    throw ValidationError("synth: need at least 2 activities");
  std::set<std::string> alphabet(spec.activities.begin(), spec.activities.end());
  std::map<std::string, double> fraction_by_attr;
  std::set<std::string> forced;
  for (const auto& r : spec.rules) {
    if (r.attribute.empty() || r.value.empty())
      throw ValidationError("synth: rule condition needs attribute and value");
    if (r.attribute == kActivityAttribute)
      throw ValidationError("synth: rules may not condition on ACTIVITY");
    if (r.affected_fraction <= 0.0 || r.affected_fraction >= 1.0)
      throw ValidationError("synth: affected_fraction must lie in (0, 1)");
    if (r.effect == SynthEffect::force_activity) {
      if (r.target_activity.empty())
        throw ValidationError("synth: force_activity rule needs a target");
      if (alphabet.count(r.target_activity))
        throw ValidationError(
            "synth: contradictory rule: target activity '" + r.target_activity +
            "' already occurs in every trace's skeleton");
      if (!forced.insert(r.target_activity).second)
        throw ValidationError(
            "synth: contradictory rules: two rules force activity '" +
            r.target_activity + "'");
    }
    fraction_by_attr[r.attribute] += r.affected_fraction;
  }
  for (const auto& [attr, total] : fraction_by_attr)
    if (total >= 1.0)
      throw ValidationError("synth: affected fractions for attribute '" + attr +
                            "' sum to " + format_g(total) + " (must stay < 1)");
}

}  // namespace detail

inline EventLog generate(const SynthSpec& spec) {
  detail::validate_synth_spec(spec);
  bool any_cost = false;
  for (const auto& r : spec.rules)
    if (r.effect == SynthEffect::add_cost) any_cost = true;

  // Condition attributes and their domains ("normal" is the unaffected value).
  std::map<std::string, std::vector<const SynthRule*>> rules_by_attr;
  for (const auto& r : spec.rules) rules_by_attr[r.attribute].push_back(&r);

  EventLog log;
  for (int t = 0; t < spec.n_traces; ++t) {
    Rng rng(Rng::mix(spec.seed, uint64_t(t)));
    Trace trace;
    char id[32];
    std::snprintf(id, sizeof id, "case_%06d", t);
    trace.case_id = id;

    // Case attributes: pick one value per condition attribute.
    std::map<std::string, std::string> case_attrs;
    std::vector<const SynthRule*> fired;
    for (const auto& [attr, rules] : rules_by_attr) {
      double u = rng.next_double(), acc = 0.0;
      std::string value = "normal";
      for (const auto* r : rules) {
        acc += r->affected_fraction;
        if (u < acc) {
          value = r->value;
          fired.push_back(r);
          break;
        }
      }
      case_attrs[attr] = value;
    }
    double amount = std::floor(rng.next_double() * 100000.0) / 100.0;

    // Control flow: sequential skeleton, optional single rework of
    // (Process, Review) when the alphabet is long enough.
    std::vector<std::string> flow = spec.activities;
    if (spec.activities.size() >= 4 &&
        rng.next_double() < spec.rework_probability)
      flow.insert(flow.begin() + 4, {spec.activities[2], spec.activities[3]});
    for (const auto* r : fired)
      if (r->effect == SynthEffect::force_activity)
        flow.insert(flow.end() - 1, r->target_activity);

    // Timing: constant base gaps plus uniform jitter; a delay rule adds its
    // magnitude to the final gap so every proper prefix feels the effect.
    std::vector<double> gaps(flow.size() - 1, spec.base_gap_seconds);
    for (auto& g : gaps) g += rng.next_double() * spec.noise_seconds;
    for (const auto* r : fired)
      if (r->effect == SynthEffect::add_delay) gaps.back() += r->magnitude;

    double total_cost = 0.0;
    int64_t ts = spec.start_epoch + int64_t(t) * 86400;
    for (size_t j = 0; j < flow.size(); ++j) {
      if (j > 0) ts += int64_t(std::llround(gaps[j - 1]));
      Event ev;
      ev.timestamp = ts;
      ev.assignments[kActivityAttribute] = flow[j];
      for (const auto& [attr, value] : case_attrs) ev.assignments[attr] = value;
      if (spec.include_amount) ev.assignments["AMOUNT"] = amount;
      if (any_cost) {
        total_cost += spec.base_event_cost;
        if (j + 1 == flow.size())
          for (const auto* r : fired)
            if (r->effect == SynthEffect::add_cost) total_cost += r->magnitude;
        ev.assignments["COST"] = total_cost;
      }
      trace.events.push_back(std::move(ev));
    }
    log.traces.push_back(std::move(trace));
  }

  // Schema: ACTIVITY, condition attributes, AMOUNT, COST.
  auto categorical = [&](const std::string& name) {
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
  auto numeric = [&](const std::string& name) {
    AttributeSchema a;
    a.name = name;
    a.kind = AttributeKind::numeric;
    bool first = true;
    for (const auto& tr : log.traces)
      for (const auto& ev : tr.events) {
        auto it = ev.assignments.find(name);
        if (it == ev.assignments.end()) continue;
        double v = std::get<double>(it->second);
        if (first) {
          a.num_min = a.num_max = v;
          first = false;
        } else {
          a.num_min = std::min(a.num_min, v);
          a.num_max = std::max(a.num_max, v);
        }
      }
    return a;
  };
  log.schema.push_back(categorical(kActivityAttribute));
  for (const auto& [attr, rules] : rules_by_attr)
    log.schema.push_back(categorical(attr));
  if (spec.include_amount) log.schema.push_back(numeric("AMOUNT"));
  if (any_cost) log.schema.push_back(numeric("COST"));
  return log;
}

// Ground-truth rule table, written alongside the generated log.
inline std::string rules_to_csv(const SynthSpec& spec) {
  std::string out = csv_join({"attribute", "value", "effect", "magnitude",
                              "target_activity", "affected_fraction"});
  for (const auto& r : spec.rules)
    out += csv_join({r.attribute, r.value, synth_effect_name(r.effect),
                     format_g(r.magnitude), r.target_activity,
                     format_g(r.affected_fraction)});
  return out;
}

// Writes a log in the canonical CSV format (case_id, activity, timestamp,
// then the free attributes in schema order).
inline std::string log_to_csv(const EventLog& log) {
  std::vector<std::string> attr_columns;
  for (const auto& a : log.schema)
    if (a.name != kActivityAttribute) attr_columns.push_back(a.name);

  std::vector<std::string> header{"case_id", "activity", "timestamp"};
  for (const auto& c : attr_columns) header.push_back(c);
  std::string out = csv_join(header);

  for (const auto& tr : log.traces)
    for (const auto& ev : tr.events) {
      std::vector<std::string> row{tr.case_id, ev.activity().value_or(""),
                                   format_timestamp(ev.timestamp)};
      for (const auto& c : attr_columns) {
        auto it = ev.assignments.find(c);
        if (it == ev.assignments.end()) {
          row.push_back("");
        } else if (const auto* s = std::get_if<std::string>(&it->second)) {
          row.push_back(*s == kMissingValue ? "" : *s);
        } else if (const auto* d = std::get_if<double>(&it->second)) {
          row.push_back(format_g(*d, 17));
        } else {
          row.push_back(std::get<bool>(it->second) ? "true" : "false");
        }
      }
      out += csv_join(row);
    }
  return out;
}

}  // namespace pmxplain
