#include <doctest.h>

#include <filesystem>

#include "pmxplain/reporting.hpp"
#include "test_support.hpp"

using namespace pmxplain;

namespace {

FeatureSchema demo_schema() {
  FeatureSchema s;
  for (const char* v : {"BACK-OFFICE", "DIRECTOR"}) {
    FeatureDescriptor f;
    f.attribute = "ROLE";
    f.value = v;
    f.kind = FeatureKind::onehot;
    s.features.push_back(f);
  }
  FeatureDescriptor amount;
  amount.attribute = "AMOUNT";
  amount.kind = FeatureKind::numeric;
  amount.median = 100.0;
  s.features.push_back(amount);
  s.onehot_groups.push_back({0, 2});
  return s;
}

ExplanationRecord rec(const std::string& attr, Relation rel,
                      const std::string& value, double numeric, int offset,
                      double weight) {
  return {attr, rel, value, numeric, offset, weight};
}

}  // namespace

TEST_CASE("heatmap labels") {
  FeatureSchema s = demo_schema();
  CHECK(heatmap_label(rec("ROLE", Relation::equals, "BACK-OFFICE", 0, 0, 1), s) ==
        "ROLE=BACK-OFFICE");
  CHECK(heatmap_label(rec("ROLE", Relation::not_equals, "DIRECTOR", 0, 0, 1), s) ==
        "ROLE!=DIRECTOR");
  CHECK(heatmap_label(rec("AMOUNT", Relation::numeric, "", 40, 0, 1), s) ==
        "Low value of AMOUNT");
  CHECK(heatmap_label(rec("AMOUNT", Relation::numeric, "", 100, 0, 1), s) ==
        "High value of AMOUNT");
}

TEST_CASE("aggregate: net counts per cell") {
  FeatureSchema s = demo_schema();
  std::vector<std::vector<ExplanationRecord>> prefixes;
  for (int i = 0; i < 3; ++i)
    prefixes.push_back({rec("ROLE", Relation::equals, "BACK-OFFICE", 0, 0, 2.0)});
  prefixes.push_back({rec("ROLE", Relation::equals, "BACK-OFFICE", 0, 0, -1.0)});
  HeatmapMatrix hm = aggregate_heatmap(prefixes, 5, s, "remaining_time");
  REQUIRE(hm.row_labels.size() == 1);
  CHECK(hm.row_labels[0] == "ROLE=BACK-OFFICE");
  CHECK(hm.cells[0][0] == 2);  // 3 positive - 1 negative
  CHECK(hm.prefix_count == 4);
}

TEST_CASE("aggregate: one prefix moves a cell by at most one") {
  FeatureSchema s = demo_schema();
  // two same-label records in one prefix: psi sum +3 -1 = +2 -> one +1
  std::vector<std::vector<ExplanationRecord>> prefixes = {
      {rec("ROLE", Relation::equals, "BACK-OFFICE", 0, 0, 3.0),
       rec("ROLE", Relation::equals, "BACK-OFFICE", 0, 0, -1.0)}};
  HeatmapMatrix hm = aggregate_heatmap(prefixes, 5, s, "kpi");
  CHECK(hm.cells[0][0] == 1);

  // exactly cancelling records contribute nothing
  std::vector<std::vector<ExplanationRecord>> cancel = {
      {rec("ROLE", Relation::equals, "BACK-OFFICE", 0, 0, 3.0),
       rec("ROLE", Relation::equals, "BACK-OFFICE", 0, 0, -3.0)}};
  CHECK(aggregate_heatmap(cancel, 5, s, "kpi").row_labels.empty());
}

TEST_CASE("aggregate: offsets beyond the window are dropped; rows sorted and capped") {
  FeatureSchema s = demo_schema();
  std::vector<std::vector<ExplanationRecord>> prefixes;
  prefixes.push_back({rec("ROLE", Relation::equals, "BACK-OFFICE", 0, -7, 9.0)});
  for (int i = 0; i < 3; ++i)
    prefixes.push_back({rec("ROLE", Relation::equals, "DIRECTOR", 0, -1, 1.0)});
  prefixes.push_back({rec("AMOUNT", Relation::numeric, "", 40, 0, 1.0)});
  HeatmapMatrix hm = aggregate_heatmap(prefixes, 5, s, "kpi");
  REQUIRE(hm.row_labels.size() == 2);  // the offset -7 record fell outside
  CHECK(hm.row_labels[0] == "ROLE=DIRECTOR");  // peak 3 sorts first
  CHECK(hm.cells[0][1] == 3);
  CHECK(hm.row_labels[1] == "Low value of AMOUNT");

  HeatmapMatrix capped = aggregate_heatmap(prefixes, 5, s, "kpi", 1);
  CHECK(capped.row_labels.size() == 1);
  CHECK(capped.row_labels[0] == "ROLE=DIRECTOR");
}

TEST_CASE("aggregate: total cell mass is bounded by prefix contributions") {
  FeatureSchema s = demo_schema();
  Rng rng(9);
  std::vector<std::vector<ExplanationRecord>> prefixes;
  for (int p = 0; p < 50; ++p) {
    std::vector<ExplanationRecord> recs;
    size_t n = rng.next_below(4);
    for (size_t i = 0; i < n; ++i)
      recs.push_back(rec("ROLE",
                         rng.next_below(2) ? Relation::equals
                                           : Relation::not_equals,
                         rng.next_below(2) ? "DIRECTOR" : "BACK-OFFICE", 0,
                         -int(rng.next_below(5)),
                         rng.next_double() * 2.0 - 1.0));
    prefixes.push_back(std::move(recs));
  }
  HeatmapMatrix hm = aggregate_heatmap(prefixes, 5, s, "kpi");
  int64_t total = 0;
  for (const auto& row : hm.cells)
    for (int64_t c : row) total += std::abs(c);
  // each prefix moves each (label, offset) cell by at most one
  CHECK(total <= int64_t(prefixes.size()) * int64_t(hm.row_labels.size()) * 5);
  for (const auto& row : hm.cells)
    for (int64_t c : row) CHECK(std::abs(c) <= int64_t(prefixes.size()));
}

TEST_CASE("aggregate: empty input gives an empty matrix") {
  FeatureSchema s = demo_schema();
  std::vector<std::vector<ExplanationRecord>> none;
  HeatmapMatrix hm = aggregate_heatmap(none, 5, s, "kpi");
  CHECK(hm.row_labels.empty());
  CHECK(hm.prefix_count == 0);
  CHECK(heatmap_to_csv(hm) == "explanation,0,-1,-2,-3,-4\n");
  CHECK(heatmap_to_svg(hm).find("<svg") == 0);
}

TEST_CASE("heatmap CSV: exact grid") {
  HeatmapMatrix hm;
  hm.window = 3;
  hm.kpi_name = "kpi";
  hm.prefix_count = 2;
  hm.row_labels = {"ROLE=BACK-OFFICE", "Low value of AMOUNT"};
  hm.cells = {{-5, 2, 0}, {1, 0, 0}};
  CHECK(heatmap_to_csv(hm) ==
        "explanation,0,-1,-2\n"
        "ROLE=BACK-OFFICE,-5,2,0\n"
        "Low value of AMOUNT,1,0,0\n");
}

TEST_CASE("SVG rendering is byte-deterministic and matches the golden file") {
  HeatmapMatrix hm;
  hm.window = 3;
  hm.kpi_name = "remaining_time";
  hm.prefix_count = 12;
  hm.row_labels = {"ROLE=BACK-OFFICE", "CLOSURE_TYPE!=Inheritance"};
  hm.cells = {{-10, 3, 0}, {5, -2, 10}};
  std::string a = heatmap_to_svg(hm);
  std::string b = heatmap_to_svg(hm);
  CHECK(a == b);
  CHECK(a.find("rgb(255,60,60)") != std::string::npos);   // |cell| == max: full red
  CHECK(a.find("rgb(60,60,255)") != std::string::npos);   // -10 on a max of 10
  CHECK(a.find("rgb(255,255,255)") != std::string::npos); // zero cell neutral

  std::string golden_path = std::string(PMX_GOLDEN_DIR) + "/heatmap_small.svg";
  REQUIRE(std::filesystem::exists(golden_path));
  CHECK(a == read_file(golden_path));
}

TEST_CASE("SVG: zero-magnitude matrix renders uniformly neutral") {
  HeatmapMatrix hm;
  hm.window = 2;
  hm.kpi_name = "kpi";
  hm.prefix_count = 1;
  hm.row_labels = {"X=1"};
  hm.cells = {{0, 0}};
  std::string svg = heatmap_to_svg(hm);
  CHECK(svg.find("rgb(255,60,60)") == std::string::npos);
  CHECK(svg.find("rgb(60,60,255)") == std::string::npos);
}

TEST_CASE("duration formatting") {
  CHECK(format_duration(454020) == "5d 6h 7m");       // 5d 6h 7m exactly
  CHECK(format_duration(0) == "0d 0h 0m");
  CHECK(format_duration(59) == "0d 0h 0m");           // seconds are dropped
  CHECK(format_duration(3600 * 26 + 60 * 31) == "1d 2h 31m");
  CHECK(format_duration(-500) == "0d 0h 0m");         // clamped for display
}

TEST_CASE("prediction formatting per KPI kind") {
  CHECK(format_prediction(454020, KpiKind::remaining_time) == "5d 6h 7m");
  CHECK(format_prediction(0.7, KpiKind::activity_occurrence) == "1");
  CHECK(format_prediction(0.3, KpiKind::activity_occurrence) == "0");
  CHECK(format_prediction(12.5, KpiKind::end_of_case_numeric) == "12.5");
}

TEST_CASE("online table: phrases, suffixes, AND joining, empty sides") {
  FeatureSchema s = demo_schema();
  std::vector<OnlineCase> cases;
  OnlineCase a;
  a.case_id = "201811010829";
  a.prediction = 2 * 86400 + 2 * 3600 + 31 * 60;  // 2d 2h 31m
  a.records.push_back(rec("ROLE", Relation::not_equals, "BACK-OFFICE", 0, -1, 4.0));
  a.records.push_back(rec("ROLE", Relation::equals, "DIRECTOR", 0, 0, 2.0));
  a.records.push_back(rec("AMOUNT", Relation::numeric, "", 40, -2, 1.0));
  cases.push_back(a);

  OnlineCase b;
  b.case_id = "201810011258";
  b.prediction = 6000.0;  // 1h 40m
  b.records.push_back(
      rec("CLOSURE_TYPE", Relation::not_equals, "Inheritance", 0, 0, -3.0));
  cases.push_back(b);

  std::string csv = render_online_table(cases, 2, KpiKind::remaining_time, s);
  CHECK(csv.find("CASE_ID,PREDICTION,INCREASING,DECREASING\n") == 0);
  // top-2 increasing, sorted by |psi|, offset suffix only when negative
  CHECK(csv.find("201811010829,2d 2h 31m,"
                 "ROLE!=BACK-OFFICE (-1) AND ROLE=DIRECTOR,-\n") !=
        std::string::npos);
  CHECK(csv.find("201810011258,0d 1h 40m,-,CLOSURE_TYPE!=Inheritance\n") !=
        std::string::npos);
}

TEST_CASE("online table: top-k caps each side separately") {
  FeatureSchema s = demo_schema();
  OnlineCase c;
  c.case_id = "x";
  c.prediction = 1.0;
  for (int i = 1; i <= 4; ++i)
    c.records.push_back(rec("AMOUNT", Relation::numeric, "", 40, -i, double(i)));
  std::vector<OnlineCase> cases = {c};
  std::string csv = render_online_table(cases, 2, KpiKind::end_of_case_numeric, s);
  CHECK(csv.find("Low value of AMOUNT (-4) AND Low value of AMOUNT (-3)") !=
        std::string::npos);
  CHECK(csv.find("(-2)") == std::string::npos);
}

TEST_CASE("every online phrase is a heatmap label plus an offset suffix") {
  FeatureSchema s = demo_schema();
  Rng rng(3);
  for (int iter = 0; iter < 60; ++iter) {
    Relation rel = Relation(rng.next_below(3));
    std::string value = rel == Relation::numeric
                            ? ""
                            : (rng.next_below(2) ? "DIRECTOR" : "BACK-OFFICE");
    std::string attr = rel == Relation::numeric ? "AMOUNT" : "ROLE";
    ExplanationRecord r = rec(attr, rel, value, rng.next_double() * 200.0,
                              -int(rng.next_below(4)),
                              rng.next_double() * 2.0 - 1.0);
    if (r.weight == 0) continue;
    std::string phrase = explanation_phrase(r, s);
    std::string label = heatmap_label(r, s);
    CHECK(phrase.substr(0, label.size()) == label);
    if (r.timestep_offset < 0)
      CHECK(phrase.find("(" + std::to_string(r.timestep_offset) + ")") !=
            std::string::npos);
    else
      CHECK(phrase == label);
  }
}
