#include <doctest.h>

#include "pmxplain/event_log.hpp"
#include "test_support.hpp"

using namespace pmxplain;

namespace {

const char* kTinyLog =
    "case_id,activity,timestamp,amount\n"
    "c1,A,2026-01-01T00:00:00,10\n"
    "c1,B,2026-01-01T00:01:40,20\n"
    "c1,C,2026-01-01T00:04:10,30\n";

IngestResult ingest_text(const std::string& text,
                         ColumnMapping mapping = {}) {
  return ingest_table(parse_csv(text, mapping.delimiter), mapping);
}

Trace trace_with_activities(const std::vector<std::string>& acts,
                            const std::vector<int64_t>& stamps) {
  Trace t;
  t.case_id = "t";
  for (size_t i = 0; i < acts.size(); ++i) {
    Event e;
    e.timestamp = stamps[i];
    e.assignments[kActivityAttribute] = acts[i];
    t.events.push_back(e);
  }
  return t;
}

}  // namespace

TEST_CASE("ingest: three rows, one case, three events") {
  IngestResult r = ingest_text(kTinyLog);
  REQUIRE(r.log.traces.size() == 1);
  const Trace& t = r.log.traces[0];
  CHECK(t.case_id == "c1");
  REQUIRE(t.length() == 3);
  CHECK(*t.events[0].activity() == "A");
  CHECK(*t.events[2].activity() == "C");
  CHECK(t.events[1].timestamp - t.events[0].timestamp == 100);

  const AttributeSchema* act = r.log.find_attribute(kActivityAttribute);
  REQUIRE(act != nullptr);
  CHECK(act->domain == std::vector<std::string>{"A", "B", "C"});
  const AttributeSchema* amount = r.log.find_attribute("amount");
  REQUIRE(amount != nullptr);
  CHECK(amount->kind == AttributeKind::numeric);
  CHECK(amount->num_min == 10.0);
  CHECK(amount->num_max == 30.0);
}

TEST_CASE("ingest: rows sorted by timestamp within a case") {
  std::string shuffled =
      "case_id,activity,timestamp\n"
      "c1,C,2026-01-01T00:04:10\n"
      "c1,A,2026-01-01T00:00:00\n"
      "c1,B,2026-01-01T00:01:40\n";
  IngestResult r = ingest_text(shuffled);
  REQUIRE(r.log.traces.size() == 1);
  CHECK(*r.log.traces[0].events[0].activity() == "A");
  CHECK(*r.log.traces[0].events[2].activity() == "C");
  for (size_t i = 1; i < r.log.traces[0].length(); ++i)
    CHECK(r.log.traces[0].events[i].timestamp >=
          r.log.traces[0].events[i - 1].timestamp);
}

TEST_CASE("ingest: missing categorical cells map to the sentinel") {
  std::string text =
      "case_id,activity,timestamp,reason\n"
      "c1,A,2026-01-01T00:00:00,ok\n"
      "c1,B,2026-01-01T00:01:00,\n"
      "c2,A,2026-01-01T01:00:00,bad\n";
  IngestResult r = ingest_text(text);
  const AttributeSchema* reason = r.log.find_attribute("reason");
  REQUIRE(reason != nullptr);
  CHECK(reason->kind == AttributeKind::categorical);
  int sentinel_count = 0;
  for (const auto& v : reason->domain)
    if (v == kMissingValue) ++sentinel_count;
  CHECK(sentinel_count == 1);
  CHECK(std::get<std::string>(
            r.log.traces[0].events[1].assignments.at("reason")) ==
        kMissingValue);
}

TEST_CASE("ingest: boolean column inference") {
  std::string text =
      "case_id,activity,timestamp,urgent\n"
      "c1,A,2026-01-01T00:00:00,true\n"
      "c1,B,2026-01-01T00:01:00,false\n";
  IngestResult r = ingest_text(text);
  const AttributeSchema* urgent = r.log.find_attribute("urgent");
  REQUIRE(urgent != nullptr);
  CHECK(urgent->kind == AttributeKind::boolean);
  CHECK(std::get<bool>(r.log.traces[0].events[0].assignments.at("urgent")));
}

TEST_CASE("ingest: unparsable timestamp drops the whole trace with a line number") {
  std::string text =
      "case_id,activity,timestamp\n"
      "c1,A,2026-01-01T00:00:00\n"
      "c1,B,not-a-time\n"
      "c2,A,2026-01-01T01:00:00\n";
  IngestResult r = ingest_text(text);
  CHECK(r.log.traces.size() == 1);
  CHECK(r.log.traces[0].case_id == "c2");
  CHECK(r.traces_dropped == 1);
  CHECK(r.rows_bad == 1);
  REQUIRE(r.row_errors.size() == 1);
  CHECK(r.row_errors[0].find("line 3") != std::string::npos);
  CHECK(r.row_errors[0].find("c1") != std::string::npos);
}

TEST_CASE("ingest: missing mandatory column is a config error") {
  CHECK_THROWS_AS(ingest_text("case_id,activity\nc1,A\n"), ValidationError);
  ColumnMapping m;
  m.case_column = "nope";
  CHECK_THROWS_WITH_AS(ingest_text(kTinyLog, m),
                       doctest::Contains("nope"), ValidationError);
}

TEST_CASE("ingest: idempotent") {
  IngestResult a = ingest_text(kTinyLog);
  IngestResult b = ingest_text(kTinyLog);
  CHECK(a.log == b.log);
}

TEST_CASE("ingest: duplicating a case under a new id adds one trace, schema unchanged") {
  std::string dup = std::string(kTinyLog) +
                    "c2,A,2026-01-01T00:00:00,10\n"
                    "c2,B,2026-01-01T00:01:40,20\n"
                    "c2,C,2026-01-01T00:04:10,30\n";
  IngestResult base = ingest_text(kTinyLog);
  IngestResult twice = ingest_text(dup);
  CHECK(twice.log.traces.size() == base.log.traces.size() + 1);
  CHECK(twice.log.schema == base.log.schema);
  // multiset semantics: the two traces differ only in case id
  CHECK(twice.log.traces[0].events == twice.log.traces[1].events);
}

TEST_CASE("label: remaining time") {
  Trace t = trace_with_activities({"A", "B", "C"}, {0, 100, 250});
  KpiLabeler rem{KpiKind::remaining_time, ""};
  CHECK(label(rem, t, 1) == 250.0);
  CHECK(label(rem, t, 2) == 150.0);
  CHECK(label(rem, t, 3) == 0.0);
  CHECK_THROWS_AS(label(rem, t, 0), ValidationError);
  CHECK_THROWS_AS(label(rem, t, 4), ValidationError);
}

TEST_CASE("label: activity occurrence truth table") {
  Trace t = trace_with_activities({"B", "A", "C"}, {0, 1, 2});
  KpiLabeler occ{KpiKind::activity_occurrence, "A"};
  CHECK(label(occ, t, 1) == 1.0);
  CHECK(label(occ, t, 2) == 0.0);   // A occurs at position 2, not after it
  CHECK(label(occ, t, 3) == 0.0);   // i == n is always false
}

TEST_CASE("label: end-of-case numeric") {
  Trace t = trace_with_activities({"A", "B"}, {0, 10});
  t.events[1].assignments["sat"] = 4.5;
  KpiLabeler eoc{KpiKind::end_of_case_numeric, "sat"};
  CHECK(label(eoc, t, 1) == 4.5);
  CHECK(label(eoc, t, 2) == 4.5);

  Trace missing = trace_with_activities({"A", "B"}, {0, 10});
  missing.events[0].assignments["sat"] = 1.0;  // not on the final event
  CHECK_THROWS_AS(label(eoc, missing, 1), LabelingError);
}

TEST_CASE("label: occurrence matches a brute-force suffix scan on random traces") {
  Rng rng(42);
  std::vector<std::string> alphabet = {"A", "B", "C", "D"};
  for (int iter = 0; iter < 300; ++iter) {
    size_t len = 1 + rng.next_below(8);
    std::vector<std::string> acts;
    std::vector<int64_t> stamps;
    for (size_t i = 0; i < len; ++i) {
      acts.push_back(alphabet[rng.next_below(alphabet.size())]);
      stamps.push_back(int64_t(i) * 10);
    }
    Trace t = trace_with_activities(acts, stamps);
    std::string target = alphabet[rng.next_below(alphabet.size())];
    KpiLabeler occ{KpiKind::activity_occurrence, target};
    KpiLabeler rem{KpiKind::remaining_time, ""};
    for (size_t i = 1; i <= len; ++i) {
      bool expected = false;
      for (size_t j = i; j < len; ++j)  // events strictly after position i
        if (acts[j] == target) expected = true;
      CHECK(label(occ, t, i) == (expected ? 1.0 : 0.0));
    }
    CHECK(label(rem, t, len) == 0.0);
  }
}

TEST_CASE("enumerate_prefixes") {
  EventLog log;
  log.traces.push_back(trace_with_activities({"A", "B"}, {0, 1}));
  log.traces.push_back(trace_with_activities({"A", "B", "C", "D"}, {0, 1, 2, 3}));

  SUBCASE("all prefixes") {
    auto p = enumerate_prefixes(log, 1);
    CHECK(p.size() == 6);
    CHECK(p[0] == PrefixRef{0, 1});
    CHECK(p[5] == PrefixRef{1, 4});
  }
  SUBCASE("min length 2 over lengths 2 and 4 yields 4 prefixes") {
    auto p = enumerate_prefixes(log, 2);
    CHECK(p.size() == 4);
  }
  SUBCASE("single trace of length 3") {
    EventLog one;
    one.traces.push_back(trace_with_activities({"A", "B", "C"}, {0, 1, 2}));
    CHECK(enumerate_prefixes(one, 1).size() == 3);
  }
  SUBCASE("empty log") {
    EventLog empty;
    CHECK(enumerate_prefixes(empty, 1).empty());
  }
  SUBCASE("min_len must be positive") {
    CHECK_THROWS_AS(enumerate_prefixes(log, 0), ValidationError);
  }
}

TEST_CASE("csv parsing: quotes, embedded delimiters, CRLF") {
  CsvTable t = parse_csv(
      "a,b,c\r\n"
      "1,\"x,y\",\"line1\nline2\"\r\n"
      "2,\"he said \"\"hi\"\"\",z\n");
  REQUIRE(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].cells[1] == "x,y");
  CHECK(t.rows[0].cells[2] == "line1\nline2");
  CHECK(t.rows[1].cells[1] == "he said \"hi\"");
  CHECK(t.rows[1].line == 4);  // row 1's quoted newline consumed line 3
  CHECK_THROWS_AS(parse_csv("a,b\n\"unterminated"), ValidationError);

  // writer round trip through escaping
  std::string line = csv_join({"plain", "x,y", "q\"q", "nl\nnl"});
  CsvTable back = parse_csv("h1,h2,h3,h4\n" + line);
  CHECK(back.rows[0].cells ==
        std::vector<std::string>{"plain", "x,y", "q\"q", "nl\nnl"});

  CsvTable semi = parse_csv("a;b\n1;2\n", ';');
  CHECK(semi.rows[0].cells == std::vector<std::string>{"1", "2"});
}

TEST_CASE("parse_timestamp formats") {
  CHECK(*parse_timestamp("1970-01-01T00:00:10", "%Y-%m-%dT%H:%M:%S") == 10);
  CHECK(*parse_timestamp("123.7", "epoch") == 123);
  CHECK(!parse_timestamp("garbage", "%Y-%m-%dT%H:%M:%S").has_value());
  CHECK(!parse_timestamp("x12", "epoch").has_value());
  // round trip through the writer
  CHECK(*parse_timestamp(format_timestamp(1767225600), "%Y-%m-%dT%H:%M:%S") ==
        1767225600);
}
