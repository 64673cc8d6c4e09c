#include <doctest.h>

#include <cmath>

#include "pmxplain/explainer.hpp"
#include "test_support.hpp"

using namespace pmxplain;
using pmxtest::make_prefix;

namespace {

// An attribution with the given psi on its active features (max_len 1).
ShapleyAttribution attribution_of(const std::vector<double>& psi) {
  ShapleyAttribution a;
  a.max_len = 1;
  a.width = int(psi.size());
  a.length = 1;
  a.values = psi;
  for (int i = 0; i < a.width; ++i) a.active.push_back(i);
  return a;
}

// Schema with one categorical role {a,b,c} and one numeric amount
// (median 15), 4 features wide.
FeatureSchema demo_schema() {
  FeatureSchema s;
  for (const char* v : {"a", "b", "c"}) {
    FeatureDescriptor f;
    f.attribute = "role";
    f.value = v;
    f.kind = FeatureKind::onehot;
    s.features.push_back(f);
  }
  FeatureDescriptor amount;
  amount.attribute = "amount";
  amount.kind = FeatureKind::numeric;
  amount.median = 15.0;
  s.features.push_back(amount);
  s.onehot_groups.push_back({0, 3});
  return s;
}

}  // namespace

TEST_CASE("filter interval: hand-computed [0.4645, 7.5355] case") {
  ShapleyAttribution a = attribution_of({1, 2, 3, 10});
  FilterInterval interval = significance_interval(a, 1.0);
  CHECK(interval.mu == doctest::Approx(4.0));
  CHECK(interval.xi == doctest::Approx(std::sqrt(12.5)));
  CHECK(interval.lo == doctest::Approx(0.46446609));
  CHECK(interval.hi == doctest::Approx(7.53553391));
  auto sig = filter_significant(a, 1.0);
  REQUIRE(sig.size() == 1);
  CHECK(sig[0].first == 3);
  CHECK(sig[0].second == 10.0);
}

TEST_CASE("filter: delta zero keeps everything off the mean") {
  ShapleyAttribution a = attribution_of({1, 2, 3, 10});
  auto sig = filter_significant(a, 0.0);
  CHECK(sig.size() == 4);  // mu = 4 is attained by no feature
  ShapleyAttribution with_mean = attribution_of({2, 4, 6});
  auto sig2 = filter_significant(with_mean, 0.0);
  CHECK(sig2.size() == 2);  // the feature at exactly mu=4 is inside
}

TEST_CASE("filter: all-equal attributions yield no significant features") {
  ShapleyAttribution a = attribution_of({3, 3, 3});
  CHECK(filter_significant(a, 1.0).empty());
  CHECK(filter_significant(a, 0.0).empty());
}

TEST_CASE("filter: boundary ties are inside the interval") {
  // mu = 1, xi = 1, I = [0, 2]: both endpoints are filtered out
  ShapleyAttribution a = attribution_of({0, 2});
  CHECK(filter_significant(a, 1.0).empty());
}

TEST_CASE("filter: mu and xi ignore frozen zeros") {
  // same active values as the fixture, but embedded in a wider vector with
  // structural zeros that are not active
  ShapleyAttribution a;
  a.max_len = 2;
  a.width = 4;
  a.length = 1;
  a.values = {0, 0, 0, 0, 1, 2, 3, 10};
  a.active = {4, 5, 6, 7};
  FilterInterval interval = significance_interval(a, 1.0);
  CHECK(interval.mu == doctest::Approx(4.0));
  auto sig = filter_significant(a, 1.0);
  REQUIRE(sig.size() == 1);
  CHECK(sig[0].first == 7);
}

TEST_CASE("to_explanations: one-hot and numeric mapping with offsets") {
  FeatureSchema s = demo_schema();
  // two-event prefix, width 4, M = 3 (one padding row)
  // event 1: role=b, amount 20; event 2: role=a, amount 5
  EncodedPrefix inst = make_prefix({0, 1, 0, 20, 1, 0, 0, 5}, 3, 4, 2);
  ShapleyAttribution a;
  a.max_len = 3;
  a.width = 4;
  a.length = 2;
  a.values.assign(12, 0.0);
  a.values[4 + 1] = -2.0;  // row 1 (offset -1), role=b (active one-hot)
  a.values[8 + 2] = -0.5;  // row 2 (offset 0), role=c (inactive one-hot)
  a.values[4 + 3] = 2.5;   // row 1 (offset -1), amount
  a.active = {5, 7, 10};

  std::vector<std::pair<int, double>> sig = {{5, -2.0}, {7, 2.5}, {10, -0.5}};
  auto recs = to_explanations(a, sig, s, inst);
  REQUIRE(recs.size() == 3);

  CHECK(recs[0].attribute == "role");
  CHECK(recs[0].relation == Relation::equals);
  CHECK(recs[0].value == "b");
  CHECK(recs[0].timestep_offset == -1);
  CHECK(recs[0].weight == -2.0);
  CHECK(!recs[0].increasing());

  CHECK(recs[1].attribute == "amount");
  CHECK(recs[1].relation == Relation::numeric);
  CHECK(recs[1].numeric_value == 20.0);
  CHECK(recs[1].timestep_offset == -1);
  CHECK(recs[1].increasing());

  CHECK(recs[2].attribute == "role");
  CHECK(recs[2].relation == Relation::not_equals);
  CHECK(recs[2].value == "c");
  CHECK(recs[2].timestep_offset == 0);
}

TEST_CASE("to_explanations: zero-weight indices are dropped, padding rejected") {
  FeatureSchema s = demo_schema();
  EncodedPrefix inst = make_prefix({0, 1, 0, 20}, 3, 4, 1);
  ShapleyAttribution a;
  a.max_len = 3;
  a.width = 4;
  a.length = 1;
  a.values.assign(12, 0.0);
  a.active = {9};

  std::vector<std::pair<int, double>> zero_sig = {{9, 0.0}};
  CHECK(to_explanations(a, zero_sig, s, inst).empty());

  std::vector<std::pair<int, double>> padding_sig = {{1, 1.0}};
  CHECK_THROWS_AS(to_explanations(a, padding_sig, s, inst), RuntimeError);
}

TEST_CASE("k_lookup: Def.-style matching") {
  std::vector<AttributeSchema> attrs;
  attrs.push_back({"CLOSURE_TYPE", AttributeKind::categorical,
                   {"Bank Recess", "Inheritance", "Porting"}, 0, 0});
  attrs.push_back({"ROLE", AttributeKind::categorical,
                   {"CLERK", "DIRECTOR"}, 0, 0});
  attrs.push_back({"amount", AttributeKind::numeric, {}, 0.0, 100.0});

  SUBCASE("no records: K is identically zero") {
    std::vector<ExplanationRecord> none;
    CHECK(k_lookup(none, attrs, "ROLE", std::string("CLERK"), 0) == 0.0);
  }

  SUBCASE("equals record matches only its own value") {
    std::vector<ExplanationRecord> recs = {
        {"ROLE", Relation::equals, "DIRECTOR", 0, 0, 5.0}};
    CHECK(k_lookup(recs, attrs, "ROLE", std::string("DIRECTOR"), 0) == 5.0);
    CHECK(k_lookup(recs, attrs, "ROLE", std::string("CLERK"), 0) == 0.0);
    CHECK(k_lookup(recs, attrs, "ROLE", std::string("DIRECTOR"), -1) == 0.0);
  }

  SUBCASE("not_equals matches the rest of the domain") {
    std::vector<ExplanationRecord> recs = {
        {"CLOSURE_TYPE", Relation::not_equals, "Inheritance", 0, 0, -3.0}};
    CHECK(k_lookup(recs, attrs, "CLOSURE_TYPE", std::string("Porting"), 0) == -3.0);
    CHECK(k_lookup(recs, attrs, "CLOSURE_TYPE", std::string("Bank Recess"), 0) == -3.0);
    CHECK(k_lookup(recs, attrs, "CLOSURE_TYPE", std::string("Inheritance"), 0) == 0.0);
  }

  SUBCASE("values outside the declared domain contribute zero") {
    std::vector<ExplanationRecord> recs = {
        {"ROLE", Relation::not_equals, "CLERK", 0, 0, 2.0},
        {"amount", Relation::numeric, "", 42.0, 0, 1.5}};
    CHECK(k_lookup(recs, attrs, "ROLE", std::string("INTERN"), 0) == 0.0);
    CHECK(k_lookup(recs, attrs, "amount", 50.0, 0) == 1.5);
    CHECK(k_lookup(recs, attrs, "amount", 500.0, 0) == 0.0);
    CHECK(k_lookup(recs, attrs, "UNKNOWN", std::string("x"), 0) == 0.0);
  }

  SUBCASE("overlapping matches sum") {
    std::vector<ExplanationRecord> recs = {
        {"ROLE", Relation::equals, "DIRECTOR", 0, 0, 5.0},
        {"ROLE", Relation::not_equals, "CLERK", 0, 0, 2.0}};
    CHECK(k_lookup(recs, attrs, "ROLE", std::string("DIRECTOR"), 0) == 7.0);
    CHECK(k_lookup(recs, attrs, "ROLE", std::string("CLERK"), 0) == 0.0);
  }
}

TEST_CASE("K support is bounded by the record count") {
  std::vector<AttributeSchema> attrs;
  attrs.push_back({"ROLE", AttributeKind::categorical,
                   {"a", "b", "c", "d"}, 0, 0});
  attrs.push_back({"amount", AttributeKind::numeric, {}, 0.0, 10.0});
  Rng rng(17);
  for (int iter = 0; iter < 40; ++iter) {
    std::vector<ExplanationRecord> recs;
    size_t n = 1 + rng.next_below(6);
    for (size_t i = 0; i < n; ++i) {
      if (rng.next_below(2)) {
        recs.push_back({"ROLE",
                        rng.next_below(2) ? Relation::equals
                                          : Relation::not_equals,
                        std::string(1, char('a' + rng.next_below(4))), 0,
                        -int(rng.next_below(3)),
                        rng.next_double() * 2.0 - 1.0});
      } else {
        recs.push_back({"amount", Relation::numeric, "", 5.0,
                        -int(rng.next_below(3)),
                        rng.next_double() * 2.0 - 1.0});
      }
    }
    // count distinct (attribute, offset) pairs with any nonzero K over the
    // declared domains
    std::set<std::pair<std::string, int>> supported;
    for (int offset = -2; offset <= 0; ++offset) {
      for (const char* v : {"a", "b", "c", "d"})
        if (k_lookup(recs, attrs, "ROLE", std::string(v), offset) != 0.0)
          supported.insert({"ROLE", offset});
      if (k_lookup(recs, attrs, "amount", 5.0, offset) != 0.0)
        supported.insert({"amount", offset});
    }
    CHECK(supported.size() <= recs.size());
  }
}

TEST_CASE("records serialize to CSV with the documented columns") {
  std::vector<std::pair<std::string, std::vector<ExplanationRecord>>> per_case;
  per_case.push_back(
      {"case9",
       {{"ROLE", Relation::not_equals, "BACK-OFFICE", 0, -1, -4.25},
        {"amount", Relation::numeric, "", 17.5, 0, 2.0}}});
  CHECK(records_to_csv(per_case) ==
        "case_id,attribute,relation,value,timestep_offset,weight\n"
        "case9,ROLE,not_equals,BACK-OFFICE,-1,-4.25\n"
        "case9,amount,numeric,17.5,0,2\n");
}

TEST_CASE("filter soundness on a randomized attribution") {
  Rng rng(77);
  for (int iter = 0; iter < 50; ++iter) {
    size_t n = 2 + rng.next_below(12);
    std::vector<double> psi(n);
    for (auto& v : psi) v = rng.next_double() * 10.0 - 5.0;
    ShapleyAttribution a = attribution_of(psi);
    double delta = rng.next_double() * 2.0;
    FilterInterval interval = significance_interval(a, delta);
    auto sig = filter_significant(a, delta);
    std::set<int> emitted;
    for (auto [i, w] : sig) {
      emitted.insert(i);
      CHECK(!interval.contains(w));  // everything emitted is outside
    }
    for (int i : a.active)  // everything outside is emitted
      if (!interval.contains(a.values[size_t(i)]))
        CHECK(emitted.count(i) == 1);
  }
}
