#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>
#include <unistd.h>

#include "echr/dataset.hpp"
#include "echr/errors.hpp"
#include "echr/rng.hpp"

using namespace echr;

namespace {

ArticlePool pool_of(const std::string& article, long v, long nv) {
  std::vector<LabeledCase> cases;
  char id[32];
  for (long i = 0; i < v; ++i) {
    std::snprintf(id, sizeof(id), "v%05ld", i);
    cases.push_back({id, article, Label::violation});
  }
  for (long i = 0; i < nv; ++i) {
    std::snprintf(id, sizeof(id), "n%05ld", i);
    cases.push_back({id, article, Label::nonviolation});
  }
  return make_pool(article, std::move(cases));
}

RawDocument doc(std::string id, std::set<std::string> articles, std::map<std::string, bool> outcome) {
  RawDocument d;
  d.doc_id = std::move(id);
  d.articles = std::move(articles);
  d.violation_by_article = std::move(outcome);
  d.decision_date = "2001-01-01";
  d.body = "x";
  return d;
}

void check_split_invariants(const DatasetSplit& split, const ArticlePool& pool) {
  std::set<std::string> train_ids, test_ids;
  for (const auto& c : split.train) train_ids.insert(c.doc_id);
  for (const auto& c : split.test) test_ids.insert(c.doc_id);
  CHECK(train_ids.size() == split.train.size());
  CHECK(test_ids.size() == split.test.size());
  std::vector<std::string> both;
  std::set_intersection(train_ids.begin(), train_ids.end(), test_ids.begin(), test_ids.end(),
                        std::back_inserter(both));
  CHECK(both.empty());
  CHECK(split.train_count(Label::violation) == split.train_count(Label::nonviolation));
  CHECK(split.train_count(Label::violation) >= 1);
  CHECK(std::abs(split.test_violation_ratio() - split.r_target) <= 1.0 / static_cast<double>(split.test.size()) + 1e-12);
  std::set<std::string> pool_ids;
  for (const auto& c : pool.cases) pool_ids.insert(c.doc_id);
  for (const auto& c : split.train) CHECK(pool_ids.contains(c.doc_id));
  for (const auto& c : split.test) CHECK(pool_ids.contains(c.doc_id));
}

}  // namespace

TEST_CASE("label_cases examples") {
  DocumentCollection collection;
  collection.documents = {doc("a", {"6"}, {{"6", true}}), doc("b", {"6"}, {{"6", true}}),
                          doc("c", {"6", "3"}, {{"6", false}, {"3", true}})};
  const auto pool = label_cases(collection, "6");
  CHECK(pool.v_count == 2);
  CHECK(pool.nv_count == 1);
  CHECK(pool.cases.size() == 3);
  CHECK(label_cases(collection, "14").cases.empty());

  collection.documents.push_back(doc("d", {"6"}, {}));
  try {
    label_cases(collection, "6");
    FAIL("expected a missing-outcome error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("judgment d ") != std::string::npos);
  }
}

TEST_CASE("label_cases on a synthetic corpus") {
  SyntheticSpec spec;
  spec.articles = {"2", "6"};
  spec.docs_per_article_per_label = 7;
  const auto pool = label_cases(generate_synthetic(spec), "6");
  CHECK(pool.v_count == 7);
  CHECK(pool.nv_count == 7);
  CHECK(std::is_sorted(pool.cases.begin(), pool.cases.end(),
                       [](const auto& a, const auto& b) { return a.doc_id < b.doc_id; }));
}

TEST_CASE("Article 6 row of the published split table") {
  const auto pool = pool_of("6", 1043, 560);
  const auto split = make_split(pool, 539.0 / 595.0, 0.10, 3);
  CHECK(split.train_count(Label::violation) == 504);
  CHECK(split.train_count(Label::nonviolation) == 504);
  CHECK(split.test_count(Label::violation) == 539);
  CHECK(split.test_count(Label::nonviolation) == 56);
  check_split_invariants(split, pool);
}

TEST_CASE("small balanced pool") {
  const auto pool = pool_of("14", 10, 10);
  const auto split = make_split(pool, 0.5, 0.10, 1);
  CHECK(split.train_count(Label::violation) == 9);
  CHECK(split.train_count(Label::nonviolation) == 9);
  CHECK(split.test_count(Label::violation) == 1);
  CHECK(split.test_count(Label::nonviolation) == 1);
}

TEST_CASE("violation minority pools") {
  const auto pool = pool_of("x", 40, 200);
  const auto split = make_split(pool, 0.2, 0.10, 9);
  CHECK(split.test_count(Label::violation) == 4);
  CHECK(split.test_count(Label::nonviolation) == 16);
  CHECK(split.train_count(Label::violation) == 36);
  check_split_invariants(split, pool);
}

TEST_CASE("degenerate inputs") {
  const auto pool = pool_of("6", 10, 10);
  CHECK_THROWS_WITH_AS(make_split(pool, 1.0, 0.1, 1), doctest::Contains("degenerate historical ratio"),
                       ValidationError);
  CHECK_THROWS_AS(make_split(pool, 0.0, 0.1, 1), ValidationError);
  CHECK_THROWS_AS(make_split(pool_of("6", 1, 10), 0.5, 0.1, 1), ValidationError);
  CHECK_THROWS_AS(make_split(pool_of("6", 2, 2), 0.5, 0.9, 1), ValidationError);
}

TEST_CASE("split properties on random pools") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const long v = 2 + static_cast<long>(rng.uniform_index(300));
    const long nv = 2 + static_cast<long>(rng.uniform_index(300));
    const auto pool = pool_of("a", v, nv);
    const double r = 0.05 + 0.9 * rng.uniform01();
    const double rho = 0.05 + 0.25 * rng.uniform01();
    const auto seed = rng.next();
    try {
      const auto split = make_split(pool, r, rho, seed);
      check_split_invariants(split, pool);
      CHECK(make_split(pool, r, rho, seed) == split);
    } catch (const ValidationError&) {
      // Too small for this ratio; the invariants only bind successful splits.
    }
  }
}

TEST_CASE("split is independent of input order") {
  auto pool = pool_of("6", 50, 30);
  const auto a = make_split(pool, 0.7, 0.1, 5);
  std::reverse(pool.cases.begin(), pool.cases.end());
  const auto b = make_split(make_pool("6", pool.cases), 0.7, 0.1, 5);
  CHECK(a == b);
}

TEST_CASE("historical_ratio examples") {
  CHECK(historical_ratio(pool_of("6", 91, 9)) == doctest::Approx(0.91));
  CHECK(historical_ratio(pool_of("6", 0, 5)) == 0.0);
  CHECK(historical_ratio(pool_of("6", 539, 56)) == doctest::Approx(539.0 / 595.0));
  CHECK(std::abs(historical_ratio(pool_of("6", 539, 56)) - 0.91) < 0.005);
  CHECK_THROWS_AS(historical_ratio(pool_of("6", 0, 0)), ValidationError);
}

TEST_CASE("split manifest round trip") {
  const auto pool = pool_of("6", 30, 20);
  const auto split = make_split(pool, 0.6, 0.1, 77);
  const auto path = std::filesystem::temp_directory_path() / ("echr_split_" + std::to_string(::getpid()) + ".json");
  save_split(split, path);
  CHECK(load_split(path) == split);
  std::filesystem::remove(path);
}
