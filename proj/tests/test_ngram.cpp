#include <doctest.h>

#include <map>

#include "echr/errors.hpp"
#include "echr/ngram.hpp"
#include "echr/rng.hpp"

using namespace echr;

namespace {

TokenSequence doc(std::vector<std::string> tokens, std::string id = "d") {
  TokenSequence seq;
  seq.tokens = std::move(tokens);
  seq.source.doc_id = std::move(id);
  return seq;
}

// Nested-loop counter, independent of the library's hashing.
std::map<Ngram, std::uint64_t> brute_counts(const std::vector<TokenSequence>& docs) {
  std::map<Ngram, std::uint64_t> counts;
  for (const auto& d : docs) {
    const auto& t = d.tokens;
    for (std::size_t i = 0; i < t.size(); ++i) {
      for (std::size_t n = 1; n <= 4 && i + n <= t.size(); ++n) {
        ++counts[Ngram(t.begin() + static_cast<std::ptrdiff_t>(i), t.begin() + static_cast<std::ptrdiff_t>(i + n))];
      }
    }
  }
  return counts;
}

std::vector<TokenSequence> random_corpus(Rng& rng, std::size_t docs, std::size_t vocab, std::size_t max_len) {
  std::vector<TokenSequence> out;
  for (std::size_t d = 0; d < docs; ++d) {
    std::vector<std::string> tokens;
    const auto len = rng.uniform_index(max_len + 1);
    for (std::uint64_t i = 0; i < len; ++i) tokens.push_back(std::string(1, static_cast<char>('a' + rng.uniform_index(vocab))));
    out.push_back(doc(std::move(tokens), "d" + std::to_string(d)));
  }
  return out;
}

FeatureMatrix column(std::vector<double> values) {
  std::vector<std::string> rows;
  for (std::size_t i = 0; i < values.size(); ++i) rows.push_back("r" + std::to_string(i));
  FeatureMatrix m(rows, {"c"});
  m.values = std::move(values);
  return m;
}

}  // namespace

TEST_CASE("vocabulary of a b a b") {
  const std::vector<TokenSequence> docs{doc({"a", "b", "a", "b"})};
  const auto vocab = build_vocab(docs);
  REQUIRE(vocab.size() == 7);
  const std::vector<std::pair<Ngram, std::uint64_t>> expected{
      {{"a"}, 2},           {{"a", "b"}, 2},      {{"b"}, 2},          {{"a", "b", "a"}, 1},
      {{"a", "b", "a", "b"}, 1}, {{"b", "a"}, 1}, {{"b", "a", "b"}, 1}};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(vocab.entries()[i].ngram == expected[i].first);
    CHECK(vocab.entries()[i].train_count == expected[i].second);
  }
  CHECK(vocab.column_names().front() == "a");
  CHECK(vocab.index_of({"b", "a"}) == 5);
  CHECK(vocab.index_of({"c"}) == -1);
}

TEST_CASE("n-grams do not cross document boundaries") {
  const std::vector<TokenSequence> docs{doc({"a"}, "1"), doc({"b"}, "2")};
  const auto vocab = build_vocab(docs);
  CHECK(vocab.size() == 2);
  CHECK(vocab.index_of({"a", "b"}) == -1);
}

TEST_CASE("empty corpus is rejected") {
  CHECK_THROWS_AS(build_vocab(std::vector<TokenSequence>{}), ValidationError);
}

TEST_CASE("capacity keeps the most frequent entries") {
  Rng rng(5);
  const auto docs = random_corpus(rng, 30, 6, 40);
  const auto full = build_vocab(docs, 100000);
  const auto top = build_vocab(docs, 10);
  REQUIRE(top.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(top.entries()[i] == full.entries()[i]);
  for (std::size_t i = 1; i < full.size(); ++i) {
    const auto& a = full.entries()[i - 1];
    const auto& b = full.entries()[i];
    CHECK((a.train_count > b.train_count || (a.train_count == b.train_count && a.ngram < b.ngram)));
  }
}

TEST_CASE("brute-force oracle on random corpora") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto docs = random_corpus(rng, 50, 3 + rng.uniform_index(5), 30);
    const auto oracle = brute_counts(docs);
    const auto vocab = build_vocab(docs, 1000000);
    REQUIRE(vocab.size() == oracle.size());
    std::map<Ngram, std::uint64_t> got;
    for (const auto& e : vocab.entries()) got[e.ngram] = e.train_count;
    CHECK(got == oracle);
  }
}

TEST_CASE("count_vector examples") {
  const std::vector<TokenSequence> train{doc({"x", "y", "x"})};
  const auto vocab = build_vocab(train);
  const auto zero = count_vector(doc({"q", "r"}), vocab);
  CHECK(std::all_of(zero.begin(), zero.end(), [](double v) { return v == 0.0; }));

  const auto repeated = count_vector(doc({"x", "x", "x"}), vocab);
  CHECK(repeated[static_cast<std::size_t>(vocab.index_of({"x"}))] == 3.0);

  Rng rng(3);
  const auto docs = random_corpus(rng, 20, 4, 25);
  const auto v = build_vocab(docs, 15);
  for (const auto& d : docs) {
    const auto row = count_vector(d, v);
    double sum = 0.0;
    for (double c : row) sum += c;
    double total = 0.0;
    for (const auto& [gram, c] : brute_counts({d})) total += static_cast<double>(c);
    CHECK(sum <= total);
  }
}

TEST_CASE("vectorize rows follow documents") {
  const std::vector<TokenSequence> docs{doc({"a", "b"}, "one"), doc({"b"}, "two")};
  const auto vocab = build_vocab(docs);
  const auto m = vectorize(docs, vocab);
  CHECK(m.row_ids == std::vector<std::string>{"one", "two"});
  CHECK(m.column_names == vocab.column_names());
  CHECK(m.at(1, static_cast<std::size_t>(vocab.index_of({"b"}))) == 1.0);
}

TEST_CASE("scaler examples") {
  const auto s = fit_scaler(column({0, 2, 4}));
  CHECK(s.mins == std::vector<double>{0});
  CHECK(s.maxs == std::vector<double>{4});
  CHECK(transform(column({0, 2, 4}), s).values == std::vector<double>{0, 0.5, 1});
  CHECK(transform(column({6}), s).values == std::vector<double>{1.5});

  const auto constant = fit_scaler(column({3, 3}));
  CHECK(constant.mins == std::vector<double>{3});
  CHECK(constant.maxs == std::vector<double>{3});
  CHECK(transform(column({3, 3, 7}), constant).values == std::vector<double>{0, 0, 0});

  const auto single = fit_scaler(column({5}));
  CHECK(single.mins == single.maxs);

  FeatureMatrix two({"r"}, {"a", "b"});
  two.values = {1, 2};
  CHECK_THROWS_AS(transform(two, s), ValidationError);
}

TEST_CASE("scaled training values lie in [0, 1]") {
  Rng rng(21);
  const auto docs = random_corpus(rng, 40, 5, 30);
  const auto vocab = build_vocab(docs, 200);
  const auto train = vectorize(docs, vocab);
  const auto scaled = transform(train, fit_scaler(train));
  for (double v : scaled.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("NgramIndex matches build_vocab and vectorize") {
  Rng rng(8);
  const auto docs = random_corpus(rng, 40, 5, 30);
  const NgramIndex index(docs);
  std::vector<std::size_t> train_ids, eval_ids;
  for (std::size_t i = 0; i < docs.size(); ++i) (i % 4 == 0 ? eval_ids : train_ids).push_back(i);
  std::vector<TokenSequence> train, eval;
  for (auto i : train_ids) train.push_back(docs[i]);
  for (auto i : eval_ids) eval.push_back(docs[i]);

  for (std::size_t capacity : {5, 50, 2000}) {
    const auto vocab = build_vocab(train, capacity);
    CHECK(index.vocabulary(train_ids, capacity) == vocab);
    CHECK(index.counts(eval_ids, vocab) == vectorize(eval, vocab));

    const auto [tr, ev] = index.fit_transform(train_ids, eval_ids, capacity);
    const auto scaler = fit_scaler(vectorize(train, vocab));
    CHECK(tr == transform(vectorize(train, vocab), scaler));
    CHECK(ev == transform(vectorize(eval, vocab), scaler));
  }
}

TEST_CASE("vocabulary ignores documents outside the training set") {
  Rng rng(9);
  auto docs = random_corpus(rng, 20, 4, 20);
  const NgramIndex index(docs);
  std::vector<std::size_t> train_ids{0, 1, 2, 3, 4, 5};
  const auto before = index.vocabulary(train_ids, 50);
  docs[10].tokens.assign(100, "z");
  const NgramIndex changed(docs);
  CHECK(changed.vocabulary(train_ids, 50) == before);
}
