#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <unistd.h>

#include "echr/errors.hpp"
#include "echr/judgment_parser.hpp"
#include "echr/rng.hpp"
#include "echr/text_prep.hpp"

using namespace echr;

TEST_CASE("normalize examples") {
  CHECK(normalize("The Court, in 1999, HELD:") == "the court in held");
  CHECK(normalize("") == "");
  CHECK(normalize("Art. 6 \xC2\xA7" "1") == "art");
  CHECK(normalize("  a\t\tb\n\nc  ") == "a b c");
  CHECK(normalize("caf\xC3\xA9 x") == "caf x");
}

TEST_CASE("tokenize examples") {
  CHECK(tokenize("the court held").tokens == std::vector<std::string>{"the", "court", "held"});
  CHECK(tokenize("").tokens.empty());
  const auto seq = tokenize("a b", {"doc", SectionKind::facts, false});
  CHECK(seq.source.doc_id == "doc");
  CHECK(seq.source.section == SectionKind::facts);
}

TEST_CASE("remove_stopwords examples") {
  const auto seq = tokenize("the court held");
  const auto out = remove_stopwords(seq);
  CHECK(out.tokens == std::vector<std::string>{"court", "held"});
  CHECK(out.source.stopwords_removed);
  CHECK(remove_stopwords(tokenize("the of and a")).tokens.empty());
  CHECK(remove_stopwords(out).tokens == out.tokens);
}

TEST_CASE("bundled stop-word list") {
  const auto& sw = StopWords::bundled();
  CHECK(sw.size() == 153);
  CHECK(sw.contains("the"));
  CHECK(sw.contains("ourselves"));
  CHECK_FALSE(sw.contains("court"));
}

TEST_CASE("stop-word files allow comment lines") {
  const auto sw = StopWords::parse("# header\nfoo\n\nbar\n");
  CHECK(sw.contains("foo"));
  CHECK(sw.contains("bar"));
  CHECK(sw.size() == 2);
  CHECK_THROWS_AS(StopWords::parse("Foo\n"), FormatError);
  CHECK_THROWS_AS(StopWords::load("/nonexistent/stopwords.txt"), IoError);
}

TEST_CASE("properties on random byte strings") {
  Rng rng(17);
  const std::string alphabet = "abcXYZ 019.,;:!?\t\n-\xC3\xA9\xC2\xA7";
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    const auto len = rng.uniform_index(60);
    for (std::uint64_t i = 0; i < len; ++i) text += alphabet[rng.uniform_index(alphabet.size())];
    const auto norm = normalize(text);
    CHECK(normalize(norm) == norm);
    const auto seq = tokenize(norm);
    if (!norm.empty()) CHECK(seq.tokens.size() == static_cast<std::size_t>(std::count(norm.begin(), norm.end(), ' ')) + 1);
    for (const auto& t : seq.tokens) {
      CHECK_FALSE(t.empty());
      CHECK(std::all_of(t.begin(), t.end(), [](char c) { return c >= 'a' && c <= 'z'; }));
    }
    // subsequence check
    const auto filtered = remove_stopwords(seq);
    std::size_t j = 0;
    for (const auto& t : seq.tokens) {
      if (j < filtered.tokens.size() && filtered.tokens[j] == t) ++j;
    }
    CHECK(j == filtered.tokens.size());
  }
}

TEST_CASE("synthetic bodies tokenize to the generator's tokens") {
  SyntheticSpec spec;
  spec.articles = {"6"};
  spec.docs_per_article_per_label = 5;
  const auto corpus = generate_synthetic_detailed(spec);
  for (std::size_t i = 0; i < corpus.collection.documents.size(); ++i) {
    CHECK(tokenize(normalize(corpus.collection.documents[i].body)).tokens == corpus.payloads[i].body_tokens);
  }
}
