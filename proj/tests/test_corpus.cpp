#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "echr/corpus.hpp"
#include "echr/errors.hpp"

using namespace echr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("echr_corpus_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RawDocument sample(const std::string& id) {
  RawDocument doc;
  doc.doc_id = id;
  doc.doc_type = DocType::judgment;
  doc.articles = {"3", "6"};
  doc.violation_by_article = {{"6", true}, {"3", false}};
  doc.decision_date = "2012-03-15";
  doc.body = "PROCEDURE\nsome \"quoted\" text\nTHE LAW\nété";
  return doc;
}

}  // namespace

TEST_CASE("save then load is the identity") {
  DocumentCollection c;
  c.provenance = "unit test";
  c.documents = {sample("a"), sample("b")};
  c.documents[1].doc_type = DocType::legal_summary;
  c.documents[1].articles.clear();
  c.documents[1].violation_by_article.clear();
  const auto path = scratch("roundtrip.jsonl");
  save_corpus(c, path);
  CHECK(load_corpus(path) == c);
}

TEST_CASE("two saves are byte-identical") {
  DocumentCollection c;
  c.documents = {sample("x"), sample("y")};
  save_corpus(c, scratch("one.jsonl"));
  save_corpus(c, scratch("two.jsonl"));
  CHECK(slurp(scratch("one.jsonl")) == slurp(scratch("two.jsonl")));
}

TEST_CASE("empty collections") {
  save_corpus({}, scratch("empty.jsonl"));
  CHECK(slurp(scratch("empty.jsonl")).empty());
  CHECK(load_corpus(scratch("empty.jsonl")).documents.empty());
}

TEST_CASE("serialization uses the fixed key order") {
  const auto line = serialize_document(sample("k"));
  const auto pos = [&](const char* key) { return line.find(std::string("\"") + key + "\""); };
  CHECK(pos("doc_id") < pos("doc_type"));
  CHECK(pos("doc_type") < pos("articles"));
  CHECK(pos("articles") < pos("violation_by_article"));
  CHECK(pos("violation_by_article") < pos("decision_date"));
  CHECK(pos("decision_date") < pos("body"));
  CHECK(parse_document(line) == sample("k"));
}

TEST_CASE("outcome for an article the document does not address is rejected with its doc_id") {
  auto doc = sample("bad-doc");
  doc.articles = {"3"};
  doc.violation_by_article = {{"6", true}};
  {
    std::ofstream out(scratch("bad.jsonl"));
    out << serialize_document(sample("ok")) << '\n' << serialize_document(doc) << '\n';
  }
  try {
    load_corpus(scratch("bad.jsonl"));
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    CHECK(what.find("bad-doc") != std::string::npos);
    CHECK(what.find(":2:") != std::string::npos);
  }
}

TEST_CASE("malformed records name the line") {
  {
    std::ofstream out(scratch("malformed.jsonl"));
    out << serialize_document(sample("ok")) << "\n{not json\n";
  }
  CHECK_THROWS_WITH_AS(load_corpus(scratch("malformed.jsonl")), doctest::Contains(":2:"), FormatError);
}

TEST_CASE("unknown keys are rejected") {
  auto line = serialize_document(sample("u"));
  line.insert(line.size() - 1, ",\"extra\":1");
  CHECK_THROWS_AS(parse_document(line), FormatError);
}

TEST_CASE("duplicate doc_id is rejected") {
  {
    std::ofstream out(scratch("dup.jsonl"));
    out << serialize_document(sample("d")) << '\n' << serialize_document(sample("d")) << '\n';
  }
  CHECK_THROWS_WITH_AS(load_corpus(scratch("dup.jsonl")), doctest::Contains("duplicate"), ValidationError);
  DocumentCollection c;
  c.documents = {sample("d"), sample("d")};
  CHECK_THROWS_AS(validate_collection(c), ValidationError);
}

TEST_CASE("missing corpus file") { CHECK_THROWS_AS(load_corpus(scratch("absent.jsonl")), IoError); }

TEST_CASE("document invariants") {
  auto doc = sample("j");
  doc.body.clear();
  CHECK_THROWS_AS(validate_document(doc), ValidationError);
  doc.doc_type = DocType::decision;
  CHECK_NOTHROW(validate_document(doc));
  CHECK(is_valid_date("2016-02-29"));
  CHECK_FALSE(is_valid_date("2015-02-29"));
  CHECK_FALSE(is_valid_date("2015-13-01"));
  CHECK_FALSE(is_valid_date("15-01-01"));
}

TEST_CASE("synthetic corpus counts and labels") {
  SyntheticSpec spec;
  spec.articles = {"6"};
  spec.docs_per_article_per_label = 10;
  const auto c = generate_synthetic(spec);
  REQUIRE(c.documents.size() == 20);
  int violations = 0;
  for (const auto& d : c.documents) {
    CHECK(d.doc_type == DocType::judgment);
    CHECK(d.violation_by_article.size() == d.articles.size());
    for (const auto& a : d.articles) CHECK(d.violation_by_article.contains(a));
    violations += d.violation_by_article.at("6");
  }
  CHECK(violations == 10);
  CHECK_NOTHROW(validate_collection(c));
}

TEST_CASE("synthetic generation is a pure function of the spec") {
  SyntheticSpec spec;
  spec.articles = {"2", "6"};
  spec.docs_per_article_per_label = 4;
  CHECK(generate_synthetic(spec) == generate_synthetic(spec));
  auto other = spec;
  other.seed = spec.seed + 1;
  CHECK_FALSE(generate_synthetic(other) == generate_synthetic(spec));
}

TEST_CASE("synthetic signal fraction tracks signal_rate") {
  SyntheticSpec spec;
  spec.articles = {"6"};
  spec.docs_per_article_per_label = 20;
  spec.signal_rate = 0.05;
  spec.tokens_per_section = 1000;
  const auto corpus = generate_synthetic_detailed(spec);
  const auto pool = synthetic_signal_pool(true, spec.signal_tokens_per_label);
  const std::set<std::string> signal(pool.begin(), pool.end());
  std::size_t hits = 0, total = 0;
  for (std::size_t i = 0; i < corpus.collection.documents.size(); ++i) {
    if (!corpus.collection.documents[i].violation_by_article.at("6")) continue;
    for (const auto& [kind, tokens] : corpus.payloads[i].section_tokens) {
      if (kind == SectionKind::law || kind == SectionKind::verdict) continue;
      for (const auto& t : tokens) {
        hits += signal.contains(t);
        ++total;
      }
    }
  }
  const double fraction = static_cast<double>(hits) / static_cast<double>(total);
  CHECK(std::abs(fraction - 0.05) <= 0.01);
}

TEST_CASE("invalid synthetic specs are rejected") {
  SyntheticSpec spec;
  spec.signal_rate = 1.5;
  CHECK_THROWS_AS(validate_spec(spec), ValidationError);
  spec = {};
  spec.docs_per_article_per_label = 0;
  CHECK_THROWS_AS(validate_spec(spec), ValidationError);
  spec = {};
  spec.articles.clear();
  CHECK_THROWS_AS(validate_spec(spec), ValidationError);
}
