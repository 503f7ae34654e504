#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <unistd.h>

#include "echr/errors.hpp"
#include "echr/judgment_parser.hpp"
#include "echr/text_prep.hpp"

using namespace echr;

namespace {

RawDocument judgment(std::string body) {
  RawDocument doc;
  doc.doc_id = "t-1";
  doc.articles = {"6"};
  doc.violation_by_article = {{"6", true}};
  doc.decision_date = "2010-01-01";
  doc.body = std::move(body);
  return doc;
}

const char* kStandard =
    "PROCEDURE\n"
    "The case originated in an application.\n"
    "THE FACTS\n"
    "I. THE CIRCUMSTANCES OF THE CASE\n"
    "The applicant was born in 1970.\n"
    "II. RELEVANT DOMESTIC LAW AND PRACTICE\n"
    "Section 5 of the Act provides.\n"
    "THE LAW\n"
    "The applicant complained.\n"
    "FOR THESE REASONS, THE COURT\n"
    "Holds that there has been a violation.\n";

SyntheticCorpus small_corpus() {
  SyntheticSpec spec;
  spec.articles = {"3", "6"};
  spec.docs_per_article_per_label = 5;
  spec.tokens_per_section = 60;
  return generate_synthetic_detailed(spec);
}

}  // namespace

TEST_CASE("hand-written standard judgment") {
  const auto result = segment(judgment(kStandard));
  REQUIRE(is_standard(result));
  const auto& j = std::get<ParsedJudgment>(result);
  CHECK(section_text(j, SectionKind::procedure) == "The case originated in an application.");
  CHECK(section_text(j, SectionKind::circumstances) == "The applicant was born in 1970.");
  CHECK(section_text(j, SectionKind::relevant_law) == "Section 5 of the Act provides.");
  CHECK(section_text(j, SectionKind::law) == "The applicant complained.");
  CHECK(section_text(j, SectionKind::verdict) == "Holds that there has been a violation.");
  const auto facts = section_text(j, SectionKind::facts);
  CHECK(facts.find("I. THE CIRCUMSTANCES OF THE CASE") == 0);
  CHECK(facts.find("Section 5 of the Act provides.") != std::string::npos);
  CHECK(j.violation_by_article == std::map<std::string, bool>{{"6", true}});
}

TEST_CASE("missing verdict heading") {
  std::string body = kStandard;
  body.replace(body.find("FOR THESE REASONS, THE COURT"), 28, "Decides as follows");
  const auto result = segment(judgment(body));
  REQUIRE(std::holds_alternative<StructureError>(result));
  const auto& error = std::get<StructureError>(result);
  CHECK(error.missing == std::vector<SectionKind>{SectionKind::verdict});
  CHECK_FALSE(error.out_of_order);
  CHECK_FALSE(is_standard(result));
}

TEST_CASE("law heading before facts heading is an order violation") {
  const std::string body =
      "PROCEDURE\nx\nTHE LAW\ny\nTHE FACTS\nI. THE CIRCUMSTANCES OF THE CASE\nz\n"
      "II. RELEVANT DOMESTIC LAW\nw\nFOR THESE REASONS, THE COURT\nv\n";
  const auto result = segment(judgment(body));
  REQUIRE(std::holds_alternative<StructureError>(result));
  CHECK(std::get<StructureError>(result).out_of_order);
  CHECK(std::get<StructureError>(result).missing.empty());
}

TEST_CASE("empty circumstances text is not standard") {
  const std::string body =
      "PROCEDURE\nx\nTHE FACTS\nI. THE CIRCUMSTANCES OF THE CASE\n\nII. RELEVANT DOMESTIC LAW\nw\n"
      "THE LAW\ny\nFOR THESE REASONS, THE COURT\nv\n";
  const auto result = segment(judgment(body));
  REQUIRE(std::holds_alternative<ParsedJudgment>(result));
  CHECK_FALSE(is_standard(result));
}

TEST_CASE("headings match whole lines case-sensitively, roman labels optional") {
  std::string lower = kStandard;
  lower.replace(lower.find("THE LAW\n"), 7, "The Law");
  CHECK_FALSE(is_standard(segment(judgment(lower))));

  std::string unlabeled = kStandard;
  unlabeled.replace(unlabeled.find("I. THE CIRCUMSTANCES"), 3, "");
  unlabeled.replace(unlabeled.find("II. RELEVANT"), 4, "");
  CHECK(is_standard(segment(judgment(unlabeled))));

  std::string inline_heading = kStandard;
  inline_heading.replace(inline_heading.find("THE LAW\n"), 8, "see THE LAW below\n");
  CHECK_FALSE(is_standard(segment(judgment(inline_heading))));
}

TEST_CASE("extra headings stay inside the enclosing section") {
  std::string body = kStandard;
  body.insert(body.find("The applicant complained."), "ALLEGED VIOLATION OF ARTICLE 6\n");
  const auto j = std::get<ParsedJudgment>(segment(judgment(body)));
  CHECK(section_text(j, SectionKind::law) == "ALLEGED VIOLATION OF ARTICLE 6\nThe applicant complained.");
}

TEST_CASE("custom heading configuration") {
  const auto dir = std::filesystem::temp_directory_path() / ("echr_parser_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "headings.json");
    out << R"({"verdict": ["FOR THESE REASONS, THE COURT UNANIMOUSLY", "FOR THESE REASONS, THE COURT"]})";
  }
  const auto config = HeadingConfig::load(dir / "headings.json");
  CHECK(config.headings.at(SectionKind::law) == std::vector<std::string>{"THE LAW"});
  std::string body = kStandard;
  body.replace(body.find("FOR THESE REASONS, THE COURT"), 28, "FOR THESE REASONS, THE COURT UNANIMOUSLY");
  CHECK(is_standard(segment(judgment(body), config)));
  {
    std::ofstream out(dir / "bad.json");
    out << R"({"epilogue": ["END"]})";
  }
  CHECK_THROWS_AS(HeadingConfig::load(dir / "bad.json"), FormatError);
}

TEST_CASE("non-judgments cannot be segmented") {
  auto doc = judgment(kStandard);
  doc.doc_type = DocType::decision;
  CHECK_THROWS_AS(segment(doc), ValidationError);
}

TEST_CASE("synthetic judgments: sections recovered exactly") {
  const auto corpus = small_corpus();
  for (std::size_t i = 0; i < corpus.collection.documents.size(); ++i) {
    const auto result = segment(corpus.collection.documents[i]);
    REQUIRE(is_standard(result));
    const auto& j = std::get<ParsedJudgment>(result);
    for (auto kind : kStoredSections) {
      CHECK(section_text(j, kind) == corpus.payloads[i].section_text.at(kind));
    }
  }
}

TEST_CASE("synthetic judgments: span invariants") {
  const auto corpus = small_corpus();
  for (const auto& doc : corpus.collection.documents) {
    const auto j = std::get<ParsedJudgment>(segment(doc));
    const auto& s = j.sections;
    using K = SectionKind;
    CHECK(s.at(K::procedure).end <= s.at(K::facts).begin);
    CHECK(s.at(K::facts).end <= s.at(K::law).begin);
    CHECK(s.at(K::law).end <= s.at(K::verdict).begin);
    CHECK(s.at(K::circumstances).begin >= s.at(K::facts).begin);
    CHECK(s.at(K::circumstances).end <= s.at(K::relevant_law).begin);
    CHECK(s.at(K::relevant_law).end <= s.at(K::facts).end);
    // relevant_law text is a substring of facts text
    CHECK(section_text(j, K::facts).find(section_text(j, K::relevant_law)) != std::string::npos);

    const auto ppf = section_text(j, K::procedure_plus_facts);
    CHECK(ppf.size() == section_text(j, K::procedure).size() + 1 + section_text(j, K::facts).size());
    CHECK(strip_outcome_text(j) == ppf);
  }
}

TEST_CASE("synthetic judgments: reconstruction from headings and spans") {
  const auto corpus = small_corpus();
  for (const auto& doc : corpus.collection.documents) {
    const auto j = std::get<ParsedJudgment>(segment(doc));
    std::string rebuilt;
    for (auto kind : {SectionKind::procedure, SectionKind::facts, SectionKind::circumstances,
                      SectionKind::relevant_law, SectionKind::law, SectionKind::verdict}) {
      const auto h = j.heading_lines.at(kind);
      rebuilt += j.body.substr(h.begin, h.size()) + "\n";
      if (kind != SectionKind::facts) rebuilt += section_text(j, kind) + "\n";
    }
    auto squash = [](std::string s) {
      s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
      return s;
    };
    CHECK(squash(rebuilt) == squash(doc.body));
  }
}

TEST_CASE("strip_outcome_text excludes law and verdict payloads") {
  const auto corpus = small_corpus();
  for (std::size_t i = 0; i < corpus.collection.documents.size(); ++i) {
    const auto j = std::get<ParsedJudgment>(segment(corpus.collection.documents[i]));
    const auto& law = j.sections.at(SectionKind::law);
    const auto& verdict = j.sections.at(SectionKind::verdict);
    CHECK(j.sections.at(SectionKind::facts).end <= law.begin);
    CHECK(verdict.begin >= law.end);

    const auto kept = tokenize(normalize(strip_outcome_text(j))).tokens;
    const std::set<std::string> kept_set(kept.begin(), kept.end());
    for (bool v : {false, true}) {
      for (const auto& marker : synthetic_outcome_markers(v)) CHECK_FALSE(kept_set.contains(marker));
    }
  }
}

TEST_CASE("a phrase shared by facts and law survives in facts") {
  std::string body = kStandard;
  body.replace(body.find("The applicant complained."), 25, "The applicant was born in 1970.");
  const auto j = std::get<ParsedJudgment>(segment(judgment(body)));
  CHECK(strip_outcome_text(j).find("The applicant was born in 1970.") != std::string::npos);
}

TEST_CASE("every synthetic judgment is standard") {
  SyntheticSpec spec;
  spec.articles = {"2", "3", "6", "14"};
  spec.docs_per_article_per_label = 10;
  for (const auto& doc : generate_synthetic(spec).documents) CHECK(is_standard(segment(doc)));
}
