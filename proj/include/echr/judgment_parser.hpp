#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "echr/corpus.hpp"
#include "echr/sections.hpp"

namespace echr {

/// Accepted heading lines per stored section kind. A trailing '*' makes an
/// entry a word-boundary prefix match; a leading Roman-numeral label
/// ("I.", "II.") is ignored on both sides of the comparison.
struct HeadingConfig {
  std::map<SectionKind, std::vector<std::string>> headings;

  static HeadingConfig defaults();
  /// JSON object mapping section name to a list of heading strings. Kinds
  /// absent from the file keep their defaults.
  static HeadingConfig load(const std::filesystem::path& path);
};

/// Half-open byte range into the judgment body.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const Span&) const = default;
};

struct ParsedJudgment {
  std::string doc_id;
  std::string body;
  std::map<SectionKind, Span> sections;
  /// Byte range of each located heading line.
  std::map<SectionKind, Span> heading_lines;
  std::set<std::string> articles;
  std::map<std::string, bool> violation_by_article;
  std::string decision_date;
};

struct StructureError {
  std::string doc_id;
  std::vector<SectionKind> missing;
  /// Set when every heading was found but not in document order.
  bool out_of_order = false;

  std::string message() const;
};

using SegmentResult = std::variant<ParsedJudgment, StructureError>;

/// Locates the section headings of a judgment. Requires doc_type judgment.
SegmentResult segment(const RawDocument& doc, const HeadingConfig& config = HeadingConfig::defaults());

bool is_standard(const SegmentResult& result);
bool is_standard(const ParsedJudgment& judgment);

/// Stored span text, or procedure + " " + facts for procedure_plus_facts.
std::string section_text(const ParsedJudgment& judgment, SectionKind kind);

/// Procedure and facts text only; nothing from the law or verdict spans.
std::string strip_outcome_text(const ParsedJudgment& judgment);

}  // namespace echr
