#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "echr/sections.hpp"

namespace echr {

struct TokenSource {
  std::string doc_id;
  SectionKind section = SectionKind::procedure_plus_facts;
  bool stopwords_removed = false;

  bool operator==(const TokenSource&) const = default;
};

/// Lowercase [a-z]+ tokens in document order.
struct TokenSequence {
  std::vector<std::string> tokens;
  TokenSource source;

  bool operator==(const TokenSequence&) const = default;
};

/// Lowercases ASCII letters; every other non-whitespace byte (digits,
/// punctuation, non-ASCII) becomes a space; whitespace runs collapse to one
/// space; the result is trimmed.
std::string normalize(std::string_view text);

/// Splits normalized text on single spaces.
TokenSequence tokenize(std::string_view normalized, TokenSource source = {});

class StopWords {
 public:
  /// The list shipped in data/stopwords_en.txt.
  static const StopWords& bundled();
  static StopWords load(const std::filesystem::path& path);
  static StopWords parse(std::string_view text, std::string_view origin = "<memory>");

  bool contains(std::string_view token) const { return words_.contains(std::string(token)); }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

TokenSequence remove_stopwords(const TokenSequence& seq, const StopWords& stopwords = StopWords::bundled());

}  // namespace echr
