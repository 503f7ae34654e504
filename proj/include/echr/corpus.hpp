#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "echr/sections.hpp"

namespace echr {

enum class DocType { judgment, decision, communicated_case, legal_summary, resolution, other };

std::string_view to_string(DocType type);
std::optional<DocType> doc_type_from_string(std::string_view name);

struct RawDocument {
  std::string doc_id;
  DocType doc_type = DocType::judgment;
  std::set<std::string> articles;
  /// true = at least one violation of that article was found.
  std::map<std::string, bool> violation_by_article;
  std::string decision_date;  // YYYY-MM-DD
  std::string body;

  bool operator==(const RawDocument&) const = default;
};

struct DocumentCollection {
  std::vector<RawDocument> documents;
  std::string provenance;

  bool operator==(const DocumentCollection&) const = default;
};

/// Throws ValidationError if a document breaks a RawDocument invariant.
void validate_document(const RawDocument& doc);
/// Validates every document and doc_id uniqueness.
void validate_collection(const DocumentCollection& collection);

bool is_valid_date(std::string_view date);

/// Reads a line-delimited JSON corpus file. Errors name the offending line.
DocumentCollection load_corpus(const std::filesystem::path& path);

/// Writes the canonical serialization: fixed key order, one record per line.
void save_corpus(const DocumentCollection& collection, const std::filesystem::path& path);

std::string serialize_document(const RawDocument& doc);
RawDocument parse_document(std::string_view line);

struct SyntheticSpec {
  std::vector<std::string> articles{"6"};
  int docs_per_article_per_label = 10;
  int background_vocab_size = 500;
  int signal_tokens_per_label = 20;
  /// Fraction of body tokens drawn from the label's signal pool.
  double signal_rate = 0.05;
  int tokens_per_section = 100;
  std::uint64_t seed = 1;
  /// Sections whose text carries label signal.
  std::vector<SectionKind> signal_sections{SectionKind::procedure, SectionKind::circumstances,
                                           SectionKind::relevant_law, SectionKind::law,
                                           SectionKind::verdict};

  bool operator==(const SyntheticSpec&) const = default;
};

void validate_spec(const SyntheticSpec& spec);

/// Bookkeeping the generator keeps for each emitted judgment.
struct SyntheticPayload {
  /// Exact text placed under each stored section heading.
  std::map<SectionKind, std::string> section_text;
  /// Tokens drawn for each leaf section; headings and citation filler excluded.
  std::map<SectionKind, std::vector<std::string>> section_tokens;
  /// Alphabetic tokens of the whole body in order, headings included.
  std::vector<std::string> body_tokens;
  std::size_t signal_token_count = 0;
};

struct SyntheticCorpus {
  DocumentCollection collection;
  std::vector<SyntheticPayload> payloads;  // parallel to collection.documents
};

/// Emits |articles| x 2 x docs_per_article_per_label standard-structure
/// judgments. Pure function of spec.
SyntheticCorpus generate_synthetic_detailed(const SyntheticSpec& spec);
DocumentCollection generate_synthetic(const SyntheticSpec& spec);

/// Token pools used by the generator, exposed for tests.
std::vector<std::string> synthetic_background_vocab(int size);
std::vector<std::string> synthetic_signal_pool(bool violation, int size);
/// Tokens planted only in law and verdict sections.
std::vector<std::string> synthetic_outcome_markers(bool violation);

}  // namespace echr
