#include "echr/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "echr/errors.hpp"
#include "echr/rng.hpp"

namespace echr {

using nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 6> kDocTypeNames = {
    "judgment", "decision", "communicated_case", "legal_summary", "resolution", "other"};

constexpr std::array<std::string_view, 7> kSectionNames = {
    "procedure", "facts", "circumstances", "relevant_law", "law", "verdict", "procedure_plus_facts"};

constexpr std::array<std::string_view, 6> kRecordKeys = {
    "doc_id", "doc_type", "articles", "violation_by_article", "decision_date", "body"};

constexpr std::string_view kProvenanceKey = "corpus_provenance";

// High-frequency function words mixed into background text.
constexpr std::array<std::string_view, 8> kFunctionWords = {"the", "of",   "and", "to",
                                                            "in",  "that", "was", "by"};
constexpr double kFunctionWordRate = 0.3;
constexpr int kMarkersPerOutcomeSection = 2;
constexpr int kWordsPerSentence = 12;
constexpr int kSentencesPerParagraph = 3;

std::string letter_code(int index, int width) {
  std::string code(static_cast<std::size_t>(width), 'a');
  for (int pos = width - 1; pos >= 0; --pos) {
    code[static_cast<std::size_t>(pos)] = static_cast<char>('a' + index % 26);
    index /= 26;
  }
  return code;
}

int code_width(int count) {
  int width = 1;
  long capacity = 26;
  while (capacity < count) {
    capacity *= 26;
    ++width;
  }
  return std::max(width, 3);
}

std::vector<std::string> make_pool(std::string_view prefix, int size) {
  std::vector<std::string> pool;
  pool.reserve(static_cast<std::size_t>(size));
  const int width = code_width(size);
  for (int i = 0; i < size; ++i) pool.push_back(std::string(prefix) + letter_code(i, width));
  return pool;
}

[[noreturn]] void record_error(const std::string& what) { throw FormatError(what); }

}  // namespace

std::string_view to_string(DocType type) { return kDocTypeNames[static_cast<std::size_t>(type)]; }

std::optional<DocType> doc_type_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kDocTypeNames.size(); ++i) {
    if (kDocTypeNames[i] == name) return static_cast<DocType>(i);
  }
  return std::nullopt;
}

std::string_view to_string(SectionKind kind) {
  return kSectionNames[static_cast<std::size_t>(kind)];
}

std::optional<SectionKind> section_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kSectionNames.size(); ++i) {
    if (kSectionNames[i] == name) return static_cast<SectionKind>(i);
  }
  return std::nullopt;
}

bool is_valid_date(std::string_view date) {
  if (date.size() != 10 || date[4] != '-' || date[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (!std::isdigit(static_cast<unsigned char>(date[i]))) return false;
  }
  const int year = std::stoi(std::string(date.substr(0, 4)));
  const int month = std::stoi(std::string(date.substr(5, 2)));
  const int day = std::stoi(std::string(date.substr(8, 2)));
  if (month < 1 || month > 12 || day < 1) return false;
  static constexpr std::array<int, 12> kDays = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  const int limit = (month == 2 && leap) ? 29 : kDays[static_cast<std::size_t>(month - 1)];
  return day <= limit;
}

void validate_document(const RawDocument& doc) {
  if (doc.doc_id.empty()) throw ValidationError("document with empty doc_id");
  if (doc.doc_type == DocType::judgment && doc.body.empty()) {
    throw ValidationError("judgment " + doc.doc_id + " has an empty body");
  }
  for (const auto& [article, violated] : doc.violation_by_article) {
    if (!doc.articles.contains(article)) {
      throw ValidationError("document " + doc.doc_id + ": violation outcome for article " +
                            article + " which is not among its articles");
    }
  }
  if (!is_valid_date(doc.decision_date)) {
    throw ValidationError("document " + doc.doc_id + ": invalid decision_date '" +
                          doc.decision_date + "'");
  }
}

void validate_collection(const DocumentCollection& collection) {
  std::set<std::string_view> seen;
  for (const auto& doc : collection.documents) {
    validate_document(doc);
    if (!seen.insert(doc.doc_id).second) throw ValidationError("duplicate doc_id " + doc.doc_id);
  }
}

std::string serialize_document(const RawDocument& doc) {
  ordered_json record;
  record["doc_id"] = doc.doc_id;
  record["doc_type"] = std::string(to_string(doc.doc_type));
  record["articles"] = ordered_json::array();
  for (const auto& article : doc.articles) record["articles"].push_back(article);
  record["violation_by_article"] = ordered_json::object();
  for (const auto& [article, violated] : doc.violation_by_article) {
    record["violation_by_article"][article] = violated;
  }
  record["decision_date"] = doc.decision_date;
  record["body"] = doc.body;
  return record.dump();
}

RawDocument parse_document(std::string_view line) {
  ordered_json record;
  try {
    record = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    record_error(std::string("invalid JSON: ") + e.what());
  }
  if (!record.is_object()) record_error("record is not a JSON object");
  for (const auto& [key, value] : record.items()) {
    if (std::find(kRecordKeys.begin(), kRecordKeys.end(), key) == kRecordKeys.end()) {
      record_error("unknown key '" + key + "'");
    }
  }
  for (auto key : kRecordKeys) {
    if (!record.contains(key)) record_error("missing key '" + std::string(key) + "'");
  }

  auto require_string = [&](std::string_view key) -> std::string {
    const auto& value = record[std::string(key)];
    if (!value.is_string()) record_error("key '" + std::string(key) + "' must be a string");
    return value.get<std::string>();
  };

  RawDocument doc;
  doc.doc_id = require_string("doc_id");
  const auto type_name = require_string("doc_type");
  const auto type = doc_type_from_string(type_name);
  if (!type) record_error("unknown doc_type '" + type_name + "'");
  doc.doc_type = *type;

  const auto& articles = record["articles"];
  if (!articles.is_array()) record_error("key 'articles' must be an array");
  for (const auto& article : articles) {
    if (!article.is_string()) record_error("articles must be strings");
    if (!doc.articles.insert(article.get<std::string>()).second) {
      record_error("duplicate article '" + article.get<std::string>() + "'");
    }
  }
  const auto& violations = record["violation_by_article"];
  if (!violations.is_object()) record_error("key 'violation_by_article' must be an object");
  for (const auto& [article, violated] : violations.items()) {
    if (!violated.is_boolean()) record_error("violation_by_article values must be booleans");
    doc.violation_by_article[article] = violated.get<bool>();
  }
  doc.decision_date = require_string("decision_date");
  doc.body = require_string("body");
  return doc;
}

DocumentCollection load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file " + path.string());

  DocumentCollection collection;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_number) + ": ";
    if (line_number == 1 && line.find(kProvenanceKey) != std::string::npos) {
      try {
        const auto header = ordered_json::parse(line);
        if (header.is_object() && header.size() == 1 && header.contains(kProvenanceKey) &&
            header[std::string(kProvenanceKey)].is_string()) {
          collection.provenance = header[std::string(kProvenanceKey)].get<std::string>();
          continue;
        }
      } catch (const nlohmann::json::parse_error&) {
      }
    }
    RawDocument doc;
    try {
      doc = parse_document(line);
      validate_document(doc);
    } catch (const FormatError& e) {
      throw FormatError(where + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
    if (!seen.insert(doc.doc_id).second) {
      throw ValidationError(where + "duplicate doc_id " + doc.doc_id);
    }
    collection.documents.push_back(std::move(doc));
  }
  return collection;
}

void save_corpus(const DocumentCollection& collection, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write corpus file " + path.string());
  if (!collection.provenance.empty()) {
    ordered_json header;
    header[std::string(kProvenanceKey)] = collection.provenance;
    out << header.dump() << '\n';
  }
  for (const auto& doc : collection.documents) out << serialize_document(doc) << '\n';
  out.flush();
  if (!out) throw IoError("failed writing corpus file " + path.string());
}

void validate_spec(const SyntheticSpec& spec) {
  if (spec.articles.empty()) throw ValidationError("synthetic spec needs at least one article");
  if (spec.docs_per_article_per_label < 1 || spec.background_vocab_size < 1 ||
      spec.signal_tokens_per_label < 1 || spec.tokens_per_section < 1) {
    throw ValidationError("synthetic spec counts must all be >= 1");
  }
  if (!(spec.signal_rate >= 0.0 && spec.signal_rate <= 1.0)) {
    throw ValidationError("synthetic spec signal_rate must lie in [0, 1]");
  }
  for (auto kind : spec.signal_sections) {
    if (kind == SectionKind::facts || kind == SectionKind::procedure_plus_facts) {
      throw ValidationError("signal_sections may only name leaf sections");
    }
  }
  std::set<std::string> unique(spec.articles.begin(), spec.articles.end());
  if (unique.size() != spec.articles.size()) throw ValidationError("duplicate article in spec");
}

std::vector<std::string> synthetic_background_vocab(int size) { return make_pool("kq", size); }

std::vector<std::string> synthetic_signal_pool(bool violation, int size) {
  return make_pool(violation ? "vq" : "nq", size);
}

std::vector<std::string> synthetic_outcome_markers(bool violation) {
  return make_pool(violation ? "mqv" : "mqn", 4);
}

namespace {

struct SectionDraft {
  std::vector<std::string> tokens;
  std::size_t signal = 0;
};

// Renders tokens as numbered paragraphs of capitalized sentences, with
// occasional numbers and punctuation that normalization strips again.
// Appends every alphabetic word of the rendered text to `words`.
std::string render_prose(const std::vector<std::string>& tokens, Rng& rng, int& paragraph,
                         std::vector<std::string>& words) {
  std::string text;
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (!text.empty()) text += '\n';
    text += std::to_string(paragraph++) + ".";
    for (int s = 0; s < kSentencesPerParagraph && i < tokens.size(); ++s) {
      for (int w = 0; w < kWordsPerSentence && i < tokens.size(); ++w, ++i) {
        text += ' ';
        std::string word = tokens[i];
        if (w == 0) word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
        text += word;
        words.push_back(tokens[i]);
        if (w == 3 && rng.bernoulli(0.2)) {
          words.emplace_back("no");
          text += " (no. " + std::to_string(1000 + rng.uniform_index(9000)) + "/0" +
                  std::to_string(rng.uniform_index(10)) + "),";
        }
      }
      text += '.';
    }
  }
  return text;
}

void append_heading_tokens(std::string_view heading, std::vector<std::string>& out) {
  std::string word;
  for (char c : heading) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!word.empty()) {
      out.push_back(word);
      word.clear();
    }
  }
  if (!word.empty()) out.push_back(word);
}

}  // namespace

SyntheticCorpus generate_synthetic_detailed(const SyntheticSpec& spec) {
  validate_spec(spec);
  const auto background = synthetic_background_vocab(spec.background_vocab_size);
  const std::array<std::vector<std::string>, 2> signal = {
      synthetic_signal_pool(false, spec.signal_tokens_per_label),
      synthetic_signal_pool(true, spec.signal_tokens_per_label)};
  const std::array<std::vector<std::string>, 2> markers = {synthetic_outcome_markers(false),
                                                           synthetic_outcome_markers(true)};
  const std::set<SectionKind> signal_sections(spec.signal_sections.begin(),
                                              spec.signal_sections.end());

  static constexpr std::array<SectionKind, 5> kLeaves = {
      SectionKind::procedure, SectionKind::circumstances, SectionKind::relevant_law,
      SectionKind::law, SectionKind::verdict};
  static constexpr std::string_view kProcedure = "PROCEDURE";
  static constexpr std::string_view kFacts = "THE FACTS";
  static constexpr std::string_view kCircumstances = "I. THE CIRCUMSTANCES OF THE CASE";
  static constexpr std::string_view kRelevantLaw = "II. RELEVANT DOMESTIC LAW";
  static constexpr std::string_view kLaw = "THE LAW";
  static constexpr std::string_view kVerdict = "FOR THESE REASONS, THE COURT";

  Rng rng(spec.seed);
  SyntheticCorpus result;
  std::ostringstream provenance;
  provenance << "synthetic seed=" << spec.seed;
  result.collection.provenance = provenance.str();

  for (const auto& article : spec.articles) {
    for (bool violation : {true, false}) {
      for (int i = 0; i < spec.docs_per_article_per_label; ++i) {
        const auto& pool = signal[violation ? 1 : 0];
        SyntheticPayload payload;
        std::map<SectionKind, SectionDraft> drafts;
        for (auto kind : kLeaves) {
          SectionDraft draft;
          const bool carries_signal = signal_sections.contains(kind);
          for (int t = 0; t < spec.tokens_per_section; ++t) {
            if (carries_signal && rng.bernoulli(spec.signal_rate)) {
              draft.tokens.push_back(pool[rng.uniform_index(pool.size())]);
              ++draft.signal;
            } else if (rng.bernoulli(kFunctionWordRate)) {
              draft.tokens.emplace_back(kFunctionWords[rng.uniform_index(kFunctionWords.size())]);
            } else {
              draft.tokens.push_back(background[rng.uniform_index(background.size())]);
            }
          }
          if (kind == SectionKind::law || kind == SectionKind::verdict) {
            const auto& marker_pool = markers[violation ? 1 : 0];
            for (int m = 0; m < kMarkersPerOutcomeSection; ++m) {
              const auto pos = rng.uniform_index(draft.tokens.size() + 1);
              draft.tokens.insert(draft.tokens.begin() + static_cast<std::ptrdiff_t>(pos),
                                  marker_pool[rng.uniform_index(marker_pool.size())]);
            }
          }
          payload.signal_token_count += draft.signal;
          drafts[kind] = std::move(draft);
        }

        int paragraph = 1;
        std::map<SectionKind, std::vector<std::string>> rendered;
        for (auto kind : kLeaves) {
          payload.section_text[kind] = render_prose(drafts[kind].tokens, rng, paragraph, rendered[kind]);
          payload.section_tokens[kind] = drafts[kind].tokens;
        }
        payload.section_text[SectionKind::facts] =
            std::string(kCircumstances) + "\n" + payload.section_text[SectionKind::circumstances] +
            "\n" + std::string(kRelevantLaw) + "\n" +
            payload.section_text[SectionKind::relevant_law];

        std::string body;
        auto emit = [&](std::string_view heading, SectionKind kind) {
          body += heading;
          body += '\n';
          body += payload.section_text[kind];
          body += '\n';
          append_heading_tokens(heading, payload.body_tokens);
          const auto& tokens = rendered[kind];
          payload.body_tokens.insert(payload.body_tokens.end(), tokens.begin(), tokens.end());
        };
        emit(kProcedure, SectionKind::procedure);
        body += kFacts;
        body += '\n';
        append_heading_tokens(kFacts, payload.body_tokens);
        emit(kCircumstances, SectionKind::circumstances);
        emit(kRelevantLaw, SectionKind::relevant_law);
        emit(kLaw, SectionKind::law);
        emit(kVerdict, SectionKind::verdict);

        RawDocument doc;
        char id[64];
        std::snprintf(id, sizeof(id), "synth-%s-%c-%04d", article.c_str(), violation ? 'v' : 'n',
                      i);
        doc.doc_id = id;
        doc.doc_type = DocType::judgment;
        doc.articles = {article};
        doc.violation_by_article = {{article, violation}};
        char date[40];
        std::snprintf(date, sizeof(date), "%04d-%02d-%02d",
                      2000 + static_cast<int>(rng.uniform_index(19)),
                      1 + static_cast<int>(rng.uniform_index(12)),
                      1 + static_cast<int>(rng.uniform_index(28)));
        doc.decision_date = date;
        doc.body = std::move(body);
        result.collection.documents.push_back(std::move(doc));
        result.payloads.push_back(std::move(payload));
      }
    }
  }
  return result;
}

DocumentCollection generate_synthetic(const SyntheticSpec& spec) {
  return generate_synthetic_detailed(spec).collection;
}

}  // namespace echr
