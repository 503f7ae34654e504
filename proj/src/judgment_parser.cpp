#include "echr/judgment_parser.hpp"

#include <algorithm>
#include <fstream>
#include <optional>

#include <json.hpp>

#include "echr/errors.hpp"

namespace echr {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view text) {
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return text;
}

// "II. RELEVANT DOMESTIC LAW" -> "RELEVANT DOMESTIC LAW"
std::string_view strip_roman_label(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && std::string_view("IVXLC").find(line[i]) != std::string_view::npos) ++i;
  if (i == 0 || i >= line.size() || line[i] != '.') return line;
  std::size_t j = i + 1;
  if (j >= line.size() || !is_space(line[j])) return line;
  while (j < line.size() && is_space(line[j])) ++j;
  return line.substr(j);
}

bool heading_matches(std::string_view line, std::string_view pattern) {
  bool prefix = false;
  if (!pattern.empty() && pattern.back() == '*') {
    prefix = true;
    pattern.remove_suffix(1);
  }
  line = strip_roman_label(line);
  pattern = strip_roman_label(trim(pattern));
  if (line == pattern) return true;
  return prefix && line.size() > pattern.size() && line.starts_with(pattern) &&
         line[pattern.size()] == ' ';
}

Span trimmed_span(std::string_view body, std::size_t begin, std::size_t end) {
  while (begin < end && is_space(body[begin])) ++begin;
  while (end > begin && is_space(body[end - 1])) --end;
  return {begin, end};
}

}  // namespace

HeadingConfig HeadingConfig::defaults() {
  HeadingConfig config;
  config.headings[SectionKind::procedure] = {"PROCEDURE"};
  config.headings[SectionKind::facts] = {"THE FACTS"};
  config.headings[SectionKind::circumstances] = {"I. THE CIRCUMSTANCES OF THE CASE"};
  config.headings[SectionKind::relevant_law] = {"II. RELEVANT DOMESTIC LAW*"};
  config.headings[SectionKind::law] = {"THE LAW"};
  config.headings[SectionKind::verdict] = {"FOR THESE REASONS, THE COURT"};
  return config;
}

HeadingConfig HeadingConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open heading configuration " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw FormatError(path.string() + ": expected a JSON object");
  HeadingConfig config = defaults();
  for (const auto& [name, list] : doc.items()) {
    const auto kind = section_from_string(name);
    if (!kind || *kind == SectionKind::procedure_plus_facts) {
      throw FormatError(path.string() + ": unknown section kind '" + name + "'");
    }
    if (!list.is_array() || list.empty()) {
      throw FormatError(path.string() + ": headings for '" + name + "' must be a non-empty array");
    }
    std::vector<std::string> headings;
    for (const auto& entry : list) {
      if (!entry.is_string()) throw FormatError(path.string() + ": headings must be strings");
      headings.push_back(entry.get<std::string>());
    }
    config.headings[*kind] = std::move(headings);
  }
  return config;
}

std::string StructureError::message() const {
  std::string text = "judgment " + doc_id + ": ";
  if (out_of_order) return text + "section headings out of document order";
  text += "missing sections:";
  for (auto kind : missing) {
    text += ' ';
    text += to_string(kind);
  }
  return text;
}

SegmentResult segment(const RawDocument& doc, const HeadingConfig& config) {
  if (doc.doc_type != DocType::judgment) {
    throw ValidationError("segment: document " + doc.doc_id + " is not a judgment");
  }
  const std::string_view body = doc.body;

  // First heading line found for each kind.
  std::map<SectionKind, Span> found;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    std::size_t newline = body.find('\n', pos);
    const std::size_t end = newline == std::string_view::npos ? body.size() : newline;
    const std::string_view line = trim(body.substr(pos, end - pos));
    if (!line.empty()) {
      for (auto kind : kStoredSections) {
        if (found.contains(kind)) continue;
        const auto it = config.headings.find(kind);
        if (it == config.headings.end()) continue;
        const bool hit = std::any_of(it->second.begin(), it->second.end(),
                                     [&](const std::string& h) { return heading_matches(line, h); });
        if (hit) {
          found[kind] = {pos, end};
          break;
        }
      }
    }
    if (newline == std::string_view::npos) break;
    pos = newline + 1;
  }

  StructureError error{doc.doc_id, {}, false};
  for (auto kind : kStoredSections) {
    if (!found.contains(kind)) error.missing.push_back(kind);
  }
  if (!error.missing.empty()) return error;
  for (std::size_t i = 1; i < kStoredSections.size(); ++i) {
    if (found[kStoredSections[i - 1]].begin >= found[kStoredSections[i]].begin) {
      error.out_of_order = true;
      return error;
    }
  }

  ParsedJudgment parsed;
  parsed.doc_id = doc.doc_id;
  parsed.body = doc.body;
  parsed.heading_lines = found;
  parsed.articles = doc.articles;
  parsed.violation_by_article = doc.violation_by_article;
  parsed.decision_date = doc.decision_date;

  auto after = [&](SectionKind kind) { return found[kind].end; };
  auto before = [&](SectionKind kind) { return found[kind].begin; };
  using K = SectionKind;
  parsed.sections[K::procedure] = trimmed_span(body, after(K::procedure), before(K::facts));
  parsed.sections[K::facts] = trimmed_span(body, after(K::facts), before(K::law));
  parsed.sections[K::circumstances] =
      trimmed_span(body, after(K::circumstances), before(K::relevant_law));
  parsed.sections[K::relevant_law] = trimmed_span(body, after(K::relevant_law), before(K::law));
  parsed.sections[K::law] = trimmed_span(body, after(K::law), before(K::verdict));
  parsed.sections[K::verdict] = trimmed_span(body, after(K::verdict), body.size());
  return parsed;
}

bool is_standard(const ParsedJudgment& judgment) {
  for (auto kind : kStoredSections) {
    const auto it = judgment.sections.find(kind);
    if (it == judgment.sections.end() || it->second.size() == 0) return false;
  }
  return true;
}

bool is_standard(const SegmentResult& result) {
  const auto* parsed = std::get_if<ParsedJudgment>(&result);
  return parsed != nullptr && is_standard(*parsed);
}

std::string section_text(const ParsedJudgment& judgment, SectionKind kind) {
  if (kind == SectionKind::procedure_plus_facts) {
    return section_text(judgment, SectionKind::procedure) + " " +
           section_text(judgment, SectionKind::facts);
  }
  const auto it = judgment.sections.find(kind);
  if (it == judgment.sections.end()) {
    throw ValidationError("judgment " + judgment.doc_id + " has no section " +
                          std::string(to_string(kind)));
  }
  return judgment.body.substr(it->second.begin, it->second.size());
}

std::string strip_outcome_text(const ParsedJudgment& judgment) {
  return section_text(judgment, SectionKind::procedure_plus_facts);
}

}  // namespace echr
