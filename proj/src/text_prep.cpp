#include "echr/text_prep.hpp"

#include <fstream>
#include <sstream>

#include "echr/errors.hpp"
#include "stopwords_data.hpp"

namespace echr {

std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    char mapped = 0;
    if (c >= 'a' && c <= 'z') {
      mapped = static_cast<char>(c);
    } else if (c >= 'A' && c <= 'Z') {
      mapped = static_cast<char>(c - 'A' + 'a');
    }
    if (mapped == 0) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out += ' ';
    pending_space = false;
    out += mapped;
  }
  return out;
}

TokenSequence tokenize(std::string_view normalized, TokenSource source) {
  TokenSequence seq;
  seq.source = std::move(source);
  std::size_t pos = 0;
  while (pos < normalized.size()) {
    std::size_t space = normalized.find(' ', pos);
    if (space == std::string_view::npos) space = normalized.size();
    if (space > pos) seq.tokens.emplace_back(normalized.substr(pos, space - pos));
    pos = space + 1;
  }
  return seq;
}

StopWords StopWords::parse(std::string_view text, std::string_view origin) {
  StopWords list;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    for (char c : line) {
      if (c < 'a' || c > 'z') {
        throw FormatError(std::string(origin) + ":" + std::to_string(line_number) +
                          ": stop-word entries must be lowercase a-z tokens");
      }
    }
    list.words_.insert(line);
  }
  return list;
}

const StopWords& StopWords::bundled() {
  static const StopWords list = parse(detail::kBundledStopwords, "stopwords_en.txt");
  return list;
}

StopWords StopWords::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stop-word file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

TokenSequence remove_stopwords(const TokenSequence& seq, const StopWords& stopwords) {
  TokenSequence out;
  out.source = seq.source;
  out.source.stopwords_removed = true;
  for (const auto& token : seq.tokens) {
    if (!stopwords.contains(token)) out.tokens.push_back(token);
  }
  return out;
}

}  // namespace echr
