#include "echr/ngram.hpp"

#include <algorithm>
#include <limits>

#include "echr/errors.hpp"

namespace echr {

namespace {

constexpr std::uint32_t kNoToken = std::numeric_limits<std::uint32_t>::max();

bool entry_before(const NgramVocabulary::Entry& a, const NgramVocabulary::Entry& b) {
  if (a.train_count != b.train_count) return a.train_count > b.train_count;
  return a.ngram < b.ngram;
}

}  // namespace

NgramVocabulary::NgramVocabulary(std::vector<Entry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!index_.emplace(entries_[i].ngram, static_cast<int>(i)).second) {
      throw ValidationError("duplicate n-gram in vocabulary: " + ngram_label(entries_[i].ngram));
    }
  }
}

int NgramVocabulary::index_of(const Ngram& ngram) const {
  const auto it = index_.find(ngram);
  return it == index_.end() ? -1 : it->second;
}

std::vector<std::string> NgramVocabulary::column_names() const {
  std::vector<std::string> names;
  names.reserve(entries_.size());
  for (const auto& entry : entries_) names.push_back(ngram_label(entry.ngram));
  return names;
}

std::string ngram_label(const Ngram& ngram) {
  std::string label;
  for (const auto& token : ngram) {
    if (!label.empty()) label += ' ';
    label += token;
  }
  return label;
}

NgramVocabulary build_vocab(std::span<const TokenSequence> train_docs, std::size_t capacity) {
  if (train_docs.empty()) throw ValidationError("build_vocab: no training documents");
  std::map<Ngram, std::uint64_t> counts;
  for (const auto& doc : train_docs) {
    const auto& tokens = doc.tokens;
    for (std::size_t start = 0; start < tokens.size(); ++start) {
      Ngram gram;
      for (int n = 1; n <= NgramVocabulary::kMaxOrder && start + n <= tokens.size(); ++n) {
        gram.push_back(tokens[start + n - 1]);
        ++counts[gram];
      }
    }
  }
  std::vector<NgramVocabulary::Entry> entries;
  entries.reserve(counts.size());
  for (auto& [gram, count] : counts) entries.push_back({gram, count});
  const auto keep = std::min(capacity, entries.size());
  std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(keep),
                    entries.end(), entry_before);
  entries.resize(keep);
  return NgramVocabulary(std::move(entries));
}

std::vector<double> count_vector(const TokenSequence& doc, const NgramVocabulary& vocab) {
  std::vector<double> row(vocab.size(), 0.0);
  const auto& tokens = doc.tokens;
  for (std::size_t start = 0; start < tokens.size(); ++start) {
    Ngram gram;
    for (int n = 1; n <= NgramVocabulary::kMaxOrder && start + n <= tokens.size(); ++n) {
      gram.push_back(tokens[start + n - 1]);
      const int column = vocab.index_of(gram);
      if (column >= 0) row[static_cast<std::size_t>(column)] += 1.0;
    }
  }
  return row;
}

FeatureMatrix vectorize(std::span<const TokenSequence> docs, const NgramVocabulary& vocab) {
  std::vector<std::string> ids;
  for (const auto& doc : docs) ids.push_back(doc.source.doc_id);
  FeatureMatrix matrix(std::move(ids), vocab.column_names());
  for (std::size_t r = 0; r < docs.size(); ++r) {
    const auto row = count_vector(docs[r], vocab);
    std::copy(row.begin(), row.end(), matrix.row(r).begin());
  }
  return matrix;
}

MinMaxScaler fit_scaler(const FeatureMatrix& train) {
  if (train.rows() == 0) throw ValidationError("fit_scaler: empty training matrix");
  MinMaxScaler scaler;
  const auto first = train.row(0);
  scaler.mins.assign(first.begin(), first.end());
  scaler.maxs.assign(first.begin(), first.end());
  for (std::size_t r = 1; r < train.rows(); ++r) {
    const auto row = train.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      scaler.mins[c] = std::min(scaler.mins[c], row[c]);
      scaler.maxs[c] = std::max(scaler.maxs[c], row[c]);
    }
  }
  return scaler;
}

FeatureMatrix transform(const FeatureMatrix& m, const MinMaxScaler& scaler) {
  if (m.cols() != scaler.mins.size()) {
    throw ValidationError("transform: matrix has " + std::to_string(m.cols()) +
                          " columns, scaler was fit on " + std::to_string(scaler.mins.size()));
  }
  FeatureMatrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double range = scaler.maxs[c] - scaler.mins[c];
      row[c] = range > 0.0 ? (row[c] - scaler.mins[c]) / range : 0.0;
    }
  }
  return out;
}

std::size_t NgramIndex::KeyHash::operator()(const std::array<std::uint32_t, 4>& key) const {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (auto part : key) h = (h ^ part) * 0x100000001b3ULL + (h >> 29);
  return static_cast<std::size_t>(h);
}

NgramIndex::NgramIndex(std::span<const TokenSequence> docs) {
  doc_counts_.resize(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    doc_ids_.push_back(docs[d].source.doc_id);
    std::vector<std::uint32_t> ids;
    ids.reserve(docs[d].tokens.size());
    for (const auto& token : docs[d].tokens) {
      auto [it, inserted] = token_ids_.try_emplace(token, static_cast<std::uint32_t>(tokens_.size()));
      if (inserted) tokens_.push_back(token);
      ids.push_back(it->second);
    }
    std::unordered_map<std::uint32_t, std::uint32_t> local;
    for (std::size_t start = 0; start < ids.size(); ++start) {
      std::array<std::uint32_t, 4> key{kNoToken, kNoToken, kNoToken, kNoToken};
      for (int n = 1; n <= NgramVocabulary::kMaxOrder && start + n <= ids.size(); ++n) {
        key[static_cast<std::size_t>(n - 1)] = ids[start + n - 1];
        auto [it, inserted] =
            ngram_ids_.try_emplace(key, static_cast<std::uint32_t>(ngrams_.size()));
        if (inserted) ngrams_.emplace_back(key.begin(), key.begin() + n);
        ++local[it->second];
      }
    }
    auto& counts = doc_counts_[d];
    counts.assign(local.begin(), local.end());
    std::sort(counts.begin(), counts.end());
  }
}

Ngram NgramIndex::ngram_tokens(std::uint32_t id) const {
  Ngram gram;
  for (auto token : ngrams_[id]) gram.push_back(tokens_[token]);
  return gram;
}

NgramVocabulary NgramIndex::vocabulary(std::span<const std::size_t> train_docs,
                                       std::size_t capacity) const {
  if (train_docs.empty()) throw ValidationError("build_vocab: no training documents");
  std::vector<std::uint64_t> totals(ngrams_.size(), 0);
  for (auto d : train_docs) {
    for (const auto& [id, count] : doc_counts_.at(d)) totals[id] += count;
  }
  std::vector<std::uint32_t> present;
  for (std::uint32_t id = 0; id < totals.size(); ++id) {
    if (totals[id] > 0) present.push_back(id);
  }
  // Lexicographic comparison on token strings, as in build_vocab.
  auto before = [&](std::uint32_t a, std::uint32_t b) {
    if (totals[a] != totals[b]) return totals[a] > totals[b];
    const auto& ga = ngrams_[a];
    const auto& gb = ngrams_[b];
    return std::lexicographical_compare(
        ga.begin(), ga.end(), gb.begin(), gb.end(),
        [&](std::uint32_t x, std::uint32_t y) { return tokens_[x] < tokens_[y]; });
  };
  const auto keep = std::min(capacity, present.size());
  std::partial_sort(present.begin(), present.begin() + static_cast<std::ptrdiff_t>(keep),
                    present.end(), before);
  std::vector<NgramVocabulary::Entry> entries;
  entries.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) entries.push_back({ngram_tokens(present[i]), totals[present[i]]});
  return NgramVocabulary(std::move(entries));
}

FeatureMatrix NgramIndex::counts(std::span<const std::size_t> docs,
                                 const NgramVocabulary& vocab) const {
  std::unordered_map<std::uint32_t, std::size_t> column_of;
  const auto& entries = vocab.entries();
  for (std::size_t c = 0; c < entries.size(); ++c) {
    std::array<std::uint32_t, 4> key{kNoToken, kNoToken, kNoToken, kNoToken};
    bool known = true;
    for (std::size_t i = 0; i < entries[c].ngram.size(); ++i) {
      const auto it = token_ids_.find(entries[c].ngram[i]);
      if (it == token_ids_.end()) {
        known = false;
        break;
      }
      key[i] = it->second;
    }
    if (!known) continue;
    const auto it = ngram_ids_.find(key);
    if (it != ngram_ids_.end()) column_of[it->second] = c;
  }
  std::vector<std::string> ids;
  for (auto d : docs) ids.push_back(doc_ids_.at(d));
  FeatureMatrix matrix(std::move(ids), vocab.column_names());
  for (std::size_t r = 0; r < docs.size(); ++r) {
    auto row = matrix.row(r);
    for (const auto& [id, count] : doc_counts_[docs[r]]) {
      const auto it = column_of.find(id);
      if (it != column_of.end()) row[it->second] = count;
    }
  }
  return matrix;
}

std::pair<FeatureMatrix, FeatureMatrix> NgramIndex::fit_transform(
    std::span<const std::size_t> train_docs, std::span<const std::size_t> eval_docs,
    std::size_t capacity) const {
  const auto vocab = vocabulary(train_docs, capacity);
  const auto train = counts(train_docs, vocab);
  const auto scaler = fit_scaler(train);
  return {transform(train, scaler), transform(counts(eval_docs, vocab), scaler)};
}

}  // namespace echr
