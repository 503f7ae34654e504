#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "echr/feature_matrix.hpp"
#include "echr/text_prep.hpp"

namespace echr {

using Ngram = std::vector<std::string>;

/// The most frequent contiguous 1- to 4-grams of a training corpus, ordered by
/// total count descending, then n-gram ascending.
class NgramVocabulary {
 public:
  static constexpr int kMinOrder = 1;
  static constexpr int kMaxOrder = 4;
  static constexpr std::size_t kDefaultCapacity = 2000;

  struct Entry {
    Ngram ngram;
    std::uint64_t train_count = 0;
    bool operator==(const Entry&) const = default;
  };

  NgramVocabulary() = default;
  explicit NgramVocabulary(std::vector<Entry> entries);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  /// Column index of an n-gram, or -1.
  int index_of(const Ngram& ngram) const;
  std::vector<std::string> column_names() const;

  bool operator==(const NgramVocabulary& other) const { return entries_ == other.entries_; }

 private:
  std::vector<Entry> entries_;
  std::map<Ngram, int> index_;
};

std::string ngram_label(const Ngram& ngram);

/// Counts every contiguous n-gram (n = 1..4) within each document and keeps the
/// `capacity` most frequent. Throws ValidationError on an empty corpus.
NgramVocabulary build_vocab(std::span<const TokenSequence> train_docs,
                            std::size_t capacity = NgramVocabulary::kDefaultCapacity);

/// Occurrence count of each vocabulary n-gram in doc.
std::vector<double> count_vector(const TokenSequence& doc, const NgramVocabulary& vocab);

/// One count row per document, row ids from source.doc_id.
FeatureMatrix vectorize(std::span<const TokenSequence> docs, const NgramVocabulary& vocab);

/// Column-wise (min, max) of a training matrix.
struct MinMaxScaler {
  std::vector<double> mins;
  std::vector<double> maxs;

  bool operator==(const MinMaxScaler&) const = default;
};

MinMaxScaler fit_scaler(const FeatureMatrix& train);

/// (x - min) / (max - min), or 0 for constant columns. No clipping.
FeatureMatrix transform(const FeatureMatrix& m, const MinMaxScaler& scaler);

/// Pre-counted n-grams of a fixed document set, so vocabularies can be refit
/// on many training subsets (cross-validation folds) without recounting.
/// Results are identical to build_vocab / vectorize on the same documents.
class NgramIndex {
 public:
  explicit NgramIndex(std::span<const TokenSequence> docs);

  std::size_t doc_count() const { return doc_counts_.size(); }
  std::size_t distinct_ngrams() const { return ngrams_.size(); }

  NgramVocabulary vocabulary(std::span<const std::size_t> train_docs,
                             std::size_t capacity = NgramVocabulary::kDefaultCapacity) const;

  /// Raw count rows for `docs` against `vocab`, which must come from this index.
  FeatureMatrix counts(std::span<const std::size_t> docs, const NgramVocabulary& vocab) const;

  /// Vocabulary and scaler fit on train_docs; returns scaled (train, eval).
  std::pair<FeatureMatrix, FeatureMatrix> fit_transform(
      std::span<const std::size_t> train_docs, std::span<const std::size_t> eval_docs,
      std::size_t capacity = NgramVocabulary::kDefaultCapacity) const;

 private:
  Ngram ngram_tokens(std::uint32_t id) const;

  std::vector<std::string> doc_ids_;
  std::vector<std::string> tokens_;
  std::vector<std::vector<std::uint32_t>> ngrams_;  // token ids per n-gram id
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> doc_counts_;
  std::unordered_map<std::string, std::uint32_t> token_ids_;
  struct KeyHash {
    std::size_t operator()(const std::array<std::uint32_t, 4>& key) const;
  };
  std::unordered_map<std::array<std::uint32_t, 4>, std::uint32_t, KeyHash> ngram_ids_;
};

}  // namespace echr
