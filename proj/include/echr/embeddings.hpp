#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "echr/text_prep.hpp"

namespace echr {

struct EmbeddingParams {
  int dim = 100;
  /// Context radius in tokens on each side of the center word.
  int window = 5;
  int min_count = 10;
  int epochs = 5;
  int negatives = 5;
  double lr_start = 0.025;
  double lr_end = 0.0001;
  std::uint64_t seed = 1;
  std::size_t negative_table_size = 10'000'000;

  void validate() const;
  bool operator==(const EmbeddingParams&) const = default;

  static EmbeddingParams word2vec_defaults(int dim);
  static EmbeddingParams doc2vec_defaults(int dim);
};

/// Token -> vector map. Rows are stored contiguously in vocabulary order.
class WordEmbedding {
 public:
  WordEmbedding() = default;
  WordEmbedding(int dim, std::vector<std::string> vocab, std::vector<float> vectors);

  int dim() const { return dim_; }
  std::size_t size() const { return vocab_.size(); }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const std::vector<float>& data() const { return vectors_; }

  bool contains(const std::string& token) const { return index_.contains(token); }
  /// Row index of token, or -1.
  long index_of(const std::string& token) const;
  std::span<const float> vector(std::size_t row) const {
    return {vectors_.data() + row * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  std::optional<std::span<const float>> find(const std::string& token) const;

  /// Parameters used for training; empty for loaded pretrained files.
  std::optional<EmbeddingParams> params;
  std::uint64_t corpus_token_count = 0;

  bool operator==(const WordEmbedding& other) const {
    return dim_ == other.dim_ && vocab_ == other.vocab_ && vectors_ == other.vectors_;
  }

 private:
  int dim_ = 0;
  std::vector<std::string> vocab_;
  std::vector<float> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct SgnsLoss {
  double loss = 0.0;
  std::vector<double> grad_center;
  std::vector<double> grad_context;
  std::vector<std::vector<double>> grad_negatives;
};

/// Negative-sampling objective for one (center, context) pair:
///   -[log s(u_ctx . v_c) + sum_neg log s(-u_neg . v_c)]
/// with gradients w.r.t. the center input vector and each output vector.
SgnsLoss sgns_loss(std::span<const double> center, std::span<const double> context,
                   std::span<const std::vector<double>> negatives);

/// Skip-gram with negative sampling, single worker. Deterministic in
/// (corpus, params). Throws ValidationError if no token reaches min_count.
WordEmbedding train_word_embedding(std::span<const TokenSequence> corpus, const EmbeddingParams& params);

/// Text vector format: optional "<vocab_size> <dim>" header, then one
/// "token v1 ... vdim" line per token.
WordEmbedding load_pretrained(const std::filesystem::path& path);
void write_embedding(const WordEmbedding& embedding, const std::filesystem::path& path);

/// Mean of in-vocabulary token vectors (with multiplicity); zero vector if none.
std::vector<double> average_doc_vector(const TokenSequence& doc, const WordEmbedding& embedding);

/// Paragraph-vector model (distributed memory, mean of document and context
/// vectors) trained with negative sampling.
struct Doc2VecModel {
  EmbeddingParams params;
  std::vector<std::string> vocab;
  std::vector<std::uint64_t> vocab_counts;
  std::vector<float> word_vectors;    // vocab x dim
  std::vector<float> output_weights;  // vocab x dim
  std::vector<std::string> doc_ids;
  std::vector<float> doc_vectors;     // docs x dim

  int dim() const { return params.dim; }
  std::span<const float> doc_vector(std::size_t row) const {
    return {doc_vectors.data() + row * static_cast<std::size_t>(dim()), static_cast<std::size_t>(dim())};
  }
  long doc_index(const std::string& doc_id) const;
  WordEmbedding word_embedding() const;

  bool operator==(const Doc2VecModel&) const = default;
};

Doc2VecModel train_doc2vec(std::span<const std::pair<std::string, TokenSequence>> corpus,
                           const EmbeddingParams& params);

/// Fits a fresh document vector for `epochs` passes with word and output
/// weights frozen. Deterministic in (model, doc, seed).
std::vector<double> infer_doc_vector(const Doc2VecModel& model, const TokenSequence& doc,
                                     std::uint64_t seed, std::optional<int> epochs = std::nullopt);

/// Directory layout: params.json, vocab.txt, words.txt, output.txt, docs.txt.
void save_doc2vec(const Doc2VecModel& model, const std::filesystem::path& dir);
Doc2VecModel load_doc2vec(const std::filesystem::path& dir);

double cosine(std::span<const double> a, std::span<const double> b);
double cosine(std::span<const float> a, std::span<const float> b);

}  // namespace echr
