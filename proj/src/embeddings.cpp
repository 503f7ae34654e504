#include "echr/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "echr/errors.hpp"
#include "echr/rng.hpp"

namespace echr {

namespace {

template <class T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

// Eight independent partial sums so the loop vectorizes without reordering
// flags; the combination order is fixed.
template <class T>
T dot(const T* a, const T* b, int n) {
  T part[8] = {};
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int k = 0; k < 8; ++k) part[k] += a[i + k] * b[i + k];
  }
  for (; i < n; ++i) part[0] += a[i] * b[i];
  return ((part[0] + part[1]) + (part[2] + part[3])) + ((part[4] + part[5]) + (part[6] + part[7]));
}

template <class T>
void axpy(T alpha, const T* x, T* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// Loss and gradients of the negative-sampling objective for one pair.
// Gradient outputs are overwritten.
template <class T>
double sgns_core(const T* center, const T* context, std::span<const T* const> negatives, int dim,
                 T* grad_center, T* grad_context, std::span<T* const> grad_negatives) {
  std::fill(grad_center, grad_center + dim, T(0));
  const T pos = dot(context, center, dim);
  // -log s(x) = log(1 + e^-x)
  double loss = std::log1p(std::exp(-static_cast<double>(pos)));
  const T pos_coeff = -(T(1) - sigmoid(pos));
  axpy(pos_coeff, context, grad_center, dim);
  for (int i = 0; i < dim; ++i) grad_context[i] = pos_coeff * center[i];
  for (std::size_t n = 0; n < negatives.size(); ++n) {
    const T neg = dot(negatives[n], center, dim);
    loss += std::log1p(std::exp(static_cast<double>(neg)));
    const T neg_coeff = sigmoid(neg);
    axpy(neg_coeff, negatives[n], grad_center, dim);
    for (int i = 0; i < dim; ++i) grad_negatives[n][i] = neg_coeff * center[i];
  }
  return loss;
}

struct Vocabulary {
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> counts;
  std::unordered_map<std::string, std::uint32_t> index;
};

Vocabulary build_vocabulary(std::span<const TokenSequence* const> docs, int min_count) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto* doc : docs) {
    for (const auto& token : doc->tokens) ++counts[token];
  }
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [token, count] : counts) {
    if (count >= static_cast<std::uint64_t>(min_count)) kept.emplace_back(token, count);
  }
  if (kept.empty()) {
    throw ValidationError("empty vocabulary after min_count filtering (min_count=" +
                          std::to_string(min_count) + ")");
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocabulary vocab;
  for (auto& [token, count] : kept) {
    vocab.index.emplace(token, static_cast<std::uint32_t>(vocab.tokens.size()));
    vocab.tokens.push_back(token);
    vocab.counts.push_back(count);
  }
  return vocab;
}

std::vector<std::uint32_t> to_ids(const TokenSequence& doc,
                                  const std::unordered_map<std::string, std::uint32_t>& index) {
  std::vector<std::uint32_t> ids;
  ids.reserve(doc.tokens.size());
  for (const auto& token : doc.tokens) {
    const auto it = index.find(token);
    if (it != index.end()) ids.push_back(it->second);
  }
  return ids;
}

// Unigram^0.75 table, filled as in the reference word2vec implementation.
// The table is a step function of the slot index, so only the first slot of
// each word is stored, plus a coarse per-bucket index for lookup.
class NegativeTable {
 public:
  NegativeTable(const std::vector<std::uint64_t>& counts, std::size_t size) : size_(size) {
    double total = 0.0;
    for (auto c : counts) total += std::pow(static_cast<double>(c), 0.75);
    std::size_t word = 0;
    double cumulative = std::pow(static_cast<double>(counts[0]), 0.75) / total;
    starts_.push_back(0);
    for (std::size_t a = 0; a < size; ++a) {
      if (static_cast<double>(a) / static_cast<double>(size) > cumulative && word + 1 < counts.size()) {
        ++word;
        cumulative += std::pow(static_cast<double>(counts[word]), 0.75) / total;
        // slot a + 1 is the first holding the new word
        starts_.push_back(a + 1);
      }
    }
    std::uint32_t w = 0;
    for (std::size_t b = 0; (b << kBucketShift) < size; ++b) {
      while (w + 1 < starts_.size() && starts_[w + 1] <= (b << kBucketShift)) ++w;
      bucket_word_.push_back(w);
    }
  }

  std::uint32_t draw(Rng& rng) const {
    const auto slot = rng.uniform_index(size_);
    std::uint32_t w = bucket_word_[slot >> kBucketShift];
    while (w + 1 < starts_.size() && starts_[w + 1] <= slot) ++w;
    return w;
  }

 private:
  static constexpr int kBucketShift = 10;
  std::size_t size_;
  std::vector<std::uint64_t> starts_;
  std::vector<std::uint32_t> bucket_word_;  // word at the first slot of each bucket
};

void init_uniform(std::vector<float>& values, std::size_t rows, int dim, Rng& rng) {
  values.resize(rows * static_cast<std::size_t>(dim));
  const double half = 0.5 / dim;
  for (auto& v : values) v = static_cast<float>(rng.uniform(-half, half));
}

double learning_rate(const EmbeddingParams& params, std::uint64_t done, std::uint64_t total) {
  if (total == 0) return params.lr_start;
  const double progress = static_cast<double>(done) / static_cast<double>(total);
  return std::max(params.lr_end, params.lr_start - (params.lr_start - params.lr_end) * progress);
}

std::string format_float(float v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.9g", static_cast<double>(v));
  return buffer;
}

void write_rows(std::ostream& out, const std::vector<std::string>& keys, const std::vector<float>& values,
                int dim, bool header) {
  if (header) out << keys.size() << ' ' << dim << '\n';
  for (std::size_t r = 0; r < keys.size(); ++r) {
    out << keys[r];
    for (int i = 0; i < dim; ++i) out << ' ' << format_float(values[r * static_cast<std::size_t>(dim) + static_cast<std::size_t>(i)]);
    out << '\n';
  }
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

struct VectorFile {
  int dim = 0;
  std::vector<std::string> keys;
  std::vector<float> values;
};

VectorFile read_vector_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file " + path.string());
  VectorFile file;
  std::unordered_map<std::string, std::size_t> seen;
  std::optional<std::size_t> declared_rows;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::vector<std::string> parts;
    std::string part;
    while (fields >> part) parts.push_back(part);
    const std::string where = path.string() + ":" + std::to_string(line_number) + ": ";
    if (line_number == 1 && parts.size() == 2 && all_digits(parts[0]) && all_digits(parts[1])) {
      declared_rows = std::stoull(parts[0]);
      file.dim = std::stoi(parts[1]);
      if (file.dim < 1) throw FormatError(where + "header declares dimension 0");
      continue;
    }
    if (parts.size() < 2) throw FormatError(where + "expected a token followed by values");
    const int dim = static_cast<int>(parts.size()) - 1;
    if (file.dim == 0) file.dim = dim;
    if (dim != file.dim) {
      throw FormatError(where + "dimension " + std::to_string(dim) + " differs from " +
                        std::to_string(file.dim));
    }
    if (!seen.emplace(parts[0], file.keys.size()).second) {
      throw FormatError(where + "duplicate token '" + parts[0] + "'");
    }
    file.keys.push_back(parts[0]);
    for (std::size_t i = 1; i < parts.size(); ++i) {
      char* end = nullptr;
      const float v = std::strtof(parts[i].c_str(), &end);
      if (*end != '\0' || !std::isfinite(v)) {
        throw FormatError(where + "non-numeric component '" + parts[i] + "'");
      }
      file.values.push_back(v);
    }
  }
  if (declared_rows && *declared_rows != file.keys.size()) {
    throw FormatError(path.string() + ": header declares " + std::to_string(*declared_rows) +
                      " rows, found " + std::to_string(file.keys.size()));
  }
  return file;
}

}  // namespace

void EmbeddingParams::validate() const {
  if (dim < 1) throw ValidationError("embedding dim must be >= 1");
  if (window < 1) throw ValidationError("embedding window must be >= 1");
  if (min_count < 1) throw ValidationError("embedding min_count must be >= 1");
  if (epochs < 1) throw ValidationError("embedding epochs must be >= 1");
  if (negatives < 1) throw ValidationError("embedding negatives must be >= 1");
  if (!(lr_start > lr_end && lr_end > 0.0)) {
    throw ValidationError("embedding learning rates must satisfy lr_start > lr_end > 0");
  }
  if (negative_table_size < 1) throw ValidationError("negative_table_size must be >= 1");
}

EmbeddingParams EmbeddingParams::word2vec_defaults(int dim) {
  EmbeddingParams params;
  params.dim = dim;
  return params;
}

EmbeddingParams EmbeddingParams::doc2vec_defaults(int dim) {
  EmbeddingParams params;
  params.dim = dim;
  params.window = 15;
  params.epochs = 20;
  return params;
}

WordEmbedding::WordEmbedding(int dim, std::vector<std::string> vocab, std::vector<float> vectors)
    : dim_(dim), vocab_(std::move(vocab)), vectors_(std::move(vectors)) {
  if (vectors_.size() != vocab_.size() * static_cast<std::size_t>(dim_)) {
    throw ValidationError("embedding vector storage does not match vocab x dim");
  }
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!index_.emplace(vocab_[i], i).second) {
      throw ValidationError("duplicate token in embedding: " + vocab_[i]);
    }
  }
}

long WordEmbedding::index_of(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? -1 : static_cast<long>(it->second);
}

std::optional<std::span<const float>> WordEmbedding::find(const std::string& token) const {
  const long row = index_of(token);
  if (row < 0) return std::nullopt;
  return vector(static_cast<std::size_t>(row));
}

SgnsLoss sgns_loss(std::span<const double> center, std::span<const double> context,
                   std::span<const std::vector<double>> negatives) {
  const auto dim = center.size();
  if (context.size() != dim) throw ValidationError("sgns_loss: vector length mismatch");
  for (const auto& neg : negatives) {
    if (neg.size() != dim) throw ValidationError("sgns_loss: vector length mismatch");
  }
  SgnsLoss result;
  result.grad_center.resize(dim);
  result.grad_context.resize(dim);
  result.grad_negatives.assign(negatives.size(), std::vector<double>(dim));
  std::vector<const double*> neg_ptrs;
  std::vector<double*> grad_ptrs;
  for (std::size_t n = 0; n < negatives.size(); ++n) {
    neg_ptrs.push_back(negatives[n].data());
    grad_ptrs.push_back(result.grad_negatives[n].data());
  }
  result.loss = sgns_core<double>(center.data(), context.data(), neg_ptrs, static_cast<int>(dim),
                                  result.grad_center.data(), result.grad_context.data(), grad_ptrs);
  return result;
}

WordEmbedding train_word_embedding(std::span<const TokenSequence> corpus, const EmbeddingParams& params) {
  params.validate();
  if (corpus.empty()) throw ValidationError("train_word_embedding: empty corpus");
  std::vector<const TokenSequence*> docs;
  for (const auto& doc : corpus) docs.push_back(&doc);
  const auto vocab = build_vocabulary(docs, params.min_count);
  const int dim = params.dim;
  const auto rows = vocab.tokens.size();

  Rng rng(params.seed);
  std::vector<float> input;
  init_uniform(input, rows, dim, rng);
  std::vector<float> output(rows * static_cast<std::size_t>(dim), 0.0f);
  const NegativeTable table(vocab.counts, params.negative_table_size);

  std::vector<std::vector<std::uint32_t>> sentences;
  std::uint64_t total_words = 0;
  std::uint64_t corpus_tokens = 0;
  for (const auto& doc : corpus) {
    corpus_tokens += doc.tokens.size();
    sentences.push_back(to_ids(doc, vocab.index));
    total_words += sentences.back().size();
  }
  const std::uint64_t total_updates = total_words * static_cast<std::uint64_t>(params.epochs);

  std::vector<float> grad_center(dim), grad_context(dim);
  std::vector<std::vector<float>> grad_neg(params.negatives, std::vector<float>(dim));
  std::vector<const float*> neg_ptrs;
  std::vector<float*> grad_neg_ptrs;
  std::vector<std::uint32_t> neg_ids;
  std::uint64_t done = 0;
  auto row = [dim](std::vector<float>& m, std::uint32_t r) { return m.data() + static_cast<std::size_t>(r) * dim; };

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    for (const auto& ids : sentences) {
      const long n = static_cast<long>(ids.size());
      for (long i = 0; i < n; ++i, ++done) {
        const float alpha = static_cast<float>(learning_rate(params, done, total_updates));
        float* center = row(input, ids[static_cast<std::size_t>(i)]);
        const long lo = std::max(0L, i - params.window);
        const long hi = std::min(n - 1, i + params.window);
        for (long j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const auto ctx = ids[static_cast<std::size_t>(j)];
          neg_ids.clear();
          neg_ptrs.clear();
          grad_neg_ptrs.clear();
          for (int k = 0; k < params.negatives; ++k) {
            const auto neg = table.draw(rng);
            if (neg == ctx) continue;
            neg_ptrs.push_back(row(output, neg));
            grad_neg_ptrs.push_back(grad_neg[neg_ids.size()].data());
            neg_ids.push_back(neg);
          }
          float* context = row(output, ctx);
          sgns_core<float>(center, context, neg_ptrs, dim, grad_center.data(), grad_context.data(),
                           grad_neg_ptrs);
          axpy(-alpha, grad_context.data(), context, dim);
          for (std::size_t k = 0; k < neg_ids.size(); ++k) {
            axpy(-alpha, grad_neg[k].data(), row(output, neg_ids[k]), dim);
          }
          axpy(-alpha, grad_center.data(), center, dim);
        }
      }
    }
  }

  WordEmbedding embedding(dim, vocab.tokens, std::move(input));
  embedding.params = params;
  embedding.corpus_token_count = corpus_tokens;
  return embedding;
}

WordEmbedding load_pretrained(const std::filesystem::path& path) {
  auto file = read_vector_file(path);
  if (file.keys.empty()) throw FormatError(path.string() + ": no vectors");
  return WordEmbedding(file.dim, std::move(file.keys), std::move(file.values));
}

void write_embedding(const WordEmbedding& embedding, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_rows(out, embedding.vocab(), embedding.data(), embedding.dim(), true);
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<double> average_doc_vector(const TokenSequence& doc, const WordEmbedding& embedding) {
  std::vector<double> mean(static_cast<std::size_t>(embedding.dim()), 0.0);
  std::size_t hits = 0;
  for (const auto& token : doc.tokens) {
    const auto vec = embedding.find(token);
    if (!vec) continue;
    ++hits;
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += (*vec)[i];
  }
  if (hits > 0) {
    for (auto& v : mean) v /= static_cast<double>(hits);
  }
  return mean;
}

long Doc2VecModel::doc_index(const std::string& doc_id) const {
  const auto it = std::find(doc_ids.begin(), doc_ids.end(), doc_id);
  return it == doc_ids.end() ? -1 : static_cast<long>(it - doc_ids.begin());
}

WordEmbedding Doc2VecModel::word_embedding() const {
  return WordEmbedding(dim(), vocab, word_vectors);
}

namespace {

// One distributed-memory pass over a document. Word and output weights are
// updated only when train_weights is set; the document vector always is.
void dm_document_pass(const std::vector<std::uint32_t>& ids, float* doc_vec,
                      float* word_vectors, float* output,
                      const NegativeTable& table, Rng& rng, const EmbeddingParams& params,
                      bool train_weights, std::uint64_t& done, std::uint64_t total,
                      std::vector<float>& hidden, std::vector<float>& error) {
  const int dim = params.dim;
  auto row = [dim](float* m, std::uint32_t r) { return m + static_cast<std::size_t>(r) * dim; };
  const long n = static_cast<long>(ids.size());
  for (long i = 0; i < n; ++i, ++done) {
    const float alpha = static_cast<float>(learning_rate(params, done, total));
    const long lo = std::max(0L, i - params.window);
    const long hi = std::min(n - 1, i + params.window);
    std::copy(doc_vec, doc_vec + dim, hidden.begin());
    int inputs = 1;
    for (long j = lo; j <= hi; ++j) {
      if (j == i) continue;
      axpy(1.0f, row(word_vectors, ids[static_cast<std::size_t>(j)]), hidden.data(), dim);
      ++inputs;
    }
    const float inv = 1.0f / static_cast<float>(inputs);
    for (auto& h : hidden) h *= inv;
    std::fill(error.begin(), error.end(), 0.0f);

    const auto center = ids[static_cast<std::size_t>(i)];
    for (int k = 0; k <= params.negatives; ++k) {
      std::uint32_t target = center;
      float label = 1.0f;
      if (k > 0) {
        target = table.draw(rng);
        if (target == center) continue;
        label = 0.0f;
      }
      float* out = row(output, target);
      const float g = (label - sigmoid(dot(out, hidden.data(), dim))) * alpha;
      axpy(g, out, error.data(), dim);
      if (train_weights) axpy(g, hidden.data(), out, dim);
    }
    // Each input vector receives the full error, as in the reference
    // cbow-mean update.
    axpy(1.0f, error.data(), doc_vec, dim);
    if (train_weights) {
      for (long j = lo; j <= hi; ++j) {
        if (j == i) continue;
        axpy(1.0f, error.data(), row(word_vectors, ids[static_cast<std::size_t>(j)]), dim);
      }
    }
  }
}

}  // namespace

Doc2VecModel train_doc2vec(std::span<const std::pair<std::string, TokenSequence>> corpus,
                           const EmbeddingParams& params) {
  params.validate();
  if (corpus.empty()) throw ValidationError("train_doc2vec: empty corpus");
  std::vector<const TokenSequence*> docs;
  for (const auto& [id, doc] : corpus) docs.push_back(&doc);
  auto vocab = build_vocabulary(docs, params.min_count);
  const int dim = params.dim;

  Doc2VecModel model;
  model.params = params;
  model.vocab = vocab.tokens;
  model.vocab_counts = vocab.counts;
  Rng rng(params.seed);
  init_uniform(model.word_vectors, vocab.tokens.size(), dim, rng);
  model.output_weights.assign(vocab.tokens.size() * static_cast<std::size_t>(dim), 0.0f);
  for (const auto& [id, doc] : corpus) model.doc_ids.push_back(id);
  init_uniform(model.doc_vectors, corpus.size(), dim, rng);
  const NegativeTable table(vocab.counts, params.negative_table_size);

  std::vector<std::vector<std::uint32_t>> sentences;
  std::uint64_t total_words = 0;
  for (const auto* doc : docs) {
    sentences.push_back(to_ids(*doc, vocab.index));
    total_words += sentences.back().size();
  }
  const std::uint64_t total = total_words * static_cast<std::uint64_t>(params.epochs);
  std::vector<float> hidden(dim), error(dim);
  std::uint64_t done = 0;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    for (std::size_t d = 0; d < sentences.size(); ++d) {
      float* doc_vec = model.doc_vectors.data() + d * static_cast<std::size_t>(dim);
      dm_document_pass(sentences[d], doc_vec, model.word_vectors.data(), model.output_weights.data(), table, rng,
                       params, true, done, total, hidden, error);
    }
  }
  return model;
}

std::vector<double> infer_doc_vector(const Doc2VecModel& model, const TokenSequence& doc,
                                     std::uint64_t seed, std::optional<int> epochs) {
  static thread_local const Doc2VecModel* cached_model = nullptr;
  static thread_local std::uint64_t cached_key = 0;
  static thread_local std::unique_ptr<NegativeTable> cached_table;

  const int dim = model.dim();
  Rng rng(seed);
  std::vector<float> doc_vec;
  init_uniform(doc_vec, 1, dim, rng);

  std::unordered_map<std::string, std::uint32_t> index;
  for (std::size_t i = 0; i < model.vocab.size(); ++i) index.emplace(model.vocab[i], static_cast<std::uint32_t>(i));
  const auto ids = to_ids(doc, index);
  if (!ids.empty()) {
    // The negative table depends only on the vocabulary counts.
    std::uint64_t key = model.params.negative_table_size;
    for (auto c : model.vocab_counts) key = mix_seed(key, c);
    if (cached_model != &model || cached_key != key || !cached_table) {
      cached_table = std::make_unique<NegativeTable>(model.vocab_counts, model.params.negative_table_size);
      cached_model = &model;
      cached_key = key;
    }
    const int passes = epochs.value_or(model.params.epochs);
    const long n = static_cast<long>(ids.size());
    const int window = model.params.window;
    // Word vectors are frozen, so each position's context sum and input
    // count are fixed across epochs.
    std::vector<float> context(static_cast<std::size_t>(n) * dim, 0.0f);
    std::vector<float> inverse(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
      float* sum = context.data() + static_cast<std::size_t>(i) * dim;
      const long lo = std::max(0L, i - window);
      const long hi = std::min(n - 1, i + window);
      for (long j = lo; j <= hi; ++j) {
        if (j != i) axpy(1.0f, model.word_vectors.data() + static_cast<std::size_t>(ids[j]) * dim, sum, dim);
      }
      inverse[static_cast<std::size_t>(i)] = 1.0f / static_cast<float>(hi - lo + 1);
    }
    const std::uint64_t total = ids.size() * static_cast<std::uint64_t>(passes);
    std::vector<float> hidden(dim), error(dim);
    std::uint64_t done = 0;
    for (int epoch = 0; epoch < passes; ++epoch) {
      for (long i = 0; i < n; ++i, ++done) {
        const float alpha = static_cast<float>(learning_rate(model.params, done, total));
        const float* sum = context.data() + static_cast<std::size_t>(i) * dim;
        const float inv = inverse[static_cast<std::size_t>(i)];
        for (int d = 0; d < dim; ++d) hidden[d] = (doc_vec[d] + sum[d]) * inv;
        std::fill(error.begin(), error.end(), 0.0f);
        const auto center = ids[static_cast<std::size_t>(i)];
        for (int k = 0; k <= model.params.negatives; ++k) {
          std::uint32_t target = center;
          float label = 1.0f;
          if (k > 0) {
            target = cached_table->draw(rng);
            if (target == center) continue;
            label = 0.0f;
          }
          const float* out = model.output_weights.data() + static_cast<std::size_t>(target) * dim;
          const float g = (label - sigmoid(dot(out, hidden.data(), dim))) * alpha;
          axpy(g, out, error.data(), dim);
        }
        axpy(1.0f, error.data(), doc_vec.data(), dim);
      }
    }
  }
  return {doc_vec.begin(), doc_vec.end()};
}

void save_doc2vec(const Doc2VecModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& p = model.params;
  nlohmann::ordered_json params;
  params["dim"] = p.dim;
  params["window"] = p.window;
  params["min_count"] = p.min_count;
  params["epochs"] = p.epochs;
  params["negatives"] = p.negatives;
  params["lr_start"] = p.lr_start;
  params["lr_end"] = p.lr_end;
  params["seed"] = p.seed;
  params["negative_table_size"] = p.negative_table_size;
  std::ofstream(dir / "params.json") << params.dump(2) << '\n';

  std::ofstream vocab(dir / "vocab.txt");
  for (std::size_t i = 0; i < model.vocab.size(); ++i) vocab << model.vocab[i] << ' ' << model.vocab_counts[i] << '\n';
  std::ofstream words(dir / "words.txt");
  write_rows(words, model.vocab, model.word_vectors, p.dim, true);
  std::ofstream output(dir / "output.txt");
  write_rows(output, model.vocab, model.output_weights, p.dim, true);
  std::ofstream docs(dir / "docs.txt");
  write_rows(docs, model.doc_ids, model.doc_vectors, p.dim, true);
  if (!vocab || !words || !output || !docs) throw IoError("failed writing doc2vec model to " + dir.string());
}

Doc2VecModel load_doc2vec(const std::filesystem::path& dir) {
  std::ifstream params_in(dir / "params.json");
  if (!params_in) throw IoError("cannot open " + (dir / "params.json").string());
  const auto params = nlohmann::json::parse(params_in);
  Doc2VecModel model;
  auto& p = model.params;
  p.dim = params.at("dim").get<int>();
  p.window = params.at("window").get<int>();
  p.min_count = params.at("min_count").get<int>();
  p.epochs = params.at("epochs").get<int>();
  p.negatives = params.at("negatives").get<int>();
  p.lr_start = params.at("lr_start").get<double>();
  p.lr_end = params.at("lr_end").get<double>();
  p.seed = params.at("seed").get<std::uint64_t>();
  p.negative_table_size = params.at("negative_table_size").get<std::size_t>();

  std::ifstream vocab(dir / "vocab.txt");
  std::string token;
  std::uint64_t count = 0;
  while (vocab >> token >> count) {
    model.vocab.push_back(token);
    model.vocab_counts.push_back(count);
  }
  auto words = read_vector_file(dir / "words.txt");
  auto output = read_vector_file(dir / "output.txt");
  auto docs = read_vector_file(dir / "docs.txt");
  if (words.keys != model.vocab || output.keys != model.vocab || words.dim != p.dim ||
      output.dim != p.dim || (!docs.keys.empty() && docs.dim != p.dim)) {
    throw FormatError("inconsistent doc2vec model files in " + dir.string());
  }
  model.word_vectors = std::move(words.values);
  model.output_weights = std::move(output.values);
  model.doc_ids = std::move(docs.keys);
  model.doc_vectors = std::move(docs.values);
  return model;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0 || bb == 0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

double cosine(std::span<const float> a, std::span<const float> b) {
  std::vector<double> da(a.begin(), a.end()), db(b.begin(), b.end());
  return cosine(std::span<const double>(da), std::span<const double>(db));
}

}  // namespace echr
