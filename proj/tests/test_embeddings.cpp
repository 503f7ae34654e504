#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "echr/embeddings.hpp"
#include "echr/errors.hpp"
#include "echr/rng.hpp"

using namespace echr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("echr_emb_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

TokenSequence seq(std::vector<std::string> tokens) {
  TokenSequence s;
  s.tokens = std::move(tokens);
  return s;
}

std::vector<double> random_vector(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (auto& x : v) x = rng.uniform01() * 2.0 - 1.0;
  return v;
}

double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic) + std::abs(numeric));
}

EmbeddingParams small_params(int dim, std::uint64_t seed) {
  auto p = EmbeddingParams::word2vec_defaults(dim);
  p.min_count = 1;
  p.seed = seed;
  p.negative_table_size = 100000;
  return p;
}

// Documents built from two disjoint vocabularies.
std::vector<std::pair<std::string, TokenSequence>> topic_corpus(Rng& rng, int per_topic) {
  std::vector<std::pair<std::string, TokenSequence>> corpus;
  for (int topic = 0; topic < 2; ++topic) {
    for (int d = 0; d < per_topic; ++d) {
      std::vector<std::string> tokens;
      for (int i = 0; i < 80; ++i) {
        tokens.push_back(std::string(topic == 0 ? "sun" : "rain") + std::to_string(rng.uniform_index(15)));
      }
      corpus.emplace_back("t" + std::to_string(topic) + "-" + std::to_string(d), seq(tokens));
    }
  }
  return corpus;
}

}  // namespace

TEST_CASE("sgns loss at zero vectors is 2 ln 2") {
  const std::vector<double> zero(4, 0.0);
  const std::vector<std::vector<double>> negatives{zero};
  CHECK(sgns_loss(zero, zero, negatives).loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("sgns loss vanishes as the positive score grows") {
  const std::vector<double> center{30.0, 0.0};
  const std::vector<double> context{30.0, 0.0};
  CHECK(sgns_loss(center, context, {}).loss < 1e-12);
  CHECK_THROWS_AS(sgns_loss(center, std::vector<double>{1.0}, {}), ValidationError);
}

TEST_CASE("sgns gradients match central finite differences") {
  Rng rng(99);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 1 + rng.uniform_index(8);
    const std::size_t k = rng.uniform_index(6);
    auto center = random_vector(rng, dim);
    auto context = random_vector(rng, dim);
    std::vector<std::vector<double>> negatives;
    for (std::size_t j = 0; j < k; ++j) negatives.push_back(random_vector(rng, dim));
    const auto analytic = sgns_loss(center, context, negatives);
    auto loss = [&] { return sgns_loss(center, context, negatives).loss; };
    auto probe = [&](double& x) {
      const double saved = x;
      x = saved + h;
      const double up = loss();
      x = saved - h;
      const double down = loss();
      x = saved;
      return (up - down) / (2.0 * h);
    };
    for (std::size_t i = 0; i < dim; ++i) {
      worst = std::max(worst, rel_error(analytic.grad_center[i], probe(center[i])));
      worst = std::max(worst, rel_error(analytic.grad_context[i], probe(context[i])));
      for (std::size_t j = 0; j < k; ++j) {
        worst = std::max(worst, rel_error(analytic.grad_negatives[j][i], probe(negatives[j][i])));
      }
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("min_count threshold") {
  std::vector<TokenSequence> corpus;
  std::vector<std::string> tokens;
  for (int i = 0; i < 10; ++i) tokens.push_back("ten");
  for (int i = 0; i < 9; ++i) tokens.push_back("nine");
  corpus.push_back(seq(tokens));
  auto params = small_params(8, 1);
  params.min_count = 10;
  const auto emb = train_word_embedding(corpus, params);
  CHECK(emb.contains("ten"));
  CHECK_FALSE(emb.contains("nine"));
  CHECK(emb.corpus_token_count == 19);

  params.min_count = 11;
  CHECK_THROWS_AS(train_word_embedding(corpus, params), ValidationError);
  CHECK_THROWS_AS(train_word_embedding(std::vector<TokenSequence>{}, params), ValidationError);
}

TEST_CASE("invalid parameters") {
  auto p = EmbeddingParams::word2vec_defaults(10);
  CHECK_NOTHROW(p.validate());
  p.window = 0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = EmbeddingParams::word2vec_defaults(10);
  p.lr_end = p.lr_start;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  CHECK(EmbeddingParams::doc2vec_defaults(100).window == 15);
  CHECK(EmbeddingParams::doc2vec_defaults(100).epochs == 20);
  CHECK(EmbeddingParams::word2vec_defaults(100).window == 5);
  CHECK(EmbeddingParams::word2vec_defaults(100).min_count == 10);
}

TEST_CASE("word embedding training is deterministic and finite") {
  Rng rng(4);
  const auto corpus = topic_corpus(rng, 10);
  std::vector<TokenSequence> docs;
  for (const auto& [id, s] : corpus) docs.push_back(s);
  const auto a = train_word_embedding(docs, small_params(16, 7));
  const auto b = train_word_embedding(docs, small_params(16, 7));
  CHECK(a == b);
  CHECK(std::all_of(a.data().begin(), a.data().end(), [](float v) { return std::isfinite(v); }));
  const auto c = train_word_embedding(docs, small_params(16, 8));
  CHECK_FALSE(a == c);
}

TEST_CASE("co-occurring words end up closer than non-co-occurring ones") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed * 31);
    std::vector<TokenSequence> docs;
    for (int d = 0; d < 60; ++d) {
      std::vector<std::string> tokens;
      for (int i = 0; i < 40; ++i) {
        const auto r = rng.uniform_index(10);
        if (d % 2 == 0 && r == 0) {
          tokens.push_back("alpha");
          tokens.push_back("beta");
        } else if (d % 2 == 1 && r == 0) {
          tokens.push_back("gamma");
        } else {
          tokens.push_back((d % 2 == 0 ? "x" : "y") + std::to_string(rng.uniform_index(20)));
        }
      }
      docs.push_back(seq(tokens));
    }
    auto params = small_params(20, seed);
    params.epochs = 10;
    const auto emb = train_word_embedding(docs, params);
    const auto alpha = *emb.find("alpha");
    CHECK(cosine(alpha, *emb.find("beta")) > cosine(alpha, *emb.find("gamma")));
  }
}

TEST_CASE("load_pretrained examples") {
  const auto path = scratch("two.txt");
  write_file(path, "a 1.0 0.0\nb 0.0 1.0\n");
  const auto emb = load_pretrained(path);
  CHECK(emb.dim() == 2);
  CHECK(emb.size() == 2);
  CHECK((*emb.find("b"))[1] == 1.0f);
  CHECK_FALSE(emb.params.has_value());

  write_file(path, "3 2\na 1 0\nb 0 1\nc 1 1\n");
  CHECK(load_pretrained(path).size() == 3);

  write_file(path, "a 1.0 0.0\nb 0.0 1.0 2.0\n");
  try {
    load_pretrained(path);
    FAIL("expected a dimension error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  write_file(path, "a 1.0 x\n");
  CHECK_THROWS_AS(load_pretrained(path), FormatError);
  write_file(path, "a 1 2\na 3 4\n");
  CHECK_THROWS_AS(load_pretrained(path), FormatError);
  CHECK_THROWS_AS(load_pretrained(scratch("missing.txt")), IoError);
}

TEST_CASE("write_embedding round trip") {
  Rng rng(12);
  std::vector<std::string> vocab{"court", "state", "article"};
  std::vector<float> vectors;
  for (int i = 0; i < 3 * 5; ++i) vectors.push_back(static_cast<float>(rng.uniform01() - 0.5) * 1e-3f);
  const WordEmbedding emb(5, vocab, vectors);
  const auto path = scratch("rt.txt");
  write_embedding(emb, path);
  CHECK(load_pretrained(path) == emb);
}

TEST_CASE("average_doc_vector examples") {
  const WordEmbedding emb(2, {"a", "b"}, {1, 0, 0, 1});
  CHECK(average_doc_vector(seq({"a", "b"}), emb) == std::vector<double>{0.5, 0.5});
  CHECK(average_doc_vector(seq({"q", "r"}), emb) == std::vector<double>{0.0, 0.0});
  const auto v = average_doc_vector(seq({"a", "a", "b", "zzz"}), emb);
  CHECK(v[0] == doctest::Approx(2.0 / 3.0));
  CHECK(v[1] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("doc2vec: shapes, determinism, persistence") {
  Rng rng(5);
  const auto corpus = topic_corpus(rng, 8);
  auto params = EmbeddingParams::doc2vec_defaults(12);
  params.min_count = 1;
  params.epochs = 5;
  params.negative_table_size = 100000;
  const auto a = train_doc2vec(corpus, params);
  CHECK(a.doc_ids.size() == corpus.size());
  CHECK(a.doc_vectors.size() == corpus.size() * 12);
  CHECK(a.doc_index(corpus[3].first) == 3);
  CHECK(a == train_doc2vec(corpus, params));

  const auto dir = scratch("d2v");
  save_doc2vec(a, dir);
  CHECK(load_doc2vec(dir) == a);

  const auto& doc = corpus[0].second;
  CHECK(infer_doc_vector(a, doc, 77) == infer_doc_vector(a, doc, 77));
}

TEST_CASE("doc2vec separates disjoint topics") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Rng rng(seed);
    const auto corpus = topic_corpus(rng, 15);
    auto params = EmbeddingParams::doc2vec_defaults(20);
    params.min_count = 1;
    params.seed = seed;
    params.negative_table_size = 100000;
    const auto model = train_doc2vec(corpus, params);
    double within = 0.0, across = 0.0;
    int n_within = 0, n_across = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      for (std::size_t j = i + 1; j < corpus.size(); ++j) {
        const double c = cosine(model.doc_vector(i), model.doc_vector(j));
        if ((i < 15) == (j < 15)) {
          within += c;
          ++n_within;
        } else {
          across += c;
          ++n_across;
        }
      }
    }
    CHECK(within / n_within > across / n_across);
  }
}

TEST_CASE("inferred training documents rank their own stored vector highly") {
  // Each document mixes a shared background with a few words of its own.
  Rng rng(17);
  std::vector<std::pair<std::string, TokenSequence>> corpus;
  for (int d = 0; d < 30; ++d) {
    std::vector<std::string> tokens;
    for (int i = 0; i < 120; ++i) {
      tokens.push_back(rng.uniform_index(2) == 0 ? "own" + std::to_string(d) + "x" + std::to_string(rng.uniform_index(4))
                                                 : "bg" + std::to_string(rng.uniform_index(30)));
    }
    corpus.emplace_back("d" + std::to_string(d), seq(tokens));
  }
  auto params = EmbeddingParams::doc2vec_defaults(24);
  params.min_count = 1;
  params.negative_table_size = 100000;
  const auto model = train_doc2vec(corpus, params);
  int passed = 0;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const auto inferred = infer_doc_vector(model, corpus[d].second, 1000 + d);
    std::vector<float> as_float(inferred.begin(), inferred.end());
    const double own = cosine(as_float, model.doc_vector(d));
    std::size_t beaten = 0;
    for (std::size_t o = 0; o < corpus.size(); ++o) {
      if (o != d && own > cosine(as_float, model.doc_vector(o))) ++beaten;
    }
    if (beaten * 10 >= (corpus.size() - 1) * 9) ++passed;
  }
  CHECK(passed == static_cast<int>(corpus.size()));
}

TEST_CASE("all out-of-vocabulary documents keep their initial vector") {
  Rng rng(2);
  const auto corpus = topic_corpus(rng, 5);
  auto params = EmbeddingParams::doc2vec_defaults(8);
  params.min_count = 1;
  params.epochs = 2;
  params.negative_table_size = 10000;
  const auto model = train_doc2vec(corpus, params);
  const auto oov = seq({"never", "seen", "words"});
  const auto once = infer_doc_vector(model, oov, 5, 1);
  CHECK(once == infer_doc_vector(model, oov, 5, 20));
  CHECK(once == infer_doc_vector(model, seq({}), 5, 20));
  CHECK(std::all_of(once.begin(), once.end(), [](double v) { return std::abs(v) <= 0.5 / 8; }));
}
