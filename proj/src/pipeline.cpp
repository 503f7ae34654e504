#include "echr/pipeline.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "echr/dataset.hpp"
#include "echr/judgment_parser.hpp"
#include "echr/models.hpp"
#include "echr/rng.hpp"
#include "echr/text_prep.hpp"

namespace echr {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 8> kStageNames = {"synth",    "parse",  "split", "embed",
                                                         "features", "search", "eval",  "report"};

// Sub-seed streams derived from the global seed.
enum SeedStream : std::uint64_t { kSynthSeed = 1, kSplitSeed, kEmbedSeed, kInferSeed, kFoldSeed, kModelSeed };

std::string hex64(std::uint64_t value) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016" PRIx64, value);
  return buffer;
}

std::string hash_json(const ojson& doc) { return hex64(fnv1a64(doc.dump())); }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const ojson& doc) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

// ------------------------------------------------------------ config parsing

void check_keys(const nlohmann::json& doc, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!doc.is_object()) throw ValidationError(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

template <class T>
T get_value(const nlohmann::json& doc, std::string_view where) {
  try {
    return doc.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string(where) + ": wrong value type");
  }
}

fs::path resolve(const fs::path& base, const nlohmann::json& value, std::string_view where) {
  fs::path path = get_value<std::string>(value, where);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <class Enum, class Parse>
std::vector<Enum> enum_list(const nlohmann::json& doc, std::string_view where, Parse parse) {
  std::vector<Enum> values;
  if (!doc.is_array() || doc.empty()) throw ValidationError(std::string(where) + " must be a non-empty array");
  for (const auto& item : doc) {
    const auto name = get_value<std::string>(item, where);
    const auto value = parse(name);
    if (!value) throw ValidationError(std::string(where) + ": unknown value '" + name + "'");
    values.push_back(*value);
  }
  return values;
}

SyntheticSpec parse_synthetic(const nlohmann::json& doc, const std::vector<std::string>& articles,
                              std::uint64_t global_seed) {
  check_keys(doc, "synthetic", {"articles", "docs_per_article_per_label", "background_vocab_size",
                                "signal_tokens_per_label", "signal_rate", "tokens_per_section", "seed",
                                "signal_sections"});
  SyntheticSpec spec;
  spec.articles = doc.contains("articles") ? get_value<std::vector<std::string>>(doc["articles"], "synthetic.articles")
                                           : articles;
  spec.seed = mix_seed(global_seed, kSynthSeed);
  if (doc.contains("docs_per_article_per_label"))
    spec.docs_per_article_per_label = get_value<int>(doc["docs_per_article_per_label"], "synthetic");
  if (doc.contains("background_vocab_size"))
    spec.background_vocab_size = get_value<int>(doc["background_vocab_size"], "synthetic");
  if (doc.contains("signal_tokens_per_label"))
    spec.signal_tokens_per_label = get_value<int>(doc["signal_tokens_per_label"], "synthetic");
  if (doc.contains("signal_rate")) spec.signal_rate = get_value<double>(doc["signal_rate"], "synthetic");
  if (doc.contains("tokens_per_section"))
    spec.tokens_per_section = get_value<int>(doc["tokens_per_section"], "synthetic");
  if (doc.contains("seed")) spec.seed = get_value<std::uint64_t>(doc["seed"], "synthetic.seed");
  if (doc.contains("signal_sections")) {
    spec.signal_sections = enum_list<SectionKind>(doc["signal_sections"], "synthetic.signal_sections",
                                                  [](std::string_view s) { return section_from_string(s); });
  }
  validate_spec(spec);
  return spec;
}

void parse_embedding(const nlohmann::json& doc, std::string_view where, EmbeddingParams& params) {
  check_keys(doc, where, {"window", "min_count", "epochs", "negatives", "lr_start", "lr_end", "negative_table_size"});
  if (doc.contains("window")) params.window = get_value<int>(doc["window"], where);
  if (doc.contains("min_count")) params.min_count = get_value<int>(doc["min_count"], where);
  if (doc.contains("epochs")) params.epochs = get_value<int>(doc["epochs"], where);
  if (doc.contains("negatives")) params.negatives = get_value<int>(doc["negatives"], where);
  if (doc.contains("lr_start")) params.lr_start = get_value<double>(doc["lr_start"], where);
  if (doc.contains("lr_end")) params.lr_end = get_value<double>(doc["lr_end"], where);
  if (doc.contains("negative_table_size"))
    params.negative_table_size = get_value<std::size_t>(doc["negative_table_size"], where);
  try {
    params.validate();
  } catch (const Error& e) {
    throw ValidationError(std::string(where) + ": " + e.what());
  }
}

std::map<std::string, double> parse_grid_point(const nlohmann::json& doc, std::string_view where) {
  if (!doc.is_object()) throw ValidationError(std::string(where) + ": grid points must be objects");
  std::map<std::string, double> params;
  for (const auto& [key, value] : doc.items()) {
    // null means "no limit" (e.g. max_depth)
    params[key] = value.is_null() ? kUnlimited : get_value<double>(value, where);
  }
  return params;
}

void parse_search(const nlohmann::json& doc, PipelineConfig& config) {
  check_keys(doc, "search", {"feature_types", "dimensions", "sections", "stopwords", "algorithms", "folds", "grid"});
  auto& space = config.space;
  if (doc.contains("feature_types"))
    space.feature_types = enum_list<FeatureType>(doc["feature_types"], "search.feature_types",
                                                 [](std::string_view s) { return feature_type_from_string(s); });
  if (doc.contains("dimensions")) {
    space.dimensions = get_value<std::vector<int>>(doc["dimensions"], "search.dimensions");
    for (int d : space.dimensions) {
      if (d != 100 && d != 200 && d != 2000) throw ValidationError("search.dimensions: must be 100, 200 or 2000");
    }
  }
  if (doc.contains("sections")) {
    space.sections = enum_list<SectionKind>(doc["sections"], "search.sections",
                                            [](std::string_view s) { return section_from_string(s); });
    for (auto s : space.sections) {
      if (std::find(kFeatureSections.begin(), kFeatureSections.end(), s) == kFeatureSections.end()) {
        throw ValidationError("search.sections: '" + std::string(to_string(s)) + "' cannot be used as features");
      }
    }
  }
  if (doc.contains("stopwords"))
    space.stopwords = enum_list<StopwordMode>(doc["stopwords"], "search.stopwords",
                                              [](std::string_view s) { return stopword_mode_from_string(s); });
  if (doc.contains("algorithms"))
    space.algorithms = enum_list<AlgorithmId>(doc["algorithms"], "search.algorithms",
                                              [](std::string_view s) { return algorithm_from_string(s); });
  if (doc.contains("folds")) {
    config.folds = get_value<int>(doc["folds"], "search.folds");
    if (config.folds < 2) throw ValidationError("search.folds must be at least 2");
  }
  if (doc.contains("grid")) {
    if (!doc["grid"].is_object()) throw ValidationError("search.grid must be an object");
    for (const auto& [name, points] : doc["grid"].items()) {
      const auto algorithm = algorithm_from_string(name);
      if (!algorithm) throw ValidationError("search.grid: unknown algorithm '" + name + "'");
      if (!points.is_array() || points.empty()) throw ValidationError("search.grid." + name + " must be a non-empty array");
      auto& list = space.grid_overrides[*algorithm];
      for (const auto& point : points) list.push_back(parse_grid_point(point, "search.grid." + name));
    }
  }
  if (enumerate_features(space).empty()) throw ValidationError("search: no compatible feature type / dimension pair");
}

// ------------------------------------------------------------ workspace

std::string article_slug(const std::string& article) {
  std::string slug;
  for (char c : article) slug += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return slug.empty() ? "_" : slug;
}

struct Paths {
  fs::path root;
  fs::path corpus_dir() const { return root / "corpus"; }
  fs::path corpus_file() const { return corpus_dir() / "corpus.jsonl"; }
  fs::path manifest(Stage stage) const { return root / std::string(to_string(stage)) / "manifest.json"; }
  fs::path split_file(const std::string& a) const { return root / "split" / (article_slug(a) + ".json"); }
  fs::path embed_dir() const { return root / "embed"; }
  fs::path feature_file(const FeatureKey& key) const { return root / "features" / (key.name() + ".csv"); }
  fs::path search_file(const std::string& a) const { return root / "search" / (article_slug(a) + ".json"); }
  fs::path eval_dir(const std::string& a) const { return root / "eval" / article_slug(a); }
  fs::path report_dir() const { return root / "report"; }
};

class Workspace {
 public:
  explicit Workspace(const PipelineConfig& config)
      : config(config),
        paths{config.out_dir},
        stopwords(config.stopwords ? StopWords::load(*config.stopwords) : StopWords::bundled()),
        headings(config.heading_config ? HeadingConfig::load(*config.heading_config) : HeadingConfig::defaults()) {}

  const PipelineConfig& config;
  Paths paths;
  StopWords stopwords;
  HeadingConfig headings;

  void require(Stage upstream) const {
    if (!fs::exists(paths.manifest(upstream))) {
      throw Error("missing " + paths.manifest(upstream).string() + "; run " + std::string(to_string(upstream)) +
                  " first");
    }
  }

  ojson manifest_header(Stage stage) const {
    ojson doc;
    doc["stage"] = std::string(to_string(stage));
    doc["config_hash"] = config.hash();
    doc["seed"] = config.seed;
    return doc;
  }

  const DocumentCollection& corpus() {
    if (!corpus_) corpus_ = load_corpus(paths.corpus_file());
    return *corpus_;
  }

  /// Standard-structure judgments recorded by the parse stage, by doc_id.
  const std::map<std::string, ParsedJudgment>& judgments() {
    if (judgments_) return *judgments_;
    const auto manifest = read_json(paths.manifest(Stage::parse));
    std::set<std::string> standard;
    for (const auto& id : manifest.at("standard")) standard.insert(id.get<std::string>());
    judgments_.emplace();
    for (const auto& doc : corpus().documents) {
      if (!standard.contains(doc.doc_id)) continue;
      auto result = segment(doc, headings);
      if (!is_standard(result)) throw Error("judgment " + doc.doc_id + " no longer segments; rerun parse");
      judgments_->emplace(doc.doc_id, std::get<ParsedJudgment>(std::move(result)));
    }
    return *judgments_;
  }

  const ParsedJudgment& judgment(const std::string& doc_id) {
    const auto& all = judgments();
    const auto it = all.find(doc_id);
    if (it == all.end()) throw Error("unknown judgment " + doc_id);
    return it->second;
  }

  TokenSequence tokens(const std::string& doc_id, SectionKind section, StopwordMode mode) {
    const auto& j = judgment(doc_id);
    auto seq = tokenize(normalize(section_text(j, section)), {doc_id, section, false});
    if (mode == StopwordMode::removed) seq = remove_stopwords(seq, stopwords);
    return seq;
  }

  std::vector<DatasetSplit> splits() {
    std::vector<DatasetSplit> out;
    for (const auto& article : config.articles) out.push_back(load_split(paths.split_file(article)));
    return out;
  }

  /// Feature keys the search can use; glove/law2vec need pretrained files of
  /// the key's dimension.
  std::vector<FeatureKey> available_features(std::vector<std::string>* skipped = nullptr) const {
    std::vector<FeatureKey> keys;
    for (const auto& key : enumerate_features(config.space)) {
      if (key.feature_type == FeatureType::glove || key.feature_type == FeatureType::law2vec) {
        if (!pretrained_dims().contains({key.feature_type, key.dimension})) {
          if (skipped) skipped->push_back(key.name());
          continue;
        }
      }
      keys.push_back(key);
    }
    return keys;
  }

  std::map<std::pair<FeatureType, int>, fs::path> pretrained_dims() const {
    if (pretrained_) return *pretrained_;
    std::map<std::pair<FeatureType, int>, fs::path> dims;
    for (const auto& [type, files] : config.pretrained) {
      for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) throw IoError("cannot open pretrained embedding " + file.string());
        std::string line;
        std::getline(in, line);
        std::istringstream fields(line);
        std::vector<std::string> parts;
        for (std::string f; fields >> f;) parts.push_back(f);
        // header "<n> <dim>" or a vector line "token v1 ... vdim"
        const int dim = parts.size() == 2 ? std::stoi(parts[1]) : static_cast<int>(parts.size()) - 1;
        dims[{type, dim}] = file;
      }
    }
    pretrained_ = dims;
    return dims;
  }

 private:
  std::optional<DocumentCollection> corpus_;
  std::optional<std::map<std::string, ParsedJudgment>> judgments_;
  mutable std::optional<std::map<std::pair<FeatureType, int>, fs::path>> pretrained_;
};

std::vector<Label> labels_of(std::span<const LabeledCase> cases) {
  std::vector<Label> labels;
  for (const auto& c : cases) labels.push_back(c.label);
  return labels;
}

std::uint64_t article_seed(std::uint64_t seed, const std::string& article) {
  return mix_seed(seed, fnv1a64(article));
}

// ------------------------------------------------------------ stages

void stage_synth(Workspace& ws, std::ostream& log) {
  const auto& config = ws.config;
  DocumentCollection collection;
  ojson manifest = ws.manifest_header(Stage::synth);
  if (config.synthetic) {
    collection = generate_synthetic(*config.synthetic);
    manifest["source"] = "synthetic";
    manifest["synthetic_seed"] = config.synthetic->seed;
  } else {
    collection = load_corpus(*config.corpus);
    validate_collection(collection);
    manifest["source"] = config.corpus->string();
  }
  fs::create_directories(ws.paths.corpus_dir());
  save_corpus(collection, ws.paths.corpus_file());
  manifest["documents"] = collection.documents.size();
  manifest["provenance"] = collection.provenance;
  manifest["corpus_hash"] = hex64(fnv1a64(read_text(ws.paths.corpus_file())));
  write_json(ws.paths.manifest(Stage::synth), manifest);
  log << "synth: " << collection.documents.size() << " documents\n";
}

void stage_parse(Workspace& ws, std::ostream& log) {
  ws.require(Stage::synth);
  ojson manifest = ws.manifest_header(Stage::parse);
  auto standard = ojson::array();
  auto excluded = ojson::array();
  auto other = ojson::array();
  std::vector<ParsedJudgment> parsed;
  for (const auto& doc : ws.corpus().documents) {
    if (doc.doc_type != DocType::judgment) {
      other.push_back({{"doc_id", doc.doc_id}, {"doc_type", std::string(to_string(doc.doc_type))},
                       {"decision_date", doc.decision_date}});
      continue;
    }
    auto result = segment(doc, ws.headings);
    if (const auto* error = std::get_if<StructureError>(&result)) {
      excluded.push_back({{"doc_id", doc.doc_id}, {"reason", error->message()}});
      continue;
    }
    standard.push_back(doc.doc_id);
    parsed.push_back(std::get<ParsedJudgment>(std::move(result)));
  }
  ojson pools;
  for (const auto& article : ws.config.articles) {
    const auto pool = label_cases(parsed, article);
    pools[article] = {{"v", pool.v_count}, {"nv", pool.nv_count}};
  }
  manifest["standard"] = standard;
  manifest["excluded"] = excluded;
  manifest["non_judgments"] = other;
  manifest["pools"] = pools;
  write_json(ws.paths.manifest(Stage::parse), manifest);
  log << "parse: " << standard.size() << " standard judgments, " << excluded.size() << " excluded\n";
}

void stage_split(Workspace& ws, std::ostream& log) {
  ws.require(Stage::parse);
  const auto& config = ws.config;
  std::vector<ParsedJudgment> parsed;
  for (const auto& [id, j] : ws.judgments()) parsed.push_back(j);
  const std::uint64_t seed = config.split_seed.value_or(mix_seed(config.seed, kSplitSeed));
  ojson manifest = ws.manifest_header(Stage::split);
  manifest["split_seed"] = seed;
  ojson articles;
  for (const auto& article : config.articles) {
    const auto pool = label_cases(parsed, article);
    const auto override_it = config.r_target.find(article);
    const bool overridden = override_it != config.r_target.end();
    const double r_target = overridden ? override_it->second : historical_ratio(pool);
    const auto split = make_split(pool, r_target, config.holdout_fraction, article_seed(seed, article));
    fs::create_directories(ws.paths.split_file(article).parent_path());
    save_split(split, ws.paths.split_file(article));
    // The heuristic predicts the historically more common outcome: the pool
    // counts, or the supplied ratio as realized in the test set.
    const long v = overridden ? split.test_count(Label::violation) : pool.v_count;
    const long nv = overridden ? split.test_count(Label::nonviolation) : pool.nv_count;
    articles[article] = {{"file", ws.paths.split_file(article).filename().string()},
                         {"r_target", r_target},
                         {"r_target_source", overridden ? "override" : "pool"},
                         {"pool", {{"v", pool.v_count}, {"nv", pool.nv_count}}},
                         {"heuristic_reference", {{"v", v}, {"nv", nv}}},
                         {"train", split.train.size()},
                         {"test", split.test.size()}};
    log << "split: article " << article << " train " << split.train.size() << " test " << split.test.size() << '\n';
  }
  manifest["articles"] = articles;
  write_json(ws.paths.manifest(Stage::split), manifest);
}

/// Leakage-safe text: procedure and facts of every standard judgment, plus
/// non-judgment documents dated no later than the earliest test judgment.
std::vector<std::pair<std::string, TokenSequence>> embedding_corpus(Workspace& ws) {
  std::string earliest;
  for (const auto& split : ws.splits()) {
    for (const auto& c : split.test) {
      const auto& date = ws.judgment(c.doc_id).decision_date;
      if (earliest.empty() || date < earliest) earliest = date;
    }
  }
  std::vector<std::pair<std::string, TokenSequence>> corpus;
  for (const auto& [id, j] : ws.judgments()) {
    corpus.emplace_back(id, tokenize(normalize(strip_outcome_text(j)), {id, SectionKind::procedure_plus_facts, false}));
  }
  for (const auto& doc : ws.corpus().documents) {
    if (doc.doc_type == DocType::judgment || doc.decision_date > earliest) continue;
    corpus.emplace_back(doc.doc_id, tokenize(normalize(doc.body), {doc.doc_id, SectionKind::procedure_plus_facts, false}));
  }
  return corpus;
}

std::vector<int> embedding_dims(const PipelineConfig& config, FeatureType type) {
  std::set<int> dims;
  for (const auto& key : enumerate_features(config.space)) {
    if (key.feature_type == type) dims.insert(key.dimension);
  }
  return {dims.begin(), dims.end()};
}

fs::path echr2vec_file(const Paths& paths, int dim) { return paths.embed_dir() / ("echr2vec-" + std::to_string(dim) + ".txt"); }
fs::path doc2vec_dir(const Paths& paths, int dim) { return paths.embed_dir() / ("doc2vec-" + std::to_string(dim)); }

void stage_embed(Workspace& ws, std::ostream& log) {
  ws.require(Stage::split);
  const auto& config = ws.config;
  const auto w2v_dims = embedding_dims(config, FeatureType::echr2vec);
  const auto d2v_dims = embedding_dims(config, FeatureType::doc2vec);
  const std::uint64_t seed = mix_seed(config.seed, kEmbedSeed);

  // Inputs of this stage; unchanged inputs reuse the existing artifacts.
  ojson inputs;
  inputs["word2vec"] = config.canonical()["embedding"]["word2vec"];
  inputs["doc2vec"] = config.canonical()["embedding"]["doc2vec"];
  inputs["echr2vec_dims"] = w2v_dims;
  inputs["doc2vec_dims"] = d2v_dims;
  inputs["seed"] = seed;
  inputs["parse"] = hex64(fnv1a64(read_text(ws.paths.manifest(Stage::parse))));
  inputs["split"] = hex64(fnv1a64(read_text(ws.paths.manifest(Stage::split))));
  const auto input_hash = hash_json(inputs);
  const auto manifest_path = ws.paths.manifest(Stage::embed);
  if (fs::exists(manifest_path)) {
    const auto previous = read_json(manifest_path);
    bool complete = previous.value("input_hash", "") == input_hash;
    for (int d : w2v_dims) complete = complete && fs::exists(echr2vec_file(ws.paths, d));
    for (int d : d2v_dims) complete = complete && fs::exists(doc2vec_dir(ws.paths, d) / "params.json");
    if (complete) {
      log << "embed: inputs unchanged, reusing " << ws.paths.embed_dir().string() << '\n';
      return;
    }
    fs::remove(manifest_path);
  }

  const auto corpus = embedding_corpus(ws);
  std::vector<TokenSequence> sequences;
  std::uint64_t tokens = 0;
  for (const auto& [id, seq] : corpus) {
    sequences.push_back(seq);
    tokens += seq.tokens.size();
  }
  ojson manifest = ws.manifest_header(Stage::embed);
  manifest["input_hash"] = input_hash;
  manifest["embedding_seed"] = seed;
  manifest["corpus_documents"] = corpus.size();
  manifest["corpus_tokens"] = tokens;
  ojson artifacts = ojson::array();
  fs::create_directories(ws.paths.embed_dir());
  for (int dim : w2v_dims) {
    auto params = config.word2vec;
    params.dim = dim;
    params.seed = mix_seed(seed, static_cast<std::uint64_t>(dim));
    const auto embedding = train_word_embedding(sequences, params);
    write_embedding(embedding, echr2vec_file(ws.paths, dim));
    artifacts.push_back({{"type", "echr2vec"}, {"dim", dim}, {"seed", params.seed}, {"vocab", embedding.size()},
                         {"file", echr2vec_file(ws.paths, dim).filename().string()}});
    log << "embed: echr2vec-" << dim << " vocab " << embedding.size() << '\n';
  }
  for (int dim : d2v_dims) {
    auto params = config.doc2vec;
    params.dim = dim;
    params.seed = mix_seed(seed, 1000 + static_cast<std::uint64_t>(dim));
    const auto model = train_doc2vec(corpus, params);
    save_doc2vec(model, doc2vec_dir(ws.paths, dim));
    artifacts.push_back({{"type", "doc2vec"}, {"dim", dim}, {"seed", params.seed}, {"vocab", model.vocab.size()},
                         {"dir", doc2vec_dir(ws.paths, dim).filename().string()}});
    log << "embed: doc2vec-" << dim << " vocab " << model.vocab.size() << '\n';
  }
  manifest["artifacts"] = artifacts;
  write_json(manifest_path, manifest);
}

/// All judgments appearing in any split, sorted.
std::vector<std::string> split_doc_ids(Workspace& ws) {
  std::set<std::string> ids;
  for (const auto& split : ws.splits()) {
    for (const auto& c : split.train) ids.insert(c.doc_id);
    for (const auto& c : split.test) ids.insert(c.doc_id);
  }
  return {ids.begin(), ids.end()};
}

void stage_features(Workspace& ws, std::ostream& log) {
  ws.require(Stage::embed);
  const auto& config = ws.config;
  std::vector<std::string> skipped;
  const auto keys = ws.available_features(&skipped);
  const auto doc_ids = split_doc_ids(ws);
  const std::uint64_t infer_seed = mix_seed(config.seed, kInferSeed);

  std::map<std::pair<FeatureType, int>, WordEmbedding> word_models;
  std::map<int, Doc2VecModel> doc_models;
  ojson written = ojson::array();
  for (const auto& key : keys) {
    if (key.feature_type == FeatureType::ngram) continue;
    std::vector<std::string> columns;
    for (int c = 0; c < key.dimension; ++c) columns.push_back("e" + std::to_string(c));
    FeatureMatrix matrix(doc_ids, columns);
    if (key.feature_type == FeatureType::doc2vec) {
      if (!doc_models.contains(key.dimension)) doc_models.emplace(key.dimension, load_doc2vec(doc2vec_dir(ws.paths, key.dimension)));
      const auto& model = doc_models.at(key.dimension);
      for (std::size_t r = 0; r < doc_ids.size(); ++r) {
        const auto seq = ws.tokens(doc_ids[r], key.section, key.stopwords);
        const auto vec = infer_doc_vector(model, seq, mix_seed(infer_seed, fnv1a64(key.name() + '/' + doc_ids[r])));
        std::copy(vec.begin(), vec.end(), matrix.row(r).begin());
      }
    } else {
      const std::pair<FeatureType, int> model_key{key.feature_type, key.dimension};
      if (!word_models.contains(model_key)) {
        const fs::path file = key.feature_type == FeatureType::echr2vec ? echr2vec_file(ws.paths, key.dimension)
                                                                         : ws.pretrained_dims().at(model_key);
        word_models.emplace(model_key, load_pretrained(file));
      }
      const auto& embedding = word_models.at(model_key);
      if (embedding.dim() != key.dimension) throw Error(key.name() + ": embedding dimension mismatch");
      for (std::size_t r = 0; r < doc_ids.size(); ++r) {
        const auto vec = average_doc_vector(ws.tokens(doc_ids[r], key.section, key.stopwords), embedding);
        std::copy(vec.begin(), vec.end(), matrix.row(r).begin());
      }
    }
    matrix.validate();
    fs::create_directories(ws.paths.feature_file(key).parent_path());
    write_feature_csv(matrix, ws.paths.feature_file(key));
    written.push_back(key.name());
    log << "features: " << key.name() << '\n';
  }
  ojson manifest = ws.manifest_header(Stage::features);
  manifest["inference_seed"] = infer_seed;
  manifest["documents"] = doc_ids.size();
  manifest["written"] = written;
  manifest["ngram"] = "computed per fold from section tokens";
  manifest["skipped"] = skipped;
  write_json(ws.paths.manifest(Stage::features), manifest);
}

/// Feature sources for a fixed list of cases.
class SourceCache {
 public:
  SourceCache(Workspace& ws, std::vector<std::string> doc_ids, std::span<const FeatureKey> keys) {
    std::map<std::string, std::size_t> wanted;
    for (std::size_t i = 0; i < doc_ids.size(); ++i) wanted[doc_ids[i]] = i;
    for (const auto& key : keys) {
      if (key.feature_type == FeatureType::ngram) {
        std::vector<TokenSequence> docs;
        for (const auto& id : doc_ids) docs.push_back(ws.tokens(id, key.section, key.stopwords));
        sources_.emplace(key.name(), std::make_unique<NgramFeatureSource>(docs, static_cast<std::size_t>(key.dimension)));
        continue;
      }
      const auto path = ws.paths.feature_file(key);
      if (!fs::exists(path)) throw Error("missing " + path.string() + "; run features first");
      const auto all = read_feature_csv(path);
      std::vector<std::size_t> rows(doc_ids.size(), all.rows());
      for (std::size_t r = 0; r < all.rows(); ++r) {
        const auto it = wanted.find(all.row_ids[r]);
        if (it != wanted.end()) rows[it->second] = r;
      }
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] == all.rows()) throw Error(path.string() + " has no row for " + doc_ids[i]);
      }
      sources_.emplace(key.name(), std::make_unique<DenseFeatureSource>(all.select_rows(rows)));
    }
  }

  const FeatureSource& get(const FeatureKey& key) const { return *sources_.at(key.name()); }

 private:
  std::map<std::string, std::unique_ptr<FeatureSource>> sources_;
};

std::vector<ExperimentConfig> search_configs(const Workspace& ws, const std::string& article) {
  const auto keys = ws.available_features();
  auto configs = enumerate(ws.config.space, article, mix_seed(ws.config.seed, kModelSeed));
  std::erase_if(configs, [&](const ExperimentConfig& c) {
    return std::find(keys.begin(), keys.end(), c.features) == keys.end();
  });
  return configs;
}

void stage_search(Workspace& ws, std::ostream& log) {
  ws.require(Stage::features);
  const auto& config = ws.config;
  const auto keys = ws.available_features();
  if (keys.empty()) throw Error("no usable feature type (glove/law2vec need pretrained files)");
  ojson manifest = ws.manifest_header(Stage::search);
  const std::uint64_t fold_seed = mix_seed(config.seed, kFoldSeed);
  manifest["fold_seed"] = fold_seed;
  manifest["model_seed"] = mix_seed(config.seed, kModelSeed);
  manifest["folds"] = config.folds;
  ojson summary;
  for (const auto& split : ws.splits()) {
    std::vector<std::string> ids;
    for (const auto& c : split.train) ids.push_back(c.doc_id);
    const auto labels = labels_of(split.train);
    const SourceCache cache(ws, ids, keys);
    const auto folds = kfold(labels.size(), static_cast<std::size_t>(config.folds),
                             article_seed(fold_seed, split.article), labels);
    const auto configs = search_configs(ws, split.article);
    const auto result = grid_search(configs, labels, [&](const FeatureKey& key) -> const FeatureSource& {
      return cache.get(key);
    }, folds, config.workers);

    ojson doc;
    doc["article"] = split.article;
    doc["best"] = config_to_json(result.best);
    doc["best_cv_accuracy"] = result.best_result.mean_accuracy;
    auto results = ojson::array();
    for (const auto& r : result.all) {
      results.push_back({{"config", config_to_json(r.config)},
                         {"fold_accuracies", r.fold_accuracies},
                         {"mean_accuracy", r.mean_accuracy}});
    }
    doc["results"] = results;
    auto failures = ojson::array();
    for (const auto& [c, cause] : result.failures) failures.push_back({{"config", config_to_json(c)}, {"error", cause}});
    doc["failures"] = failures;
    write_json(ws.paths.search_file(split.article), doc);
    summary[split.article] = {{"configs", configs.size()}, {"failures", result.failures.size()},
                              {"best", result.best.label()}, {"cv_accuracy", result.best_result.mean_accuracy}};
    log << "search: article " << split.article << " " << configs.size() << " configs, best " << result.best.label()
        << " cv " << result.best_result.mean_accuracy << '\n';
  }
  manifest["articles"] = summary;
  write_json(ws.paths.manifest(Stage::search), manifest);
}

void stage_eval(Workspace& ws, std::ostream& log) {
  ws.require(Stage::search);
  const auto split_manifest = read_json(ws.paths.manifest(Stage::split));
  ojson manifest = ws.manifest_header(Stage::eval);
  auto done = ojson::array();
  for (const auto& split : ws.splits()) {
    const auto search = read_json(ws.paths.search_file(split.article));
    const auto best = config_from_json(search.at("best"));
    std::vector<std::string> ids;
    std::vector<std::size_t> train_idx, test_idx;
    for (const auto& c : split.train) {
      train_idx.push_back(ids.size());
      ids.push_back(c.doc_id);
    }
    for (const auto& c : split.test) {
      test_idx.push_back(ids.size());
      ids.push_back(c.doc_id);
    }
    const std::vector<FeatureKey> key{best.features};
    const SourceCache cache(ws, ids, key);
    const auto [train_x, test_x] = cache.get(best.features).fit_transform(train_idx, test_idx);
    const auto train_y = labels_of(split.train);
    const auto test_y = labels_of(split.test);
    const auto model = fit(best.hyper, train_x, train_y);
    const auto& reference = split_manifest.at("articles").at(split.article).at("heuristic_reference");
    const auto heuristic = fit_heuristic(reference.at("v").get<long>(), reference.at("nv").get<long>());

    ArticleResult result;
    result.article = split.article;
    result.best = best;
    result.cv_accuracy = search.at("best_cv_accuracy").get<double>();
    result.model = evaluate(model, test_x, test_y);
    result.heuristic = evaluate(heuristic, test_x, test_y);
    result.heuristic_v = reference.at("v").get<long>();
    result.heuristic_nv = reference.at("nv").get<long>();
    result.train_size = static_cast<long>(split.train.size());
    result.test_size = static_cast<long>(split.test.size());
    result.r_target = split.r_target;

    const auto dir = ws.paths.eval_dir(split.article);
    fs::create_directories(dir);
    save_model(model, dir / "model.json");
    save_model(heuristic, dir / "heuristic.json");
    MetricsReport single;
    single.articles.push_back(result);
    write_json(dir / "result.json", report_to_json(single)["articles"][0]);
    done.push_back(split.article);
    log << "eval: article " << split.article << " model " << result.model.accuracy << " heuristic "
        << result.heuristic.accuracy << '\n';
  }
  manifest["articles"] = done;
  write_json(ws.paths.manifest(Stage::eval), manifest);
}

void stage_report(Workspace& ws, std::ostream& log) {
  ws.require(Stage::eval);
  auto entries = ojson::array();
  for (const auto& article : ws.config.articles) {
    entries.push_back(ojson::parse(read_text(ws.paths.eval_dir(article) / "result.json")));
  }
  ojson doc;
  doc["seed"] = ws.config.seed;
  doc["config_hash"] = ws.config.hash();
  doc["articles"] = entries;
  doc["weighted_average"] = {{"model_accuracy", 0.0}, {"heuristic_accuracy", 0.0},
                             {"model_precision", nullptr}, {"model_recall", nullptr}};
  auto report = report_from_json(doc);
  report.weighted = compute_weighted(report.articles);
  render_report(report, ws.paths.report_dir());
  ojson manifest = ws.manifest_header(Stage::report);
  manifest["files"] = {"report.json", "report.txt", "report.csv"};
  write_json(ws.paths.manifest(Stage::report), manifest);
  log << "report: weighted model accuracy " << report.weighted.model_accuracy << ", heuristic "
      << report.weighted.heuristic_accuracy << '\n';
}

}  // namespace

std::string_view to_string(Stage stage) { return kStageNames[static_cast<std::size_t>(stage)]; }

std::optional<Stage> stage_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i) {
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  }
  return std::nullopt;
}

ojson PipelineConfig::canonical() const {
  auto embedding_json = [](const EmbeddingParams& p) {
    return ojson{{"window", p.window},     {"min_count", p.min_count}, {"epochs", p.epochs},
                 {"negatives", p.negatives}, {"lr_start", p.lr_start}, {"lr_end", p.lr_end},
                 {"negative_table_size", p.negative_table_size}};
  };
  ojson doc;
  if (corpus) doc["corpus"] = corpus->string();
  if (synthetic) {
    const auto& s = *synthetic;
    std::vector<std::string> sections;
    for (auto k : s.signal_sections) sections.emplace_back(to_string(k));
    doc["synthetic"] = {{"articles", s.articles},
                        {"docs_per_article_per_label", s.docs_per_article_per_label},
                        {"background_vocab_size", s.background_vocab_size},
                        {"signal_tokens_per_label", s.signal_tokens_per_label},
                        {"signal_rate", s.signal_rate},
                        {"tokens_per_section", s.tokens_per_section},
                        {"seed", s.seed},
                        {"signal_sections", sections}};
  }
  doc["articles"] = articles;
  doc["heading_config"] = heading_config ? ojson(heading_config->string()) : ojson(nullptr);
  doc["stopwords"] = stopwords ? ojson(stopwords->string()) : ojson(nullptr);
  ojson pre = ojson::object();
  for (const auto& [type, files] : pretrained) {
    auto list = ojson::array();
    for (const auto& f : files) list.push_back(f.string());
    pre[std::string(to_string(type))] = list;
  }
  doc["pretrained"] = pre;
  doc["embedding"] = {{"word2vec", embedding_json(word2vec)}, {"doc2vec", embedding_json(doc2vec)}};
  doc["split"] = {{"holdout_fraction", holdout_fraction}, {"r_target", r_target},
                  {"seed", split_seed ? ojson(*split_seed) : ojson(nullptr)}};
  auto names = [](const auto& values) {
    std::vector<std::string> out;
    for (const auto& v : values) out.emplace_back(to_string(v));
    return out;
  };
  ojson grid = ojson::object();
  for (const auto& [alg, points] : space.grid_overrides) grid[std::string(to_string(alg))] = points;
  doc["search"] = {{"feature_types", names(space.feature_types)}, {"dimensions", space.dimensions},
                   {"sections", names(space.sections)},        {"stopwords", names(space.stopwords)},
                   {"algorithms", names(space.algorithms)},     {"folds", folds},
                   {"grid", grid}};
  doc["seed"] = seed;
  return doc;
}

std::string PipelineConfig::hash() const { return hash_json(canonical()); }

PipelineConfig parse_config(const nlohmann::json& doc, const fs::path& base_dir) {
  check_keys(doc, "config", {"corpus", "synthetic", "articles", "heading_config", "stopwords", "pretrained",
                             "embedding", "split", "search", "out_dir", "seed", "workers"});
  PipelineConfig config;
  if (doc.contains("corpus") == doc.contains("synthetic")) {
    throw ValidationError("config: exactly one of 'corpus' and 'synthetic' must be given");
  }
  if (doc.contains("seed")) config.seed = get_value<std::uint64_t>(doc["seed"], "seed");
  if (!doc.contains("articles")) throw ValidationError("config: 'articles' is required");
  config.articles = get_value<std::vector<std::string>>(doc["articles"], "articles");
  if (config.articles.empty()) throw ValidationError("config: 'articles' must not be empty");
  if (std::set<std::string>(config.articles.begin(), config.articles.end()).size() != config.articles.size()) {
    throw ValidationError("config: duplicate article");
  }
  if (doc.contains("corpus")) config.corpus = resolve(base_dir, doc["corpus"], "corpus");
  if (doc.contains("synthetic")) {
    config.synthetic = parse_synthetic(doc["synthetic"], config.articles, config.seed);
  }
  if (doc.contains("heading_config")) config.heading_config = resolve(base_dir, doc["heading_config"], "heading_config");
  if (doc.contains("stopwords")) config.stopwords = resolve(base_dir, doc["stopwords"], "stopwords");
  if (doc.contains("pretrained")) {
    check_keys(doc["pretrained"], "pretrained", {"glove", "law2vec"});
    for (const auto& [name, value] : doc["pretrained"].items()) {
      auto& files = config.pretrained[*feature_type_from_string(name)];
      if (value.is_array()) {
        for (const auto& v : value) files.push_back(resolve(base_dir, v, "pretrained"));
      } else {
        files.push_back(resolve(base_dir, value, "pretrained"));
      }
    }
  }
  if (doc.contains("embedding")) {
    const auto& e = doc["embedding"];
    check_keys(e, "embedding", {"word2vec", "doc2vec"});
    if (e.contains("word2vec")) parse_embedding(e["word2vec"], "embedding.word2vec", config.word2vec);
    if (e.contains("doc2vec")) parse_embedding(e["doc2vec"], "embedding.doc2vec", config.doc2vec);
  }
  if (doc.contains("split")) {
    const auto& s = doc["split"];
    check_keys(s, "split", {"holdout_fraction", "r_target", "seed"});
    if (s.contains("holdout_fraction")) config.holdout_fraction = get_value<double>(s["holdout_fraction"], "split");
    if (!(config.holdout_fraction > 0.0 && config.holdout_fraction < 1.0)) {
      throw ValidationError("split.holdout_fraction must lie in (0, 1)");
    }
    if (s.contains("r_target")) {
      config.r_target = get_value<std::map<std::string, double>>(s["r_target"], "split.r_target");
      for (const auto& [article, r] : config.r_target) {
        if (!(r > 0.0 && r < 1.0)) throw ValidationError("split.r_target[" + article + "] must lie in (0, 1)");
        if (std::find(config.articles.begin(), config.articles.end(), article) == config.articles.end()) {
          throw ValidationError("split.r_target: '" + article + "' is not a configured article");
        }
      }
    }
    if (s.contains("seed")) config.split_seed = get_value<std::uint64_t>(s["seed"], "split.seed");
  }
  if (doc.contains("search")) parse_search(doc["search"], config);
  if (doc.contains("out_dir")) config.out_dir = get_value<std::string>(doc["out_dir"], "out_dir");
  if (doc.contains("workers")) {
    config.workers = get_value<int>(doc["workers"], "workers");
    if (config.workers < 1) throw ValidationError("workers must be at least 1");
  }
  return config;
}

PipelineConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const IoError& e) {
    throw ValidationError(e.what());
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

void run_stage(Stage stage, const PipelineConfig& config, std::ostream& log) {
  const fs::path failed = config.out_dir / "FAILED";
  try {
    fs::create_directories(config.out_dir);
    fs::remove(failed);
    Workspace ws(config);
    switch (stage) {
      case Stage::synth: stage_synth(ws, log); break;
      case Stage::parse: stage_parse(ws, log); break;
      case Stage::split: stage_split(ws, log); break;
      case Stage::embed: stage_embed(ws, log); break;
      case Stage::features: stage_features(ws, log); break;
      case Stage::search: stage_search(ws, log); break;
      case Stage::eval: stage_eval(ws, log); break;
      case Stage::report: stage_report(ws, log); break;
    }
  } catch (const std::exception& e) {
    const StageError error(stage, e.what());
    std::ofstream marker(failed, std::ios::trunc);
    if (marker) marker << error.what() << '\n';
    throw error;
  }
}

void run_pipeline(const PipelineConfig& config, std::ostream& log) {
  for (auto stage : kStageOrder) run_stage(stage, config, log);
}

std::vector<std::string> search_space_lines(const PipelineConfig& config) {
  const Workspace ws(config);
  const auto available = ws.available_features();
  std::vector<std::string> lines;
  for (const auto& c : enumerate(config.space, "", mix_seed(config.seed, kModelSeed))) {
    std::string line = c.label();
    if (std::find(available.begin(), available.end(), c.features) == available.end()) {
      line += "  [skipped: no pretrained " + std::string(to_string(c.features.feature_type)) + " file of this dimension]";
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace echr
