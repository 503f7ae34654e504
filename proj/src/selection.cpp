#include "echr/selection.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <tuple>

#include "echr/errors.hpp"
#include "echr/rng.hpp"

namespace echr {

namespace {

constexpr std::array<std::string_view, 5> kFeatureTypeNames = {"ngram", "glove", "law2vec", "echr2vec", "doc2vec"};
constexpr std::array<std::string_view, 2> kStopwordNames = {"kept", "removed"};

int section_rank(SectionKind kind) {
  const auto it = std::find(kFeatureSections.begin(), kFeatureSections.end(), kind);
  return it == kFeatureSections.end() ? -1 : static_cast<int>(it - kFeatureSections.begin());
}

auto feature_tuple(const FeatureKey& key) {
  return std::make_tuple(static_cast<int>(key.feature_type), key.dimension, section_rank(key.section),
                         static_cast<int>(key.stopwords));
}

template <class T>
void sort_unique(std::vector<T>& values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
}

}  // namespace

std::string_view to_string(FeatureType type) { return kFeatureTypeNames[static_cast<std::size_t>(type)]; }

std::optional<FeatureType> feature_type_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureTypeNames.size(); ++i) {
    if (kFeatureTypeNames[i] == name) return static_cast<FeatureType>(i);
  }
  return std::nullopt;
}

std::string_view to_string(StopwordMode mode) { return kStopwordNames[static_cast<std::size_t>(mode)]; }

std::optional<StopwordMode> stopword_mode_from_string(std::string_view name) {
  if (name == "kept") return StopwordMode::kept;
  if (name == "removed") return StopwordMode::removed;
  return std::nullopt;
}

std::vector<int> allowed_dimensions(FeatureType type) {
  if (type == FeatureType::ngram) return {static_cast<int>(NgramVocabulary::kDefaultCapacity)};
  return {100, 200};
}

std::string FeatureKey::name() const {
  return std::string(to_string(feature_type)) + '-' + std::to_string(dimension) + '-' +
         std::string(to_string(section)) + '-' + std::string(to_string(stopwords));
}

bool canonical_less(const FeatureKey& a, const FeatureKey& b) { return feature_tuple(a) < feature_tuple(b); }

void ExperimentConfig::validate() const {
  const auto dims = allowed_dimensions(features.feature_type);
  if (std::find(dims.begin(), dims.end(), features.dimension) == dims.end()) {
    throw ValidationError("dimension " + std::to_string(features.dimension) + " is not valid for " +
                          std::string(to_string(features.feature_type)));
  }
  if (section_rank(features.section) < 0) {
    throw ValidationError("section " + std::string(to_string(features.section)) + " cannot be used as features");
  }
}

std::string ExperimentConfig::label() const { return features.name() + ' ' + hyper.label(); }

bool canonical_less(const ExperimentConfig& a, const ExperimentConfig& b) {
  if (canonical_less(a.features, b.features)) return true;
  if (canonical_less(b.features, a.features)) return false;
  return a.hyper < b.hyper;
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& config) {
  nlohmann::ordered_json doc;
  doc["article"] = config.article;
  doc["feature_type"] = std::string(to_string(config.features.feature_type));
  doc["dimension"] = config.features.dimension;
  doc["section"] = std::string(to_string(config.features.section));
  doc["stopwords"] = std::string(to_string(config.features.stopwords));
  doc["algorithm"] = std::string(to_string(config.hyper.algorithm));
  doc["params"] = config.hyper.params;
  doc["seed"] = config.hyper.seed;
  return doc;
}

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  try {
    ExperimentConfig config;
    config.article = doc.at("article").get<std::string>();
    const auto type = feature_type_from_string(doc.at("feature_type").get<std::string>());
    const auto section = section_from_string(doc.at("section").get<std::string>());
    const auto stop = stopword_mode_from_string(doc.at("stopwords").get<std::string>());
    const auto algorithm = algorithm_from_string(doc.at("algorithm").get<std::string>());
    if (!type || !section || !stop || !algorithm) throw FormatError("experiment config: unknown enum value");
    config.features = {*type, doc.at("dimension").get<int>(), *section, *stop};
    config.hyper.algorithm = *algorithm;
    doc.at("params").get_to(config.hyper.params);
    config.hyper.seed = doc.at("seed").get<std::uint64_t>();
    config.validate();
    return config;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("experiment config: ") + e.what());
  }
}

std::vector<FeatureKey> enumerate_features(const ConfigSpace& space) {
  auto types = space.feature_types;
  auto dims = space.dimensions;
  auto stops = space.stopwords;
  sort_unique(types);
  sort_unique(dims);
  sort_unique(stops);
  std::vector<SectionKind> sections = space.sections;
  std::sort(sections.begin(), sections.end(),
            [](SectionKind a, SectionKind b) { return section_rank(a) < section_rank(b); });
  sections.erase(std::unique(sections.begin(), sections.end()), sections.end());

  std::vector<FeatureKey> keys;
  for (auto type : types) {
    const auto allowed = allowed_dimensions(type);
    for (int dim : dims) {
      if (std::find(allowed.begin(), allowed.end(), dim) == allowed.end()) continue;
      for (auto section : sections) {
        if (section_rank(section) < 0) {
          throw ValidationError("section " + std::string(to_string(section)) + " cannot be used as features");
        }
        for (auto stop : stops) keys.push_back({type, dim, section, stop});
      }
    }
  }
  return keys;
}

std::vector<ExperimentConfig> enumerate(const ConfigSpace& space, const std::string& article,
                                        std::uint64_t model_seed) {
  auto algorithms = space.algorithms;
  sort_unique(algorithms);
  std::vector<HyperSetting> grid;
  for (auto algorithm : algorithms) {
    const auto override_it = space.grid_overrides.find(algorithm);
    if (override_it != space.grid_overrides.end()) {
      for (const auto& params : override_it->second) grid.push_back({algorithm, params, model_seed});
    } else {
      for (auto& setting : default_grid(algorithm, model_seed)) grid.push_back(std::move(setting));
    }
  }
  std::vector<ExperimentConfig> configs;
  for (const auto& key : enumerate_features(space)) {
    for (const auto& setting : grid) configs.push_back({article, key, setting});
  }
  std::sort(configs.begin(), configs.end(),
            [](const auto& a, const auto& b) { return canonical_less(a, b); });
  configs.erase(std::unique(configs.begin(), configs.end()), configs.end());
  return configs;
}

std::vector<std::vector<std::size_t>> kfold(std::size_t n, std::size_t k, std::uint64_t seed,
                                            std::span<const Label> labels) {
  if (k < 2) throw ValidationError("kfold: k must be at least 2");
  if (n < k) {
    throw ValidationError("kfold: " + std::to_string(n) + " cases cannot fill " + std::to_string(k) + " folds");
  }
  if (labels.size() != n) throw ValidationError("kfold: label count differs from n");
  std::vector<std::size_t> groups[2];
  for (std::size_t i = 0; i < n; ++i) groups[static_cast<int>(labels[i])].push_back(i);
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t position = 0;
  for (auto& group : groups) {
    rng.shuffle(group);
    for (auto index : group) folds[position++ % k].push_back(index);
  }
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

std::pair<FeatureMatrix, FeatureMatrix> DenseFeatureSource::fit_transform(std::span<const std::size_t> train,
                                                                          std::span<const std::size_t> eval) const {
  return {matrix_.select_rows(train), matrix_.select_rows(eval)};
}

std::pair<FeatureMatrix, FeatureMatrix> NgramFeatureSource::fit_transform(std::span<const std::size_t> train,
                                                                          std::span<const std::size_t> eval) const {
  return index_.fit_transform(train, eval, capacity_);
}

CVResult cv_mean_accuracy(const ExperimentConfig& config, std::span<const Label> labels,
                          const FeatureSource& features, std::span<const std::vector<std::size_t>> folds) {
  if (features.rows() != labels.size()) throw ValidationError("cv: feature rows differ from label count");
  CVResult result;
  result.config = config;
  std::vector<char> held_out(labels.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    try {
      std::fill(held_out.begin(), held_out.end(), 0);
      for (auto i : folds[f]) held_out[i] = 1;
      std::vector<std::size_t> train;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!held_out[i]) train.push_back(i);
      }
      auto [train_x, eval_x] = features.fit_transform(train, folds[f]);
      std::vector<Label> train_y, eval_y;
      for (auto i : train) train_y.push_back(labels[i]);
      for (auto i : folds[f]) eval_y.push_back(labels[i]);
      const auto model = fit(config.hyper, train_x, train_y);
      const auto predicted = predict(model, eval_x);
      long correct = 0;
      for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == eval_y[i];
      result.fold_accuracies.push_back(static_cast<double>(correct) / static_cast<double>(eval_y.size()));
    } catch (const std::exception& e) {
      throw Error("fold " + std::to_string(f) + ": " + e.what());
    }
  }
  double sum = 0.0;
  for (double a : result.fold_accuracies) sum += a;
  result.mean_accuracy = sum / static_cast<double>(result.fold_accuracies.size());
  return result;
}

GridSearchResult grid_search(std::span<const ExperimentConfig> space, std::span<const Label> labels,
                             const FeatureLookup& features, std::span<const std::vector<std::size_t>> folds,
                             int workers) {
  if (space.empty()) throw ValidationError("grid_search: empty configuration space");
  std::vector<ExperimentConfig> configs(space.begin(), space.end());
  std::sort(configs.begin(), configs.end(), [](const auto& a, const auto& b) { return canonical_less(a, b); });

  std::vector<std::optional<CVResult>> results(configs.size());
  std::vector<std::string> errors(configs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        results[i] = cv_mean_accuracy(configs[i], labels, features(configs[i].features), folds);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, configs.size()); ++t) pool.emplace_back(work);
  }

  GridSearchResult out;
  bool found = false;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (!results[i]) {
      out.failures.emplace_back(configs[i], errors[i]);
      continue;
    }
    if (!found || results[i]->mean_accuracy > out.best_result.mean_accuracy) {
      out.best_result = *results[i];
      found = true;
    }
    out.all.push_back(std::move(*results[i]));
  }
  if (!found) {
    std::string message = "grid_search: all " + std::to_string(configs.size()) + " configurations failed";
    for (const auto& [config, cause] : out.failures) message += "\n  " + config.label() + ": " + cause;
    throw Error(message);
  }
  out.best = out.best_result.config;
  return out;
}

Metrics compute_metrics(std::span<const Label> predicted, std::span<const Label> actual) {
  if (predicted.size() != actual.size()) throw ValidationError("metrics: prediction count differs from labels");
  if (actual.empty()) throw ValidationError("metrics: empty test set");
  Metrics m;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const bool p = predicted[i] == Label::violation;
    const bool a = actual[i] == Label::violation;
    if (p && a) ++m.tp;
    else if (p) ++m.fp;
    else if (a) ++m.fn;
    else ++m.tn;
  }
  m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
  if (m.tp + m.fp > 0) m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  if (m.tp + m.fn > 0) m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  return m;
}

Metrics evaluate(const TrainedModel& model, const FeatureMatrix& test_x, std::span<const Label> test_y) {
  if (test_x.rows() != test_y.size()) throw ValidationError("evaluate: row count differs from label count");
  return compute_metrics(predict(model, test_x), test_y);
}

double weighted_average(const std::map<std::string, double>& values, const std::map<std::string, double>& weights) {
  std::map<std::string, std::optional<double>> wrapped;
  for (const auto& [key, value] : values) wrapped[key] = value;
  const auto result = weighted_average(wrapped, weights);
  return *result;
}

std::optional<double> weighted_average(const std::map<std::string, std::optional<double>>& values,
                                       const std::map<std::string, double>& weights) {
  if (values.empty()) throw ValidationError("weighted_average: no values");
  if (values.size() != weights.size()) throw ValidationError("weighted_average: key sets differ");
  double num = 0.0, den = 0.0;
  for (const auto& [key, value] : values) {
    const auto it = weights.find(key);
    if (it == weights.end()) throw ValidationError("weighted_average: no weight for '" + key + "'");
    if (!(it->second > 0.0)) throw ValidationError("weighted_average: weight for '" + key + "' is not positive");
    if (!value) continue;
    num += *value * it->second;
    den += it->second;
  }
  if (den == 0.0) return std::nullopt;
  return num / den;
}

WeightedAverages compute_weighted(std::span<const ArticleResult> articles) {
  std::map<std::string, double> weights, model_acc, heuristic_acc;
  std::map<std::string, std::optional<double>> precision, recall;
  for (const auto& a : articles) {
    weights[a.article] = static_cast<double>(a.test_size);
    model_acc[a.article] = a.model.accuracy;
    heuristic_acc[a.article] = a.heuristic.accuracy;
    precision[a.article] = a.model.precision;
    recall[a.article] = a.model.recall;
  }
  if (weights.size() != articles.size()) throw ValidationError("report: duplicate article");
  WeightedAverages w;
  w.model_accuracy = weighted_average(model_acc, weights);
  w.heuristic_accuracy = weighted_average(heuristic_acc, weights);
  w.model_precision = weighted_average(precision, weights);
  w.model_recall = weighted_average(recall, weights);
  return w;
}

}  // namespace echr
