#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "echr/dataset.hpp"
#include "echr/feature_matrix.hpp"
#include "echr/models.hpp"
#include "echr/ngram.hpp"
#include "echr/sections.hpp"

namespace echr {

/// Enumeration order is the canonical order used to break ties.
enum class FeatureType { ngram, glove, law2vec, echr2vec, doc2vec };
enum class StopwordMode { kept, removed };

inline constexpr std::array<FeatureType, 5> kAllFeatureTypes = {
    FeatureType::ngram, FeatureType::glove, FeatureType::law2vec, FeatureType::echr2vec, FeatureType::doc2vec};

/// Sections usable as features, in canonical order.
inline constexpr std::array<SectionKind, 5> kFeatureSections = {
    SectionKind::procedure_plus_facts, SectionKind::procedure, SectionKind::facts, SectionKind::circumstances,
    SectionKind::relevant_law};

inline constexpr std::array<StopwordMode, 2> kAllStopwordModes = {StopwordMode::kept, StopwordMode::removed};

std::string_view to_string(FeatureType type);
std::optional<FeatureType> feature_type_from_string(std::string_view name);
std::string_view to_string(StopwordMode mode);
std::optional<StopwordMode> stopword_mode_from_string(std::string_view name);

/// Dimensions allowed for a feature type: {2000} for ngram, {100, 200} otherwise.
std::vector<int> allowed_dimensions(FeatureType type);

/// The feature half of an experiment; identifies one feature matrix.
struct FeatureKey {
  FeatureType feature_type = FeatureType::ngram;
  int dimension = 2000;
  SectionKind section = SectionKind::procedure_plus_facts;
  StopwordMode stopwords = StopwordMode::kept;

  /// e.g. "doc2vec-100-circumstances-removed"
  std::string name() const;
  bool operator==(const FeatureKey&) const = default;
};

/// Canonical order: feature type, dimension, section, stop-words.
bool canonical_less(const FeatureKey& a, const FeatureKey& b);

struct ExperimentConfig {
  std::string article;
  FeatureKey features;
  HyperSetting hyper;

  /// Throws ValidationError on an incompatible dimension or section.
  void validate() const;
  std::string label() const;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Canonical order: feature key, then algorithm, then parameters. The article
/// is not part of the order.
bool canonical_less(const ExperimentConfig& a, const ExperimentConfig& b);

nlohmann::ordered_json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& doc);

/// Axes of the search; the grid of each algorithm comes from default_grid
/// unless overridden.
struct ConfigSpace {
  std::vector<FeatureType> feature_types{kAllFeatureTypes.begin(), kAllFeatureTypes.end()};
  std::vector<int> dimensions{100, 200, 2000};
  std::vector<SectionKind> sections{kFeatureSections.begin(), kFeatureSections.end()};
  std::vector<StopwordMode> stopwords{kAllStopwordModes.begin(), kAllStopwordModes.end()};
  std::vector<AlgorithmId> algorithms{kAllAlgorithms.begin(), kAllAlgorithms.end()};
  std::map<AlgorithmId, std::vector<std::map<std::string, double>>> grid_overrides;
};

/// Every compatible configuration, in canonical order.
std::vector<FeatureKey> enumerate_features(const ConfigSpace& space);
std::vector<ExperimentConfig> enumerate(const ConfigSpace& space, const std::string& article,
                                        std::uint64_t model_seed);

/// Stratified k-fold: each label's indices are shuffled, the groups are
/// concatenated (nonviolation first) and dealt round-robin. Each fold is
/// sorted ascending. Throws ValidationError if n < k or labels.size() != n.
std::vector<std::vector<std::size_t>> kfold(std::size_t n, std::size_t k, std::uint64_t seed,
                                            std::span<const Label> labels);

/// Produces the (train, eval) matrices for index subsets of a fixed case list.
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  virtual std::size_t rows() const = 0;
  virtual std::pair<FeatureMatrix, FeatureMatrix> fit_transform(std::span<const std::size_t> train,
                                                                 std::span<const std::size_t> eval) const = 0;
};

/// Precomputed features (embeddings); rows are sliced, nothing is refit.
class DenseFeatureSource : public FeatureSource {
 public:
  explicit DenseFeatureSource(FeatureMatrix matrix) : matrix_(std::move(matrix)) {}
  std::size_t rows() const override { return matrix_.rows(); }
  std::pair<FeatureMatrix, FeatureMatrix> fit_transform(std::span<const std::size_t> train,
                                                         std::span<const std::size_t> eval) const override;
  const FeatureMatrix& matrix() const { return matrix_; }

 private:
  FeatureMatrix matrix_;
};

/// N-gram counts; vocabulary and scaler are refit on each training subset.
class NgramFeatureSource : public FeatureSource {
 public:
  explicit NgramFeatureSource(std::span<const TokenSequence> docs,
                              std::size_t capacity = NgramVocabulary::kDefaultCapacity)
      : index_(docs), capacity_(capacity) {}
  std::size_t rows() const override { return index_.doc_count(); }
  std::pair<FeatureMatrix, FeatureMatrix> fit_transform(std::span<const std::size_t> train,
                                                         std::span<const std::size_t> eval) const override;

 private:
  NgramIndex index_;
  std::size_t capacity_;
};

struct CVResult {
  ExperimentConfig config;
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
  bool operator==(const CVResult&) const = default;
};

/// Fits on k-1 folds and scores accuracy on the held-out fold, for every
/// fold. Errors are rethrown with the fold index.
CVResult cv_mean_accuracy(const ExperimentConfig& config, std::span<const Label> labels,
                          const FeatureSource& features, std::span<const std::vector<std::size_t>> folds);

struct GridSearchResult {
  ExperimentConfig best;
  CVResult best_result;
  /// Successful configurations, canonical order.
  std::vector<CVResult> all;
  /// Failed configurations with their causes, canonical order.
  std::vector<std::pair<ExperimentConfig, std::string>> failures;
};

/// Must be safe to call concurrently.
using FeatureLookup = std::function<const FeatureSource&(const FeatureKey&)>;

/// Exhaustive search; best = highest mean CV accuracy, ties to the earlier
/// config in canonical order. The result does not depend on the order of
/// `space` or on `workers`. Throws Error listing every cause if all fail.
GridSearchResult grid_search(std::span<const ExperimentConfig> space, std::span<const Label> labels,
                             const FeatureLookup& features, std::span<const std::vector<std::size_t>> folds,
                             int workers = 1);

/// Positive class = violation. Precision and recall are empty when their
/// denominators are zero.
struct Metrics {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;

  long total() const { return tp + fp + tn + fn; }
  bool operator==(const Metrics&) const = default;
};

Metrics compute_metrics(std::span<const Label> predicted, std::span<const Label> actual);
Metrics evaluate(const TrainedModel& model, const FeatureMatrix& test_x, std::span<const Label> test_y);

/// sum(v * w) / sum(w). Throws ValidationError on mismatched keys,
/// non-positive weights or an empty map.
double weighted_average(const std::map<std::string, double>& values, const std::map<std::string, double>& weights);
/// As above, skipping empty values together with their weights; empty if
/// every value is empty.
std::optional<double> weighted_average(const std::map<std::string, std::optional<double>>& values,
                                       const std::map<std::string, double>& weights);

struct ArticleResult {
  std::string article;
  ExperimentConfig best;
  double cv_accuracy = 0.0;
  Metrics model;
  Metrics heuristic;
  /// Reference counts the heuristic was fitted on.
  long heuristic_v = 0;
  long heuristic_nv = 0;
  long train_size = 0;
  long test_size = 0;
  double r_target = 0.0;
  bool operator==(const ArticleResult&) const = default;
};

struct WeightedAverages {
  double model_accuracy = 0.0;
  double heuristic_accuracy = 0.0;
  std::optional<double> model_precision;
  std::optional<double> model_recall;
  bool operator==(const WeightedAverages&) const = default;
};

struct MetricsReport {
  std::vector<ArticleResult> articles;
  WeightedAverages weighted;
  std::uint64_t seed = 0;
  std::string config_hash;
  bool operator==(const MetricsReport&) const = default;
};

/// Weights are test-set sizes.
WeightedAverages compute_weighted(std::span<const ArticleResult> articles);

nlohmann::ordered_json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& doc);

/// Writes report.json, report.txt and report.csv into out_dir.
void render_report(const MetricsReport& report, const std::filesystem::path& out_dir);

}  // namespace echr
