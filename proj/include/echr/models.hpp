#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "echr/cart.hpp"
#include "echr/dataset.hpp"
#include "echr/feature_matrix.hpp"

namespace echr {

/// Enumeration order is the canonical tie-break order for model selection.
enum class AlgorithmId {
  heuristic_majority,
  sgd_linear,
  linear_svm,
  decision_tree,
  random_forest,
  adaboost,
  gradient_boosting,
  qda,
};

inline constexpr std::array<AlgorithmId, 8> kAllAlgorithms = {
    AlgorithmId::heuristic_majority, AlgorithmId::sgd_linear,    AlgorithmId::linear_svm,
    AlgorithmId::decision_tree,      AlgorithmId::random_forest, AlgorithmId::adaboost,
    AlgorithmId::gradient_boosting,  AlgorithmId::qda};

std::string_view to_string(AlgorithmId id);
std::optional<AlgorithmId> algorithm_from_string(std::string_view name);

/// Sentinel for "no limit" in integer parameters such as max_depth.
inline constexpr double kUnlimited = -1.0;

/// One point of an algorithm's hyper-parameter grid. Parameters absent from
/// `params` take the documented defaults.
struct HyperSetting {
  AlgorithmId algorithm = AlgorithmId::decision_tree;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;

  double get(const std::string& name, double fallback) const;
  /// e.g. "decision_tree(max_depth=None,min_samples_leaf=2)"
  std::string label() const;

  auto operator<=>(const HyperSetting&) const = default;
  bool operator==(const HyperSetting&) const = default;
};

/// The fixed search grid for one algorithm.
std::vector<HyperSetting> default_grid(AlgorithmId algorithm, std::uint64_t seed);

struct HeuristicParams {
  long v = 0;
  long nv = 0;
  Label constant = Label::violation;
  bool operator==(const HeuristicParams&) const = default;
};

struct LinearParams {
  std::vector<double> weights;
  double bias = 0.0;
  bool operator==(const LinearParams&) const = default;
};

struct TreeEnsembleParams {
  std::vector<Tree> trees;
  /// adaboost: per-stump weights. gradient_boosting: {initial score, shrinkage}.
  std::vector<double> coefficients;
  bool operator==(const TreeEnsembleParams&) const = default;
};

/// Per class: log-density is
///   log_prior - 0.5 log_det - 0.5 (z' diag(precision_diag) z + |P z|^2 - |W z|^2)
/// with z = x - mean. P is a dense precision factor, W a low-rank correction.
struct QdaClass {
  std::vector<double> mean;
  std::vector<double> precision_diag;
  std::vector<std::vector<double>> plus_factor;
  std::vector<std::vector<double>> minus_factor;
  double log_det = 0.0;
  double log_prior = 0.0;
  bool operator==(const QdaClass&) const = default;
};

struct QdaParams {
  QdaClass nonviolation;
  QdaClass violation;
  bool operator==(const QdaParams&) const = default;
};

using LearnedParams = std::variant<HeuristicParams, LinearParams, Tree, TreeEnsembleParams, QdaParams>;

struct TrainedModel {
  HyperSetting hyper;
  std::size_t n_features = 0;
  /// Column names of the fitted matrix; a matrix with different names is refused.
  std::vector<std::string> columns;
  LearnedParams learned;

  AlgorithmId algorithm() const { return hyper.algorithm; }
  bool operator==(const TrainedModel&) const = default;
};

/// Deterministic in (X, y, hyper). y must contain both labels except for
/// heuristic_majority, which uses params "v"/"nv" when given and the label
/// counts of y otherwise. Throws ValidationError on degenerate input.
TrainedModel fit(const HyperSetting& hyper, const FeatureMatrix& x, std::span<const Label> y);
TrainedModel fit(AlgorithmId algorithm, const HyperSetting& hyper, const FeatureMatrix& x,
                 std::span<const Label> y);

/// Constant predictor for the historically more common outcome; ties
/// predict violation.
TrainedModel fit_heuristic(long v, long nv);

/// Real-valued score per row; >= 0 means violation.
std::vector<double> decision_scores(const TrainedModel& model, const FeatureMatrix& x);
std::vector<Label> predict(const TrainedModel& model, const FeatureMatrix& x);

nlohmann::ordered_json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& doc);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace echr
