#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "echr/corpus.hpp"
#include "echr/embeddings.hpp"
#include "echr/errors.hpp"
#include "echr/selection.hpp"

namespace echr {

enum class Stage { synth, parse, split, embed, features, search, eval, report };

/// Execution order of `run`.
inline constexpr std::array<Stage, 8> kStageOrder = {Stage::synth, Stage::parse,  Stage::split, Stage::embed,
                                                     Stage::features, Stage::search, Stage::eval, Stage::report};

std::string_view to_string(Stage stage);
std::optional<Stage> stage_from_string(std::string_view name);

/// Environment variable that overrides the configured output directory.
inline constexpr const char* kOutDirEnv = "PIPELINE_OUT_DIR";

struct PipelineConfig {
  std::optional<std::filesystem::path> corpus;
  std::optional<SyntheticSpec> synthetic;
  std::vector<std::string> articles;
  std::optional<std::filesystem::path> heading_config;
  std::optional<std::filesystem::path> stopwords;
  /// "glove" / "law2vec" -> embedding files; the dimension is read from each file.
  std::map<FeatureType, std::vector<std::filesystem::path>> pretrained;
  EmbeddingParams word2vec = EmbeddingParams::word2vec_defaults(100);
  EmbeddingParams doc2vec = EmbeddingParams::doc2vec_defaults(100);
  double holdout_fraction = 0.1;
  std::map<std::string, double> r_target;
  std::optional<std::uint64_t> split_seed;
  ConfigSpace space;
  int folds = 10;
  std::filesystem::path out_dir = "pipeline_out";
  std::uint64_t seed = 1;
  int workers = 1;

  /// Canonical JSON of every setting that affects results (not out_dir or
  /// workers); its hash is stamped on every artifact.
  nlohmann::ordered_json canonical() const;
  std::string hash() const;
};

/// Parses a config document. Relative input paths resolve against base_dir.
/// Throws ValidationError on unknown keys, bad values, or unless exactly one
/// of "corpus" / "synthetic" is present.
PipelineConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

/// Raised when a stage cannot complete; names the stage.
class StageError : public Error {
 public:
  StageError(Stage stage, const std::string& cause)
      : Error(std::string(to_string(stage)) + ": " + cause), stage_(stage) {}
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

/// Runs one stage against the artifacts already in out_dir. On failure
/// writes out_dir/FAILED and throws StageError.
void run_stage(Stage stage, const PipelineConfig& config, std::ostream& log);

/// Every stage in order.
void run_pipeline(const PipelineConfig& config, std::ostream& log);

/// One line per configuration of the search space, canonical order.
std::vector<std::string> search_space_lines(const PipelineConfig& config);

}  // namespace echr
