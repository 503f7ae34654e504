#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "echr/corpus.hpp"
#include "echr/judgment_parser.hpp"

namespace echr {

/// Positive class is violation throughout.
enum class Label : std::uint8_t { nonviolation = 0, violation = 1 };

std::string_view to_string(Label label);
std::optional<Label> label_from_string(std::string_view name);

struct LabeledCase {
  std::string doc_id;
  std::string article;
  Label label = Label::nonviolation;

  bool operator==(const LabeledCase&) const = default;
};

struct ArticlePool {
  std::string article;
  std::vector<LabeledCase> cases;  // sorted by doc_id
  long v_count = 0;
  long nv_count = 0;
};

struct DatasetSplit {
  std::string article;
  std::vector<LabeledCase> train;
  std::vector<LabeledCase> test;
  double r_target = 0.5;
  double holdout_fraction = 0.1;
  std::uint64_t seed = 0;

  long count(std::span<const LabeledCase> cases, Label label) const;
  long train_count(Label label) const { return count(train, label); }
  long test_count(Label label) const { return count(test, label); }
  double test_violation_ratio() const;

  bool operator==(const DatasetSplit&) const = default;
};

/// One case per judgment addressing `article`. Throws ValidationError naming
/// the doc_id if such a judgment lacks an outcome for the article.
ArticlePool label_cases(std::span<const RawDocument> documents, const std::string& article);
ArticlePool label_cases(const DocumentCollection& collection, const std::string& article);
ArticlePool label_cases(std::span<const ParsedJudgment> judgments, const std::string& article);

/// Builds from pre-made cases (counts derived); used for tests and replay.
ArticlePool make_pool(std::string article, std::vector<LabeledCase> cases);

/// Balanced training set plus a test set matching r_target. See README for
/// the exact holdout arithmetic.
DatasetSplit make_split(const ArticlePool& pool, double r_target, double holdout_fraction,
                        std::uint64_t seed);

/// v / (v + nv). Throws on an empty pool.
double historical_ratio(const ArticlePool& pool);

/// Split manifest JSON: article, seed, r_target, holdout_fraction, and the
/// train/test doc_id lists with labels.
void save_split(const DatasetSplit& split, const std::filesystem::path& path);
DatasetSplit load_split(const std::filesystem::path& path);

}  // namespace echr
