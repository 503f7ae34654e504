#include "echr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "echr/errors.hpp"
#include "echr/rng.hpp"

namespace echr {

std::string_view to_string(Label label) {
  return label == Label::violation ? "violation" : "nonviolation";
}

std::optional<Label> label_from_string(std::string_view name) {
  if (name == "violation") return Label::violation;
  if (name == "nonviolation") return Label::nonviolation;
  return std::nullopt;
}

long DatasetSplit::count(std::span<const LabeledCase> cases, Label label) const {
  return std::count_if(cases.begin(), cases.end(), [&](const auto& c) { return c.label == label; });
}

double DatasetSplit::test_violation_ratio() const {
  if (test.empty()) return 0.0;
  return static_cast<double>(test_count(Label::violation)) / static_cast<double>(test.size());
}

ArticlePool make_pool(std::string article, std::vector<LabeledCase> cases) {
  ArticlePool pool;
  pool.article = std::move(article);
  std::sort(cases.begin(), cases.end(), [](const auto& a, const auto& b) { return a.doc_id < b.doc_id; });
  for (std::size_t i = 1; i < cases.size(); ++i) {
    if (cases[i].doc_id == cases[i - 1].doc_id) {
      throw ValidationError("duplicate case " + cases[i].doc_id + " in pool");
    }
  }
  for (const auto& c : cases) (c.label == Label::violation ? pool.v_count : pool.nv_count)++;
  pool.cases = std::move(cases);
  return pool;
}

namespace {

template <class Doc>
ArticlePool label_generic(std::span<const Doc> docs, const std::string& article) {
  std::vector<LabeledCase> cases;
  for (const auto& doc : docs) {
    if (!doc.articles.contains(article)) continue;
    const auto it = doc.violation_by_article.find(article);
    if (it == doc.violation_by_article.end()) {
      throw ValidationError("judgment " + doc.doc_id + " addresses article " + article +
                            " but has no violation outcome for it");
    }
    cases.push_back({doc.doc_id, article, it->second ? Label::violation : Label::nonviolation});
  }
  return make_pool(article, std::move(cases));
}

}  // namespace

ArticlePool label_cases(std::span<const RawDocument> documents, const std::string& article) {
  std::vector<RawDocument> judgments;
  for (const auto& doc : documents) {
    if (doc.doc_type == DocType::judgment) judgments.push_back(doc);
  }
  return label_generic<RawDocument>(judgments, article);
}

ArticlePool label_cases(const DocumentCollection& collection, const std::string& article) {
  return label_cases(std::span<const RawDocument>(collection.documents), article);
}

ArticlePool label_cases(std::span<const ParsedJudgment> judgments, const std::string& article) {
  return label_generic<ParsedJudgment>(judgments, article);
}

DatasetSplit make_split(const ArticlePool& pool, double r_target, double holdout_fraction,
                        std::uint64_t seed) {
  if (!(r_target > 0.0 && r_target < 1.0)) {
    throw ValidationError("article " + pool.article + ": degenerate historical ratio " +
                          std::to_string(r_target));
  }
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw ValidationError("holdout fraction must lie in (0, 1)");
  }
  if (pool.v_count < 2 || pool.nv_count < 2) {
    throw ValidationError("article " + pool.article + ": need at least 2 cases of each label");
  }
  // Ties make nonviolation the minority.
  const Label minority = pool.nv_count <= pool.v_count ? Label::nonviolation : Label::violation;
  const Label majority = minority == Label::violation ? Label::nonviolation : Label::violation;
  std::vector<LabeledCase> minority_cases, majority_cases;
  for (const auto& c : pool.cases) (c.label == minority ? minority_cases : majority_cases).push_back(c);
  const long m = static_cast<long>(minority_cases.size());
  const long big = static_cast<long>(majority_cases.size());

  const long h = std::max(1L, std::lround(holdout_fraction * static_cast<double>(m)));
  long per_class = m - h;
  if (per_class < 1) {
    throw ValidationError("article " + pool.article + ": pool too small for a holdout and training set");
  }
  const double q = majority == Label::violation ? r_target : 1.0 - r_target;
  const long k = std::lround(static_cast<double>(h) * q / (1.0 - q));
  // Keep the test ratio: shrink the balanced training set if the majority
  // label cannot cover both it and k test cases.
  if (per_class + k > big) per_class = big - k;
  if (per_class < 1) {
    throw ValidationError("article " + pool.article + ": pool too small to realise test ratio " +
                          std::to_string(r_target));
  }

  Rng rng(seed);
  rng.shuffle(minority_cases);
  rng.shuffle(majority_cases);

  DatasetSplit split;
  split.article = pool.article;
  split.r_target = r_target;
  split.holdout_fraction = holdout_fraction;
  split.seed = seed;
  split.test.assign(minority_cases.begin(), minority_cases.begin() + h);
  split.train.assign(minority_cases.begin() + h, minority_cases.begin() + h + per_class);
  split.train.insert(split.train.end(), majority_cases.begin(), majority_cases.begin() + per_class);
  split.test.insert(split.test.end(), majority_cases.begin() + per_class,
                    majority_cases.begin() + per_class + k);
  auto by_id = [](const auto& a, const auto& b) { return a.doc_id < b.doc_id; };
  std::sort(split.train.begin(), split.train.end(), by_id);
  std::sort(split.test.begin(), split.test.end(), by_id);
  return split;
}

double historical_ratio(const ArticlePool& pool) {
  const long total = pool.v_count + pool.nv_count;
  if (total == 0) throw ValidationError("historical_ratio: empty pool for article " + pool.article);
  return static_cast<double>(pool.v_count) / static_cast<double>(total);
}

namespace {

nlohmann::ordered_json cases_json(const std::vector<LabeledCase>& cases) {
  auto list = nlohmann::ordered_json::array();
  for (const auto& c : cases) list.push_back({{"doc_id", c.doc_id}, {"label", to_string(c.label)}});
  return list;
}

std::vector<LabeledCase> cases_from_json(const nlohmann::json& list, const std::string& article) {
  std::vector<LabeledCase> cases;
  for (const auto& item : list) {
    const auto label = label_from_string(item.at("label").get<std::string>());
    if (!label) throw FormatError("split manifest: unknown label");
    cases.push_back({item.at("doc_id").get<std::string>(), article, *label});
  }
  return cases;
}

}  // namespace

void save_split(const DatasetSplit& split, const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["article"] = split.article;
  doc["seed"] = split.seed;
  doc["r_target"] = split.r_target;
  doc["holdout_fraction"] = split.holdout_fraction;
  doc["train"] = cases_json(split.train);
  doc["test"] = cases_json(split.test);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

DatasetSplit load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    const auto doc = nlohmann::json::parse(in);
    DatasetSplit split;
    split.article = doc.at("article").get<std::string>();
    split.seed = doc.at("seed").get<std::uint64_t>();
    split.r_target = doc.at("r_target").get<double>();
    split.holdout_fraction = doc.at("holdout_fraction").get<double>();
    split.train = cases_from_json(doc.at("train"), split.article);
    split.test = cases_from_json(doc.at("test"), split.article);
    return split;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace echr
