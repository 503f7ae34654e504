#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace echr {

/// Dense row-major matrix: one row per case, one column per feature.
struct FeatureMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> column_names;
  std::vector<double> values;

  FeatureMatrix() = default;
  FeatureMatrix(std::vector<std::string> rows, std::vector<std::string> columns);

  std::size_t rows() const { return row_ids.size(); }
  std::size_t cols() const { return column_names.size(); }

  std::span<double> row(std::size_t r) { return {values.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols(), cols()}; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

  /// Throws ValidationError on shape mismatch or non-finite values.
  void validate() const;

  /// Copies the listed rows, in the given order.
  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;

  bool operator==(const FeatureMatrix&) const = default;
};

/// CSV: header "doc_id,<column names>", then one row per case; values use 9
/// significant digits.
void write_feature_csv(const FeatureMatrix& matrix, const std::filesystem::path& path);
FeatureMatrix read_feature_csv(const std::filesystem::path& path);

}  // namespace echr
