#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "echr/feature_matrix.hpp"

namespace echr {

/// Binary decision tree; internal nodes send x[feature] <= threshold left.
struct Tree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    /// Leaf output: P(violation) for classification trees, additive score
    /// for regression trees.
    double value = 0.0;
    bool operator==(const Node&) const = default;
  };
  std::vector<Node> nodes;

  double predict(std::span<const double> x) const;
  int depth() const;
  bool operator==(const Tree&) const = default;
};

/// Training columns mapped to the rank of each value among the column's
/// distinct values. Split thresholds are midpoints between adjacent values.
class BinnedFeatures {
 public:
  explicit BinnedFeatures(const FeatureMatrix& x);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return uniques_.size(); }
  std::uint32_t bin(std::size_t col, std::size_t row) const { return bins_[col * rows_ + row]; }
  const std::vector<double>& uniques(std::size_t col) const { return uniques_[col]; }
  /// Rows above the column minimum, ordered by bin then row.
  std::span<const std::uint32_t> above_min(std::size_t col) const { return above_min_[col]; }

 private:
  std::size_t rows_ = 0;
  std::vector<std::uint32_t> bins_;  // column-major
  std::vector<std::vector<std::uint32_t>> above_min_;
  std::vector<std::vector<double>> uniques_;
};

enum class SplitCriterion { gini, squared_error };

struct TreeParams {
  int max_depth = -1;  // -1: unlimited
  int min_samples_leaf = 1;
  int max_features = 0;  // 0: all features
  std::uint64_t seed = 0;
};

/// CART growth. For gini, target holds 0/1 labels and weight the sample
/// weights; for squared_error, target holds residuals and weight the hessians
/// (leaf value = sum residual / sum hessian). count is each row's multiplicity
/// (0 excludes the row) and drives min_samples_leaf. Ties between splits go
/// to the lower feature index, then the lower threshold. An impure node splits
/// whenever some split satisfies min_samples_leaf, even at zero gain.
Tree build_tree(const BinnedFeatures& features, SplitCriterion criterion, std::span<const double> target,
                std::span<const double> weight, std::span<const double> count, const TreeParams& params);

}  // namespace echr
