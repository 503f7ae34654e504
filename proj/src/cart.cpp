#include "echr/cart.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "echr/errors.hpp"
#include "echr/rng.hpp"

namespace echr {

double Tree::predict(std::span<const double> x) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(node)];
    node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(node)].value;
}

int Tree::depth() const {
  std::function<int(int)> walk = [&](int node) -> int {
    const auto& n = nodes[static_cast<std::size_t>(node)];
    if (n.feature < 0) return 0;
    return 1 + std::max(walk(n.left), walk(n.right));
  };
  return nodes.empty() ? 0 : walk(0);
}

BinnedFeatures::BinnedFeatures(const FeatureMatrix& x) : rows_(x.rows()) {
  const auto cols = x.cols();
  bins_.resize(cols * rows_);
  uniques_.resize(cols);
  above_min_.resize(cols);
  std::vector<double> column(rows_);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows_; ++r) column[r] = x.at(r, c);
    auto& uniq = uniques_[c];
    uniq = column;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    std::uint32_t* col_bins = &bins_[c * rows_];
    auto& above = above_min_[c];
    for (std::size_t r = 0; r < rows_; ++r) {
      col_bins[r] = static_cast<std::uint32_t>(std::lower_bound(uniq.begin(), uniq.end(), column[r]) - uniq.begin());
      if (col_bins[r] != 0) above.push_back(static_cast<std::uint32_t>(r));
    }
    std::stable_sort(above.begin(), above.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return col_bins[a] < col_bins[b]; });
  }
}

namespace {

struct Stat {
  double a = 0.0;  // gini: weight of label 0; squared_error: sum of residuals
  double b = 0.0;  // gini: weight of label 1; squared_error: sum of hessians
  double n = 0.0;  // multiplicity

  void add(const Stat& o) {
    a += o.a;
    b += o.b;
    n += o.n;
  }
  Stat minus(const Stat& o) const { return {a - o.a, b - o.b, n - o.n}; }
};

class Builder {
 public:
  Builder(const BinnedFeatures& features, SplitCriterion criterion, std::span<const double> target,
          std::span<const double> weight, std::span<const double> count, const TreeParams& params)
      : features_(features), criterion_(criterion), params_(params), rng_(params.seed) {
    row_stats_.resize(features.rows());
    for (std::size_t r = 0; r < features.rows(); ++r) {
      if (criterion == SplitCriterion::gini) {
        row_stats_[r] = {weight[r] * (1.0 - target[r]), weight[r] * target[r], count[r]};
      } else {
        row_stats_[r] = {count[r] * target[r], count[r] * weight[r], count[r]};
      }
    }
    std::size_t max_bins = 1;
    for (std::size_t c = 0; c < features.cols(); ++c) max_bins = std::max(max_bins, features.uniques(c).size());
    hist_.resize(max_bins);
    in_node_.assign(features.rows(), 0);
  }

  Tree build(std::vector<std::uint32_t> rows) {
    Tree tree;
    grow(tree, std::move(rows), 0);
    return tree;
  }

 private:
  double score(const Stat& s) const {
    if (criterion_ == SplitCriterion::gini) {
      const double w = s.a + s.b;
      return w > 0.0 ? (s.a * s.a + s.b * s.b) / w : 0.0;
    }
    return s.n > 0.0 ? s.a * s.a / s.n : 0.0;
  }

  double leaf_value(const Stat& s) const {
    if (criterion_ == SplitCriterion::gini) {
      const double w = s.a + s.b;
      return w > 0.0 ? s.b / w : 0.5;
    }
    return std::abs(s.b) > 1e-300 ? s.a / s.b : 0.0;
  }

  struct Split {
    int feature = -1;
    std::uint32_t bin = 0;  // rows with bin <= this go left
    double gain = 0.0;
  };

  // Best split on one feature; returns whether the feature is non-constant
  // within the node.
  bool evaluate_feature(std::size_t f, const std::vector<std::uint32_t>& rows, const Stat& total,
                        double parent_score, Split& best) {
    const auto& uniq = features_.uniques(f);
    const std::size_t bins = uniq.size();
    if (bins < 2) return false;
    // Occupied bins in ascending order with their summed statistics; the
    // cheapest of three equivalent gathers is picked from node and column shape.
    occupied_.clear();
    const auto sparse = features_.above_min(f);
    if (sparse.size() < rows.size()) {
      // Rows at the column minimum are implied: bin 0 gets whatever the
      // listed rows leave of the node total.
      Stat rest = total;
      std::size_t listed = 0;
      occupied_.emplace_back(0, Stat{});
      for (auto r : sparse) {
        if (in_node_[r] != node_stamp_) continue;
        const auto bin = features_.bin(f, r);
        if (occupied_.back().first != bin) occupied_.emplace_back(bin, Stat{});
        occupied_.back().second.add(row_stats_[r]);
        rest = rest.minus(row_stats_[r]);
        ++listed;
      }
      if (listed == rows.size()) {
        occupied_.erase(occupied_.begin());
      } else {
        occupied_.front().second = rest;
      }
    } else if (rows.size() * 8 < bins) {
      sorted_.clear();
      for (auto r : rows) sorted_.emplace_back(features_.bin(f, r), r);
      std::sort(sorted_.begin(), sorted_.end());
      for (const auto& [bin, r] : sorted_) {
        if (occupied_.empty() || occupied_.back().first != bin) occupied_.emplace_back(bin, Stat{});
        occupied_.back().second.add(row_stats_[r]);
      }
    } else {
      std::fill(hist_.begin(), hist_.begin() + static_cast<std::ptrdiff_t>(bins), Stat{});
      for (auto r : rows) hist_[features_.bin(f, r)].add(row_stats_[r]);
      for (std::size_t b = 0; b < bins; ++b) {
        if (hist_[b].n > 0.0) occupied_.emplace_back(static_cast<std::uint32_t>(b), hist_[b]);
      }
    }
    if (occupied_.size() < 2) return false;

    const double min_leaf = params_.min_samples_leaf;
    Stat left;
    for (std::size_t i = 0; i + 1 < occupied_.size(); ++i) {
      const auto b = occupied_[i].first;
      left.add(occupied_[i].second);
      if (left.n < min_leaf) continue;
      const Stat right = total.minus(left);
      if (right.n < min_leaf) break;
      if (right.n <= 0.0) break;
      const double gain = score(left) + score(right) - parent_score;
      const double tolerance = 1e-12 * std::max(1.0, std::abs(parent_score));
      if (best.feature < 0 || gain > best.gain + tolerance ||
          (static_cast<int>(f) < best.feature && std::abs(gain - best.gain) <= tolerance)) {
        best = {static_cast<int>(f), static_cast<std::uint32_t>(b), gain};
      }
    }
    return true;
  }

  int grow(Tree& tree, std::vector<std::uint32_t> rows, int depth) {
    Stat total;
    for (auto r : rows) total.add(row_stats_[r]);
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({-1, 0.0, -1, -1, leaf_value(total)});

    const bool pure = criterion_ == SplitCriterion::gini && (total.a <= 0.0 || total.b <= 0.0);
    if (pure || (params_.max_depth >= 0 && depth >= params_.max_depth) ||
        total.n < 2.0 * params_.min_samples_leaf) {
      return id;
    }

    const double parent_score = score(total);
    ++node_stamp_;
    for (auto r : rows) in_node_[r] = node_stamp_;
    Split best;
    const std::size_t cols = features_.cols();
    const bool subsample = params_.max_features > 0 && static_cast<std::size_t>(params_.max_features) < cols;
    if (!subsample) {
      for (std::size_t f = 0; f < cols; ++f) evaluate_feature(f, rows, total, parent_score, best);
    } else {
      // Visit features in random order until max_features non-constant ones
      // have been examined.
      if (order_.size() != cols) {
        order_.resize(cols);
        std::iota(order_.begin(), order_.end(), 0);
      }
      int visited = 0;
      for (std::size_t i = 0; i < cols && visited < params_.max_features; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng_.uniform_index(cols - i));
        std::swap(order_[i], order_[j]);
        if (evaluate_feature(order_[i], rows, total, parent_score, best)) ++visited;
      }
    }
    if (best.feature < 0) return id;

    std::vector<std::uint32_t> left_rows, right_rows;
    const auto f = static_cast<std::size_t>(best.feature);
    for (auto r : rows) (features_.bin(f, r) <= best.bin ? left_rows : right_rows).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const auto& uniq = features_.uniques(f);
    double threshold = 0.5 * (uniq[best.bin] + uniq[best.bin + 1]);
    if (threshold >= uniq[best.bin + 1]) threshold = uniq[best.bin];

    const int left = grow(tree, std::move(left_rows), depth + 1);
    const int right = grow(tree, std::move(right_rows), depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  const BinnedFeatures& features_;
  SplitCriterion criterion_;
  TreeParams params_;
  Rng rng_;
  std::vector<Stat> row_stats_;
  std::vector<Stat> hist_;
  std::vector<std::pair<std::uint32_t, Stat>> occupied_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> sorted_;
  std::vector<std::size_t> order_;
  std::vector<std::uint64_t> in_node_;
  std::uint64_t node_stamp_ = 0;
};

}  // namespace

Tree build_tree(const BinnedFeatures& features, SplitCriterion criterion, std::span<const double> target,
                std::span<const double> weight, std::span<const double> count, const TreeParams& params) {
  const auto n = features.rows();
  if (target.size() != n || weight.size() != n || count.size() != n) {
    throw ValidationError("build_tree: per-row inputs do not match the feature rows");
  }
  if (params.min_samples_leaf < 1) throw ValidationError("min_samples_leaf must be >= 1");
  std::vector<std::uint32_t> rows;
  for (std::size_t r = 0; r < n; ++r) {
    if (count[r] > 0.0) rows.push_back(static_cast<std::uint32_t>(r));
  }
  if (rows.empty()) throw ValidationError("build_tree: no rows with positive count");
  Builder builder(features, criterion, target, weight, count, params);
  return builder.build(std::move(rows));
}

}  // namespace echr
