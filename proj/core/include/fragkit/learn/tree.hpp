#pragma once
// Binary CART with weighted Gini impurity and reduced-error pruning.

#include <cstdint>
#include <vector>

#include "fragkit/learn/model.hpp"

namespace fragkit::learn {

struct TreeParams {
  /// Minimum leaf weight as a share of the training set (weights are
  /// normalized to sum to the sample count).
  double min_leaf_fraction = 0.001;
  /// Features examined per split; 0 means all.
  std::size_t features_per_split = 0;

  void validate() const;
  json to_json() const;
  static TreeParams from_json(const json& j);
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 for leaves
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint32_t label = 0;    // weighted majority of the training samples here
  double weight = 0.0;        // normalized training weight reaching the node

  bool leaf() const { return feature < 0; }
};

class DecisionTree : public Model {
 public:
  DecisionTree() = default;

  /// Grows an unpruned tree. Samples with zero weight are ignored.
  static DecisionTree grow(const TrainingSet& train, const TreeParams& params, std::uint64_t rng_seed = 0);

  /// Bottom-up reduced-error pruning: a subtree becomes a leaf when the
  /// weighted validation accuracy does not drop.
  void prune(const TrainingSet& validation);

  std::string kind() const override { return "tree"; }
  std::size_t classes() const override { return classes_; }
  std::size_t features() const override { return features_; }
  std::uint32_t predict_row(std::span<const double> row) const override;
  void save(ByteWriter& out) const override;
  static DecisionTree load(ByteReader& in);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  /// Normalized training weight at the root.
  double total_weight() const { return nodes_.empty() ? 0.0 : nodes_[0].weight; }
  std::size_t leaf_count() const;
  std::size_t depth() const;

 private:
  void compact();

  std::vector<TreeNode> nodes_;
  std::size_t classes_ = 0;
  std::size_t features_ = 0;
};

}  // namespace fragkit::learn
