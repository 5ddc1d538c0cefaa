#pragma once

#include <vector>

#include "fragkit/learn/tree.hpp"

namespace fragkit::learn {

struct ForestParams {
  std::size_t n_trees = 51;
  double min_leaf_fraction = 0.001;
  /// 0 picks ceil(sqrt(F)).
  std::size_t features_per_split = 0;
  /// Weighted per-sample resampling for each tree; off means every tree
  /// sees the full training set.
  bool bootstrap = true;

  void validate() const;
  json to_json() const;
  static ForestParams from_json(const json& j);
};

class RandomForest : public Model {
 public:
  RandomForest() = default;

  /// Tree t uses seed derive_seed(rng_seed, t); trees grow in parallel.
  static RandomForest train(const TrainingSet& train, const ForestParams& params, std::uint64_t rng_seed);

  std::string kind() const override { return "forest"; }
  std::size_t classes() const override { return classes_; }
  std::size_t features() const override { return features_; }
  /// Unweighted majority vote; ties go to the lowest class.
  std::uint32_t predict_row(std::span<const double> row) const override;
  void save(ByteWriter& out) const override;
  static RandomForest load(ByteReader& in);

  const std::vector<DecisionTree>& trees() const { return trees_; }

 private:
  std::vector<DecisionTree> trees_;
  std::size_t classes_ = 0;
  std::size_t features_ = 0;
};

}  // namespace fragkit::learn
