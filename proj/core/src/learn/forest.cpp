#include "fragkit/learn/forest.hpp"

#include <cmath>
#include <random>

#include "fragkit/error.hpp"
#include "fragkit/parallel.hpp"

namespace fragkit::learn {

void ForestParams::validate() const {
  if (n_trees < 1) throw parameter_error("a forest needs at least one tree");
  TreeParams{min_leaf_fraction, features_per_split}.validate();
}

json ForestParams::to_json() const {
  return {{"n_trees", n_trees},
          {"min_leaf_fraction", min_leaf_fraction},
          {"features_per_split", features_per_split},
          {"bootstrap", bootstrap}};
}

ForestParams ForestParams::from_json(const json& j) {
  ForestParams p;
  p.n_trees = param(j, "n_trees", p.n_trees);
  p.min_leaf_fraction = param(j, "min_leaf_fraction", p.min_leaf_fraction);
  p.features_per_split = param(j, "features_per_split", p.features_per_split);
  p.bootstrap = param(j, "bootstrap", p.bootstrap);
  p.validate();
  return p;
}

RandomForest RandomForest::train(const TrainingSet& train, const ForestParams& params, std::uint64_t rng_seed) {
  params.validate();
  if (train.size() == 0) throw input_error("random forest needs training samples");
  RandomForest forest;
  forest.classes_ = train.classes;
  forest.features_ = train.features();
  TreeParams tp{params.min_leaf_fraction, params.features_per_split};
  if (tp.features_per_split == 0) {
    tp.features_per_split = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(train.features()))));
  }
  forest.trees_.resize(params.n_trees);
  parallel_for(params.n_trees, [&](std::size_t t) {
    const auto seed = derive_seed(rng_seed, t);
    if (!params.bootstrap) {
      forest.trees_[t] = DecisionTree::grow(train, tp, seed);
      return;
    }
    // Resample S draws proportional to weight; multiplicities become weights.
    std::mt19937_64 rng(derive_seed(seed, 0xb007));
    std::discrete_distribution<std::size_t> draw(train.w.data(), train.w.data() + train.w.size());
    Vector counts = Vector::Zero(train.w.size());
    for (std::size_t k = 0; k < train.size(); ++k) counts[static_cast<Eigen::Index>(draw(rng))] += 1.0;
    const TrainingSet boot{train.x, train.y, counts, train.classes};
    forest.trees_[t] = DecisionTree::grow(boot, tp, seed);
  });
  return forest;
}

std::uint32_t RandomForest::predict_row(std::span<const double> row) const {
  std::vector<double> votes(classes_, 0.0);
  for (const auto& t : trees_) votes[t.predict_row(row)] += 1.0;
  return argmax(votes);
}

void RandomForest::save(ByteWriter& out) const {
  out.u64(classes_);
  out.u64(features_);
  out.u64(trees_.size());
  for (const auto& t : trees_) t.save(out);
}

RandomForest RandomForest::load(ByteReader& in) {
  RandomForest f;
  f.classes_ = in.u64();
  f.features_ = in.u64();
  const auto at = in.offset();
  const auto n = in.u64();
  if (n == 0 || n > in.remaining()) throw format_error("bad tree count at byte offset " + std::to_string(at));
  for (std::uint64_t t = 0; t < n; ++t) {
    f.trees_.push_back(DecisionTree::load(in));
    if (f.trees_.back().classes() != f.classes_ || f.trees_.back().features() != f.features_) {
      throw format_error("forest tree " + std::to_string(t) + " disagrees with the forest shape");
    }
  }
  return f;
}

}  // namespace fragkit::learn
