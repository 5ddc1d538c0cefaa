#pragma once
// Random-subspace ensemble of weighted k-nearest-neighbor learners.

#include <vector>

#include "fragkit/learn/model.hpp"

namespace fragkit::learn {

struct KnnParams {
  /// 0 means all features.
  std::size_t features_per_learner = 0;
  std::size_t learners = 1;
  std::size_t k = 1;

  void validate() const;
  json to_json() const;
  static KnnParams from_json(const json& j);
};

class KnnEnsemble : public Model {
 public:
  KnnEnsemble() = default;

  /// Learner l draws its feature subset with seed derive_seed(rng_seed, l).
  static KnnEnsemble train(const TrainingSet& train, const KnnParams& params, std::uint64_t rng_seed);

  std::string kind() const override { return "knn"; }
  std::size_t classes() const override { return classes_; }
  std::size_t features() const override { return static_cast<std::size_t>(x_.cols()); }
  std::uint32_t predict_row(std::span<const double> row) const override;
  /// Vote of one learner: neighbors weighted by sample weight, distance ties
  /// to the lower training index, vote ties to the lower class.
  std::uint32_t learner_vote(std::size_t learner, std::span<const double> row) const;
  void save(ByteWriter& out) const override;
  static KnnEnsemble load(ByteReader& in);

  const std::vector<std::vector<std::size_t>>& subsets() const { return subsets_; }

 private:
  Matrix x_;
  Labels y_;
  std::vector<double> w_;
  std::size_t classes_ = 0;
  std::size_t k_ = 1;
  std::vector<std::vector<std::size_t>> subsets_;
};

}  // namespace fragkit::learn
