#pragma once
// Feature selection: tree-embedded node-size ranking and wrapper forward
// selection scored by cross-validated LDA.

#include <optional>
#include <string>
#include <vector>

#include "fragkit/dataset.hpp"
#include "fragkit/learn/machine.hpp"
#include "fragkit/learn/tree.hpp"

namespace fragkit::select {

struct SelectionReport {
  /// Features in ranking order (embedded: score-descending; wrapper: order of
  /// addition) with their scores.
  std::vector<std::size_t> ranked;
  std::vector<double> scores;
  /// Subset for sub_dataset().
  std::vector<std::size_t> chosen;
  std::vector<std::string> warnings;
};

/// Per feature: largest share of the root weight reaching a node that splits
/// on it; 0 for unused features.
std::vector<double> tree_feature_scores(const learn::DecisionTree& tree);

/// Trains a pruned tree per `tree_options` and ranks features with a positive
/// score. chosen = ranked features scoring above `threshold` (all ranked
/// features when none is given).
SelectionReport embedded_tree_selection(const Dataset& ds, const learn::TrainOptions& tree_options,
                                        std::optional<double> threshold);

/// Pooled K-fold balanced accuracy of LDA restricted to `features`.
double lda_cv_accuracy(const Dataset& ds, std::span<const std::size_t> features, std::size_t k);

/// Sequential forward selection; each round adds the candidate with the best
/// lda_cv_accuracy (ties to the lower index) while it improves by > 1e-6.
/// scores hold the accuracy after each addition.
SelectionReport wrapper_sfs_lda(const Dataset& ds, std::size_t k, std::optional<std::size_t> max_features);

}  // namespace fragkit::select
