#include "fragkit/select.hpp"

#include <algorithm>
#include <numeric>

#include "fragkit/error.hpp"
#include "fragkit/learn/bayes.hpp"
#include "fragkit/parallel.hpp"

namespace fragkit::select {

std::vector<double> tree_feature_scores(const learn::DecisionTree& tree) {
  std::vector<double> scores(tree.features(), 0.0);
  const double total = tree.total_weight();
  if (!(total > 0.0)) return scores;
  for (const auto& n : tree.nodes()) {
    if (n.leaf()) continue;
    auto& s = scores[static_cast<std::size_t>(n.feature)];
    s = std::max(s, n.weight / total);
  }
  return scores;
}

SelectionReport embedded_tree_selection(const Dataset& ds, const learn::TrainOptions& tree_options,
                                        std::optional<double> threshold) {
  auto options = tree_options;
  options.kind = learn::MachineKind::Tree;
  const auto report = learn::train_machine(ds, options);
  const auto& tree = dynamic_cast<const learn::DecisionTree&>(*report.machine.model);
  const auto scores = tree_feature_scores(tree);

  SelectionReport out;
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  for (auto j : order) {
    if (scores[j] <= 0.0) break;
    out.ranked.push_back(j);
    out.scores.push_back(scores[j]);
    if (!threshold || scores[j] > *threshold) out.chosen.push_back(j);
  }
  if (out.ranked.empty()) out.warnings.push_back("pruned tree is a single leaf; no feature was used");
  return out;
}

double lda_cv_accuracy(const Dataset& ds, std::span<const std::size_t> features, std::size_t k) {
  const auto folds = learn::make_folds(ds.file_ids, k);
  const auto c = ds.classes();
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c));
  const auto f = static_cast<Eigen::Index>(features.size());
  for (const auto& [b, e] : folds) {
    const auto n_train = ds.size() - (e - b);
    Matrix x(static_cast<Eigen::Index>(n_train), f);
    Labels y;
    y.reserve(n_train);
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (i >= b && i < e) continue;
      for (Eigen::Index j = 0; j < f; ++j) x(r, j) = ds.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(features[static_cast<std::size_t>(j)]));
      y.push_back(ds.labels[i]);
      ++r;
    }
    const Vector w = compute_weights(y, WeightMethod::Balanced);
    const auto lda = learn::Lda::train({x, y, w, c});

    Labels truth(ds.labels.begin() + static_cast<std::ptrdiff_t>(b), ds.labels.begin() + static_cast<std::ptrdiff_t>(e));
    const Vector wt = compute_weights(truth, WeightMethod::Balanced);
    std::vector<double> row(features.size());
    for (std::size_t i = b; i < e; ++i) {
      for (std::size_t j = 0; j < features.size(); ++j) row[j] = ds.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(features[j]));
      pooled(ds.labels[i], lda.predict_row(row)) += wt[static_cast<Eigen::Index>(i - b)];
    }
  }
  const double total = pooled.sum();
  return total > 0.0 ? pooled.trace() / total : 0.0;
}

SelectionReport wrapper_sfs_lda(const Dataset& ds, std::size_t k, std::optional<std::size_t> max_features) {
  if (k < 2) throw parameter_error("wrapper selection needs K >= 2");
  const auto counts = ds.class_counts();
  const auto present = std::count_if(counts.begin(), counts.end(), [](std::size_t n) { return n > 0; });
  if (present < 2) throw input_error("wrapper selection needs at least two classes");
  const auto limit = std::min(max_features.value_or(ds.features()), ds.features());

  SelectionReport out;
  std::vector<bool> used(ds.features(), false);
  double current = 0.0;
  while (out.chosen.size() < limit) {
    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j < ds.features(); ++j) {
      if (!used[j]) candidates.push_back(j);
    }
    std::vector<double> acc(candidates.size(), 0.0);
    parallel_for(candidates.size(), [&](std::size_t t) {
      auto subset = out.chosen;
      subset.push_back(candidates[t]);
      acc[t] = lda_cv_accuracy(ds, subset, k);
    });
    std::size_t best = 0;
    for (std::size_t t = 1; t < acc.size(); ++t) {
      if (acc[t] > acc[best]) best = t;
    }
    if (acc.empty() || !(acc[best] > current + 1e-6)) break;
    current = acc[best];
    used[candidates[best]] = true;
    out.chosen.push_back(candidates[best]);
    out.ranked.push_back(candidates[best]);
    out.scores.push_back(current);
  }
  return out;
}

}  // namespace fragkit::select
