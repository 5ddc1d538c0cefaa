#include "fragkit/learn/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fragkit/error.hpp"
#include "fragkit/parallel.hpp"

namespace fragkit::learn {

Labels Model::predict(const Matrix& rows) const {
  if (static_cast<std::size_t>(rows.cols()) != features()) {
    throw compatibility_error("model expects " + std::to_string(features()) + " features, rows have " +
                              std::to_string(rows.cols()));
  }
  Labels out(static_cast<std::size_t>(rows.rows()));
  parallel_for(out.size(), [&](std::size_t i) { out[i] = predict_row(row_of(rows, i)); });
  return out;
}

std::uint32_t argmax(std::span<const double> values) {
  std::uint32_t best = 0;
  for (std::uint32_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

void TreeParams::validate() const {
  if (!(min_leaf_fraction > 0.0 && min_leaf_fraction <= 0.5)) {
    throw parameter_error("minimum leaf fraction must lie in (0, 0.5], got " + std::to_string(min_leaf_fraction));
  }
}

json TreeParams::to_json() const {
  return {{"min_leaf_fraction", min_leaf_fraction}, {"features_per_split", features_per_split}};
}

TreeParams TreeParams::from_json(const json& j) {
  TreeParams p;
  p.min_leaf_fraction = param(j, "min_leaf_fraction", p.min_leaf_fraction);
  p.features_per_split = param(j, "features_per_split", p.features_per_split);
  p.validate();
  return p;
}

namespace {

constexpr double kRel = 1e-9;

class Grower {
 public:
  Grower(const TrainingSet& t, const TreeParams& p, std::uint64_t seed)
      : x_(t.x), y_(t.y), classes_(t.classes), features_(t.features()), rng_(seed) {
    std::vector<std::uint32_t> active;
    double total = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.w[static_cast<Eigen::Index>(i)] < 0.0) throw input_error("sample weights must be non-negative");
      if (t.w[static_cast<Eigen::Index>(i)] > 0.0) {
        active.push_back(static_cast<std::uint32_t>(i));
        total += t.w[static_cast<Eigen::Index>(i)];
      }
    }
    if (active.empty()) throw input_error("decision tree needs at least one training sample with positive weight");
    // Weights rescaled so they sum to the sample count.
    const double scale = static_cast<double>(t.size()) / total;
    w_.assign(t.size(), 0.0);
    for (auto i : active) w_[i] = t.w[static_cast<Eigen::Index>(i)] * scale;
    min_leaf_ = p.min_leaf_fraction * static_cast<double>(t.size()) * (1.0 - kRel);
    k_ = (p.features_per_split == 0 || p.features_per_split > features_) ? features_ : p.features_per_split;

    order_.resize(features_);
    for (std::size_t f = 0; f < features_; ++f) {
      auto& o = order_[f];
      o = active;
      std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) {
        return x_(a, static_cast<Eigen::Index>(f)) < x_(b, static_cast<Eigen::Index>(f));
      });
    }
    if (features_ == 0) order_.push_back(active);
    left_flag_.assign(t.size(), 0);
    n_active_ = active.size();
  }

  std::vector<TreeNode> run() {
    build(0, n_active_);
    return std::move(nodes_);
  }

 private:
  std::int32_t build(std::size_t lo, std::size_t hi) {
    std::vector<double> cw(classes_, 0.0);
    double total = 0.0;
    for (auto p = lo; p < hi; ++p) {
      const auto i = order_[0][p];
      cw[y_[i]] += w_[i];
      total += w_[i];
    }
    const auto id = static_cast<std::int32_t>(nodes_.size());
    TreeNode node;
    node.label = argmax(cw);
    node.weight = total;
    nodes_.push_back(node);

    const bool pure = cw[node.label] >= total * (1.0 - kRel);
    if (pure || total < 2.0 * min_leaf_ || features_ == 0) return id;

    std::vector<std::size_t> candidates(features_);
    std::iota(candidates.begin(), candidates.end(), std::size_t{0});
    if (k_ < features_) {
      std::vector<std::size_t> chosen;
      std::sample(candidates.begin(), candidates.end(), std::back_inserter(chosen), k_, rng_);
      candidates = std::move(chosen);
    }

    double best_score = -1.0;
    std::size_t best_f = 0;
    double best_thr = 0.0;
    double parent_sq = 0.0;
    for (double v : cw) parent_sq += v * v;
    std::vector<double> left(classes_);
    for (auto f : candidates) {
      const auto& o = order_[f];
      const auto fi = static_cast<Eigen::Index>(f);
      std::fill(left.begin(), left.end(), 0.0);
      double wl = 0.0, sl = 0.0, sr = parent_sq;
      for (auto p = lo; p + 1 < hi; ++p) {
        const auto i = o[p];
        const auto c = y_[i];
        const double v = w_[i];
        const double right_c = cw[c] - left[c];
        sl += v * (2.0 * left[c] + v);
        sr += v * (v - 2.0 * right_c);
        left[c] += v;
        wl += v;
        const double a = x_(i, fi);
        const double b = x_(o[p + 1], fi);
        if (!(a < b)) continue;
        const double wr = total - wl;
        if (wl < min_leaf_ || wr < min_leaf_) continue;
        const double score = sl / wl + sr / wr;
        if (score > best_score + kRel * total) {
          best_score = score;
          best_f = f;
          double mid = a + (b - a) / 2.0;
          if (!(mid < b)) mid = a;
          best_thr = mid;
        }
      }
    }
    if (best_score < 0.0) return id;

    const auto bf = static_cast<Eigen::Index>(best_f);
    std::size_t n_left = 0;
    for (auto p = lo; p < hi; ++p) {
      const auto i = order_[0][p];
      left_flag_[i] = x_(i, bf) <= best_thr;
      n_left += left_flag_[i];
    }
    for (auto& o : order_) {
      std::stable_partition(o.begin() + static_cast<std::ptrdiff_t>(lo), o.begin() + static_cast<std::ptrdiff_t>(hi),
                            [&](std::uint32_t i) { return left_flag_[i] != 0; });
    }
    const auto l = build(lo, lo + n_left);
    const auto r = build(lo + n_left, hi);
    auto& n = nodes_[static_cast<std::size_t>(id)];
    n.feature = static_cast<std::int32_t>(best_f);
    n.threshold = best_thr;
    n.left = l;
    n.right = r;
    return id;
  }

  const Matrix& x_;
  std::span<const std::uint32_t> y_;
  std::size_t classes_;
  std::size_t features_;
  std::mt19937_64 rng_;
  std::vector<double> w_;
  double min_leaf_ = 0.0;
  std::size_t k_ = 0;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<std::uint8_t> left_flag_;
  std::size_t n_active_ = 0;
  std::vector<TreeNode> nodes_;
};

}  // namespace

DecisionTree DecisionTree::grow(const TrainingSet& train, const TreeParams& params, std::uint64_t rng_seed) {
  params.validate();
  if (train.size() == 0) throw input_error("decision tree needs training samples");
  DecisionTree t;
  t.classes_ = train.classes;
  t.features_ = train.features();
  t.nodes_ = Grower(train, params, rng_seed).run();
  return t;
}

std::uint32_t DecisionTree::predict_row(std::span<const double> row) const {
  std::size_t n = 0;
  while (!nodes_[n].leaf()) {
    const auto& node = nodes_[n];
    n = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                                : node.right);
  }
  return nodes_[n].label;
}

void DecisionTree::prune(const TrainingSet& validation) {
  if (validation.size() == 0) throw input_error("pruning needs validation samples");
  if (validation.features() != features_) {
    throw compatibility_error("validation rows have " + std::to_string(validation.features()) + " features, tree has " +
                              std::to_string(features_));
  }
  // correct[n]: validation weight reaching n whose label equals n's label.
  std::vector<double> correct(nodes_.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < validation.size(); ++i) {
    const auto row = row_of(validation.x, i);
    const double w = validation.w[static_cast<Eigen::Index>(i)];
    total += w;
    std::size_t n = 0;
    for (;;) {
      if (nodes_[n].label == validation.y[i]) correct[n] += w;
      if (nodes_[n].leaf()) break;
      const auto& node = nodes_[n];
      n = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                                  : node.right);
    }
  }
  const double eps = 1e-12 * total;
  // Children always have larger indices than their parent, so a reverse sweep
  // visits them first.
  std::vector<double> subtree(nodes_.size(), 0.0);
  for (std::size_t k = nodes_.size(); k-- > 0;) {
    auto& n = nodes_[k];
    if (n.leaf()) {
      subtree[k] = correct[k];
      continue;
    }
    const double split = subtree[static_cast<std::size_t>(n.left)] + subtree[static_cast<std::size_t>(n.right)];
    if (correct[k] + eps >= split) {
      n.feature = -1;
      n.left = n.right = -1;
      subtree[k] = correct[k];
    } else {
      subtree[k] = split;
    }
  }
  compact();
}

void DecisionTree::compact() {
  std::vector<TreeNode> kept;
  // Depth-first, left before right, keeps parents before children.
  std::vector<std::int32_t> remap(nodes_.size(), -1);
  std::vector<std::size_t> order;
  std::vector<std::size_t> todo{0};
  while (!todo.empty()) {
    const auto n = todo.back();
    todo.pop_back();
    remap[n] = static_cast<std::int32_t>(order.size());
    order.push_back(n);
    if (!nodes_[n].leaf()) {
      todo.push_back(static_cast<std::size_t>(nodes_[n].right));
      todo.push_back(static_cast<std::size_t>(nodes_[n].left));
    }
  }
  for (auto n : order) {
    auto node = nodes_[n];
    if (!node.leaf()) {
      node.left = remap[static_cast<std::size_t>(node.left)];
      node.right = remap[static_cast<std::size_t>(node.right)];
    }
    kept.push_back(node);
  }
  nodes_ = std::move(kept);
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.leaf(); }));
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    best = std::max(best, d[k]);
    if (!nodes_[k].leaf()) {
      d[static_cast<std::size_t>(nodes_[k].left)] = d[k] + 1;
      d[static_cast<std::size_t>(nodes_[k].right)] = d[k] + 1;
    }
  }
  return best;
}

void DecisionTree::save(ByteWriter& out) const {
  out.u64(classes_);
  out.u64(features_);
  out.u64(nodes_.size());
  for (const auto& n : nodes_) {
    out.u32(static_cast<std::uint32_t>(n.feature));
    out.f64(n.threshold);
    out.u32(static_cast<std::uint32_t>(n.left));
    out.u32(static_cast<std::uint32_t>(n.right));
    out.u32(n.label);
    out.f64(n.weight);
  }
}

DecisionTree DecisionTree::load(ByteReader& in) {
  DecisionTree t;
  t.classes_ = in.u64();
  t.features_ = in.u64();
  const auto at = in.offset();
  const auto count = in.u64();
  if (count == 0 || count > in.remaining() / 32) throw format_error("bad tree node count at byte offset " + std::to_string(at));
  t.nodes_.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    auto& n = t.nodes_[k];
    const auto node_at = in.offset();
    n.feature = static_cast<std::int32_t>(in.u32());
    n.threshold = in.f64();
    n.left = static_cast<std::int32_t>(in.u32());
    n.right = static_cast<std::int32_t>(in.u32());
    n.label = in.u32();
    n.weight = in.f64();
    const auto bad_child = [&](std::int32_t c) { return c <= static_cast<std::int32_t>(k) || c >= static_cast<std::int32_t>(count); };
    if (n.label >= t.classes_ ||
        (!n.leaf() && (static_cast<std::size_t>(n.feature) >= t.features_ || bad_child(n.left) || bad_child(n.right)))) {
      throw format_error("invalid tree node at byte offset " + std::to_string(node_at));
    }
  }
  return t;
}

}  // namespace fragkit::learn
