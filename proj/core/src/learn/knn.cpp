#include "fragkit/learn/knn.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "fragkit/error.hpp"
#include "fragkit/parallel.hpp"

namespace fragkit::learn {

void KnnParams::validate() const {
  if (learners < 1) throw parameter_error("k-NN ensemble needs at least one learner");
  if (k < 1) throw parameter_error("k must be >= 1");
}

json KnnParams::to_json() const {
  return {{"features_per_learner", features_per_learner}, {"learners", learners}, {"k", k}};
}

KnnParams KnnParams::from_json(const json& j) {
  KnnParams p;
  p.features_per_learner = param(j, "features_per_learner", p.features_per_learner);
  p.learners = param(j, "learners", p.learners);
  p.k = param(j, "k", p.k);
  p.validate();
  return p;
}

KnnEnsemble KnnEnsemble::train(const TrainingSet& train, const KnnParams& params, std::uint64_t rng_seed) {
  params.validate();
  const auto f = train.features();
  const auto d = params.features_per_learner == 0 ? f : params.features_per_learner;
  if (d > f) {
    throw parameter_error("features per learner (" + std::to_string(d) + ") exceeds the feature count " +
                          std::to_string(f));
  }
  if (params.k > train.size()) {
    throw input_error("k = " + std::to_string(params.k) + " exceeds the training size " +
                      std::to_string(train.size()));
  }
  KnnEnsemble m;
  m.x_ = train.x;
  m.y_.assign(train.y.begin(), train.y.end());
  m.w_.assign(train.w.data(), train.w.data() + train.w.size());
  m.classes_ = train.classes;
  m.k_ = params.k;
  std::vector<std::size_t> all(f);
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t l = 0; l < params.learners; ++l) {
    if (d == f) {
      m.subsets_.push_back(all);
      continue;
    }
    std::mt19937_64 rng(derive_seed(rng_seed, l));
    std::vector<std::size_t> subset;
    std::sample(all.begin(), all.end(), std::back_inserter(subset), d, rng);
    m.subsets_.push_back(std::move(subset));
  }
  return m;
}

std::uint32_t KnnEnsemble::learner_vote(std::size_t learner, std::span<const double> row) const {
  const auto& subset = subsets_[learner];
  const auto n = y_.size();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x_.data() + i * static_cast<std::size_t>(x_.cols());
    double s = 0.0;
    for (auto f : subset) s += (xi[f] - row[f]) * (xi[f] - row[f]);
    dist[i] = {s, i};
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
  std::vector<double> votes(classes_, 0.0);
  for (std::size_t r = 0; r < k_; ++r) votes[y_[dist[r].second]] += w_[dist[r].second];
  return argmax(votes);
}

std::uint32_t KnnEnsemble::predict_row(std::span<const double> row) const {
  if (subsets_.size() == 1) return learner_vote(0, row);
  std::vector<double> votes(classes_, 0.0);
  for (std::size_t l = 0; l < subsets_.size(); ++l) votes[learner_vote(l, row)] += 1.0;
  return argmax(votes);
}

void KnnEnsemble::save(ByteWriter& out) const {
  out.u64(classes_);
  out.u64(k_);
  out.u64(static_cast<std::uint64_t>(x_.rows()));
  out.u64(static_cast<std::uint64_t>(x_.cols()));
  out.f64s(std::span<const double>(x_.data(), static_cast<std::size_t>(x_.size())));
  for (auto l : y_) out.u32(l);
  out.f64s(w_);
  out.u64(subsets_.size());
  for (const auto& s : subsets_) {
    out.u64(s.size());
    for (auto f : s) out.u64(f);
  }
}

KnnEnsemble KnnEnsemble::load(ByteReader& in) {
  KnnEnsemble m;
  const auto at = in.offset();
  m.classes_ = in.u64();
  m.k_ = in.u64();
  const auto rows = in.u64(), cols = in.u64();
  const auto data = in.f64s();
  if (data.size() != rows * cols || m.k_ < 1 || m.k_ > rows) {
    throw format_error("inconsistent k-NN state near byte offset " + std::to_string(at));
  }
  m.x_ = Eigen::Map<const Matrix>(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::uint64_t i = 0; i < rows; ++i) {
    m.y_.push_back(in.u32());
    if (m.y_.back() >= m.classes_) throw format_error("k-NN label out of range near byte offset " + std::to_string(at));
  }
  m.w_ = in.f64s();
  const auto learners = in.u64();
  if (m.w_.size() != rows || learners == 0 || learners > in.remaining()) {
    throw format_error("inconsistent k-NN state near byte offset " + std::to_string(at));
  }
  for (std::uint64_t l = 0; l < learners; ++l) {
    const auto size = in.u64();
    if (size > cols) throw format_error("k-NN subset too large near byte offset " + std::to_string(in.offset()));
    std::vector<std::size_t> s;
    for (std::uint64_t k = 0; k < size; ++k) {
      s.push_back(in.u64());
      if (s.back() >= cols) throw format_error("k-NN feature index out of range");
    }
    m.subsets_.push_back(std::move(s));
  }
  return m;
}

}  // namespace fragkit::learn
