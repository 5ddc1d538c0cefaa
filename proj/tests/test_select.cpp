#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "fragkit/error.hpp"
#include "fragkit/plot.hpp"
#include "fragkit/select.hpp"
#include "support.hpp"

using namespace fragkit;
using doctest::Approx;

namespace {

// Noise columns plus column `signal` that separates the two classes by `gap`.
Dataset with_signal(std::size_t per_class, std::size_t features, std::size_t signal, double gap, std::uint64_t seed) {
  auto ds = testing::blobs(per_class, 2, features, 0.0, seed);
  for (std::size_t i = 0; i < ds.size(); ++i) ds.samples(i, signal) += gap * ds.labels[i];
  return ds;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("tree feature scores") {
  const auto ds = with_signal(100, 4, 2, 50.0, 81);
  const Vector w = Vector::Ones(200);
  const learn::TrainingSet set{ds.samples, ds.labels, w, 2};
  const auto tree = learn::DecisionTree::grow(set, learn::TreeParams{0.01, 0});
  const auto scores = select::tree_feature_scores(tree);
  REQUIRE(scores.size() == 4);
  CHECK(scores[2] == Approx(1.0));
  CHECK(scores[0] == 0.0);
  CHECK(scores[1] == 0.0);
  CHECK(scores[3] == 0.0);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto noisy = testing::blobs(60, 3, 5, 0.7, 900 + seed);
    const Vector nw = Vector::Ones(static_cast<Eigen::Index>(noisy.size()));
    const auto t = learn::DecisionTree::grow({noisy.samples, noisy.labels, nw, 3}, learn::TreeParams{0.005, 0});
    const auto s = select::tree_feature_scores(t);
    CHECK(*std::max_element(s.begin(), s.end()) == Approx(1.0));
    for (double v : s) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("embedded selection") {
  const auto ds = permute_dataset(with_signal(200, 5, 3, 50.0, 82), 1);
  learn::TrainOptions o;
  o.split = {0, 1, 80, 20};
  const auto all = select::embedded_tree_selection(ds, o, std::nullopt);
  REQUIRE_FALSE(all.ranked.empty());
  CHECK(all.ranked[0] == 3);
  CHECK(all.scores[0] == Approx(1.0));
  CHECK(all.chosen == all.ranked);
  CHECK(std::is_sorted(all.scores.rbegin(), all.scores.rend()));

  const auto above = select::embedded_tree_selection(ds, o, 0.5);
  CHECK(above.chosen == std::vector<std::size_t>{3});
}

TEST_CASE("wrapper forward selection") {
  const auto ds = with_signal(60, 6, 4, 40.0, 83);
  const auto one = select::wrapper_sfs_lda(ds, 5, std::nullopt);
  CHECK(one.chosen == std::vector<std::size_t>{4});
  CHECK(one.scores.back() == Approx(1.0));

  // Two identical informative columns: only one of them is ever useful.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto dup = with_signal(80, 5, 1, 1.5, 1000 + seed);
    for (std::size_t i = 0; i < dup.size(); ++i) dup.samples(i, 3) = dup.samples(i, 1);
    const auto r = select::wrapper_sfs_lda(dup, 4, std::nullopt);
    const auto has = [&](std::size_t f) { return std::find(r.chosen.begin(), r.chosen.end(), f) != r.chosen.end(); };
    CHECK(has(1) != has(3));
    for (std::size_t i = 1; i < r.scores.size(); ++i) CHECK(r.scores[i] > r.scores[i - 1]);
    std::vector<std::size_t> chosen = r.chosen;
    CHECK(r.scores.back() == Approx(select::lda_cv_accuracy(dup, chosen, 4)));
  }

  const auto capped = select::wrapper_sfs_lda(testing::blobs(40, 3, 6, 0.8, 84), 4, 2);
  CHECK(capped.chosen.size() <= 2);
  CHECK_THROWS_AS(select::wrapper_sfs_lda(ds, 1, std::nullopt), Error);
}

TEST_CASE("histograms") {
  auto ds = testing::blobs(50, 3, 2, 2.0, 85);
  for (std::size_t i = 0; i < ds.size(); ++i) ds.samples(i, 1) = 7.0;
  const std::vector<std::uint32_t> classes{0, 2};
  const auto flat = plot::make_histogram(ds, 1, classes, 10);
  REQUIRE(flat.series.size() == 2);
  for (const auto& s : flat.series) {
    CHECK(s.counts[0] == 50);
    CHECK(std::accumulate(s.counts.begin() + 1, s.counts.end(), std::size_t{0}) == 0);
  }

  std::mt19937_64 rng(86);
  for (int trial = 0; trial < 30; ++trial) {
    const auto bins = 1 + rng() % 40;
    const auto h = plot::make_histogram(ds, 0, classes, bins);
    CHECK(h.edges.size() == bins + 1);
    CHECK(std::is_sorted(h.edges.begin(), h.edges.end()));
    for (const auto& s : h.series) {
      CHECK(s.counts.size() == bins);
      CHECK(std::accumulate(s.counts.begin(), s.counts.end(), std::size_t{0}) == 50);
    }
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.labels[i] == 1) continue;
      lo = std::min(lo, ds.samples(i, 0));
      hi = std::max(hi, ds.samples(i, 0));
    }
    CHECK(h.edges.front() == lo);
    CHECK(h.edges.back() == Approx(hi));
    CHECK(count_lines(plot::histogram_tsv(h)) == 1 + 2 * bins);
    CHECK(plot::histogram_svg(h).find("<svg") != std::string::npos);
  }
  CHECK_THROWS_AS(plot::make_histogram(ds, 0, classes, 0), Error);
  CHECK_THROWS_AS(plot::make_histogram(ds, 5, classes, 10), Error);
}

TEST_CASE("scatters") {
  const auto ds = testing::blobs(20, 4, 3, 1.0, 87);
  const std::vector<plot::ScatterGroup> groups{{"low", {0, 1}}, {"top", {3}}};
  const std::vector<std::size_t> two{0, 2}, three{0, 1, 2};
  const auto s = plot::make_scatter(ds, two, groups);
  CHECK(s.axes == std::vector<std::string>{"f0", "f2"});
  REQUIRE(s.points.size() == 2);
  CHECK(s.points[0].size() == 40);
  CHECK(s.points[1].size() == 20);
  for (const auto& p : s.points[1]) CHECK(p[2] == 0.0);
  CHECK(count_lines(plot::scatter_tsv(s)) == 61);
  CHECK(plot::make_scatter(ds, three, groups).axes.size() == 3);
  CHECK(plot::scatter_svg(s).find("<svg") != std::string::npos);

  const std::vector<std::size_t> one{0}, four{0, 1, 2, 0};
  CHECK_THROWS_AS(plot::make_scatter(ds, one, groups), Error);
  CHECK_THROWS_AS(plot::make_scatter(ds, four, groups), Error);
}
