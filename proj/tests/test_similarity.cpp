#include <doctest.h>

#include <cmath>
#include <string>

#include "fragkit/error.hpp"
#include "fragkit/similarity.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fragkit;
using namespace fragkit::similarity;
using namespace fragkit::testing;
using doctest::Approx;

namespace {

Bytes text(const std::string& s) { return {s.begin(), s.end()}; }

std::array<double, 256> bfd_of(const Bytes& b) {
  std::array<double, 256> out{};
  for (auto x : b) out[x] += 256.0 / static_cast<double>(b.size());
  return out;
}

FragmentArchive numbered_archive(std::size_t n) {
  FragmentArchive a{"X", {}};
  for (std::size_t i = 0; i < n; ++i) a.records.push_back({static_cast<std::uint32_t>(i), Bytes{static_cast<std::uint8_t>(i + 1)}});
  return a;
}

}  // namespace

TEST_CASE("classic LCS example") {
  CHECK(longest_common_subsequence(text("ABCBDAB"), text("BDCABA")) == 4);
  CHECK(longest_common_substring(text("ABCBDAB"), text("BDCABA")) == 2);
  CHECK(longest_common_subsequence(text("aaaa"), text("bbbb")) == 0);
  CHECK(longest_common_substring(text("aaaa"), text("bbbb")) == 0);
}

TEST_CASE("LCS against quadratic DP on random pairs") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto alphabet = static_cast<std::uint8_t>(2 + rng() % 6);
    const auto a = testing::alphabet_bytes(rng, rng() % 65, alphabet);
    const auto b = testing::alphabet_bytes(rng, rng() % 65, alphabet);
    const auto sub = longest_common_substring(a, b);
    const auto seq = longest_common_subsequence(a, b);
    CHECK(sub == substring_dp(a, b));
    CHECK(seq == subsequence_dp(a, b));
    CHECK(sub <= seq);
    CHECK(seq <= std::min(a.size(), b.size()));
  }
  // Word-boundary cases of the bit-parallel update.
  for (std::size_t n : {63, 64, 65, 127, 128, 129, 300}) {
    const auto a = testing::alphabet_bytes(rng, n, 3);
    const auto b = testing::alphabet_bytes(rng, n + 5, 3);
    CHECK(longest_common_subsequence(a, b) == subsequence_dp(a, b));
    CHECK(longest_common_substring(a, b) == substring_dp(a, b));
  }
}

TEST_CASE("lcs_features") {
  std::mt19937_64 rng(32);
  const auto frag = testing::random_bytes(rng, 100);
  RepresentativeSet self{"X", {frag}, Placement::Begin};
  const auto f = lcs_features(frag, std::span(&self, 1));
  CHECK(f[0] == 100.0);
  CHECK(f[1] == 100.0);

  RepresentativeSet disjoint{"Y", {Bytes(50, 200), Bytes(20, 201)}, Placement::Begin};
  const auto d = lcs_features(Bytes(30, 1), std::span(&disjoint, 1));
  CHECK(d[0] == 0.0);
  CHECK(d[1] == 0.0);

  RepresentativeSet two{"Z", {text("BDCABA"), text("ABC")}, Placement::End};
  const auto t = lcs_features(text("ABCBDAB"), std::span(&two, 1));
  CHECK(t[0] == Approx((2.0 + 3.0) / 2));
  CHECK(t[1] == Approx((4.0 + 3.0) / 2));
}

TEST_CASE("representative selection") {
  const auto a = numbered_archive(10);
  const auto begin = select_representatives(a, 3, Placement::Begin, 0);
  REQUIRE(begin.count() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(begin.fragments[i] == Bytes{static_cast<std::uint8_t>(i + 1)});
  const auto end = select_representatives(a, 3, Placement::End, 0);
  CHECK(end.fragments.back() == Bytes{10});
  CHECK(end.fragments.front() == Bytes{8});
  CHECK(select_representatives(a, 10, Placement::Random, 5).count() == 10);
  CHECK_THROWS_AS(select_representatives(a, 11, Placement::Begin, 0), Error);
  const auto r1 = select_representatives(a, 4, Placement::Random, 7);
  const auto r2 = select_representatives(a, 4, Placement::Random, 7);
  CHECK(r1.fragments == r2.fragments);
  CHECK(parse_placement("random") == Placement::Random);
  CHECK_THROWS_AS(parse_placement("middle"), Error);
}

TEST_CASE("centroid model") {
  const Bytes one{1, 2, 3, 3};
  const auto single = build_centroid({"A", {one}, Placement::Begin});
  const auto bfd = bfd_of(one);
  for (int i = 0; i < 256; ++i) {
    CHECK(single.mean[i] == Approx(bfd[i]));
    CHECK(single.stddev[i] == 0.0);
  }
  const auto same = build_centroid({"A", {one, Bytes{3, 1, 3, 2}}, Placement::Begin});
  for (int i = 0; i < 256; ++i) CHECK(same.stddev[i] == Approx(0.0));

  // BFD_7 differs by 256/4 * 1 - 0 = 64 between the two.
  const auto differ = build_centroid({"A", {Bytes{7, 1, 1, 1}, Bytes{1, 1, 1, 1}}, Placement::Begin});
  CHECK(differ.stddev[7] == Approx(64 / std::sqrt(2.0)));
  double total = 0;
  for (double m : differ.mean) total += m;
  CHECK(total == Approx(256));
}

TEST_CASE("centroid features against direct formulas") {
  const Bytes frag{4, 4, 9, 200};
  const auto model = build_centroid({"A", {frag}, Placement::Begin});
  const auto self = centroid_features(frag, std::span(&model, 1));
  CHECK(self[0] == Approx(1.0));
  CHECK(self[1] == Approx(0.0));

  const auto low = build_centroid({"B", {Bytes{1, 2}}, Placement::Begin});
  CHECK(centroid_features(Bytes{100, 101}, std::span(&low, 1))[0] == 0.0);

  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    RepresentativeSet reps{"C", {}, Placement::Random};
    for (int r = 0; r < 1 + static_cast<int>(rng() % 5); ++r) reps.fragments.push_back(testing::alphabet_bytes(rng, 64, 40));
    const auto m = build_centroid(reps);
    const auto f = testing::alphabet_bytes(rng, 128, 60);
    const auto b = bfd_of(f);

    std::array<double, 256> mu{}, sd{};
    const double n = static_cast<double>(reps.count());
    for (const auto& rf : reps.fragments) {
      const auto rb = bfd_of(rf);
      for (int i = 0; i < 256; ++i) mu[i] += rb[i] / n;
    }
    for (const auto& rf : reps.fragments) {
      const auto rb = bfd_of(rf);
      for (int i = 0; i < 256; ++i) sd[i] += (rb[i] - mu[i]) * (rb[i] - mu[i]);
    }
    for (auto& s : sd) s = n > 1 ? std::sqrt(s / (n - 1)) : 0.0;
    double dot = 0, nb = 0, nm = 0, maha = 0;
    for (int i = 0; i < 256; ++i) {
      dot += b[i] * mu[i];
      nb += b[i] * b[i];
      nm += mu[i] * mu[i];
      maha += (b[i] - mu[i]) * (b[i] - mu[i]) / (0.01 + sd[i]);
    }
    const auto got = centroid_features(f, std::span(&m, 1));
    CHECK(got[0] == Approx(dot / std::sqrt(nb * nm)).epsilon(1e-9));
    CHECK(got[1] == Approx(std::sqrt(maha)).epsilon(1e-9));
    CHECK(got[0] >= 0.0);
    CHECK(got[0] <= 1.0 + 1e-12);

    auto shuffled = reps;
    std::reverse(shuffled.fragments.begin(), shuffled.fragments.end());
    const auto m2 = build_centroid(shuffled);
    const auto again = centroid_features(f, std::span(&m2, 1));
    CHECK(again[0] == Approx(got[0]).epsilon(1e-12));
    CHECK(again[1] == Approx(got[1]).epsilon(1e-12));
  }
}
