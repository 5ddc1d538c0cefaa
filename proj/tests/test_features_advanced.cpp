#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "fragkit/error.hpp"
#include "fragkit/features_advanced.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fragkit;
using namespace fragkit::features;
using namespace fragkit::testing;
using doctest::Approx;

namespace {

// Direct enumeration of the chaotic features from their definitions.
std::vector<double> chaotic_reference(const Bytes& x, const ChaoticParams& p) {
  std::vector<double> out;
  const std::size_t len = x.size();
  for (std::size_t dim = p.d_min; dim <= p.d_max; ++dim) {
    const std::size_t count = len - dim + 1;
    auto dist = [&](std::size_t i, std::size_t j, std::size_t d) {
      double s = 0;
      for (std::size_t k = 0; k < d; ++k) s += std::pow(double(x[i + k]) - double(x[j + k]), 2);
      return std::sqrt(s);
    };
    double sum = 0, sum2 = 0, logs = 0;
    std::size_t examined = 0, falses = 0, pairs = 0;
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < count; ++j) {
        if (j != i && dist(i, j, dim) < bd) bd = dist(i, j, dim), best = j;
      }
      sum += bd;
      sum2 += bd * bd;
      if (bd == 0) continue;
      if (i + dim < len && best + dim < len) {
        ++examined;
        falses += dist(i, best, dim + 1) / bd > p.ratio;
      }
      if (i + 1 < count && best + 1 < count && dist(i + 1, best + 1, dim) > 0) {
        logs += std::log(dist(i + 1, best + 1, dim) / bd);
        ++pairs;
      }
    }
    out.push_back(examined ? double(falses) / examined : 0.0);
    out.push_back(sum / count);
    out.push_back(std::sqrt(sum2 / count));
    out.push_back(pairs ? logs / pairs : 0.0);
  }
  return out;
}

}  // namespace

TEST_CASE("n-gram worked example") {
  const auto frag = pack_bits({1, 0, 1, 1, 1, 0, 0, 1, 0, 1, 1, 0, 1, 0, 0, 0});
  const int n[] = {2};
  const auto g = ngram_features(frag, n);
  REQUIRE(g.size() == 4);
  CHECK(std::abs(g[0] - 0.2) < 1e-12);
  CHECK(std::abs(g[0] + g[1] + g[2] + g[3] - 1.0) < 1e-12);
}

TEST_CASE("n-gram properties and oracle") {
  const int one[] = {1};
  const auto z = ngram_features(Bytes(4, 0), one);
  CHECK(z[0] == 1.0);
  CHECK(z[1] == 0.0);
  const int bad[] = {14};
  CHECK_THROWS_AS(ngram_features(Bytes(4, 0), bad), Error);

  std::mt19937_64 rng(21);
  const int ns[] = {1, 2, 3, 5, 8};
  for (int trial = 0; trial < 200; ++trial) {
    const auto frag = testing::fuzz_fragment(rng, 1, 64);
    const auto g = ngram_features(frag, ns);
    const auto bits = bits_of(frag);
    std::size_t at = 0;
    for (int n : ns) {
      double total = 0;
      for (std::size_t pattern = 0; pattern < (1u << n); ++pattern, ++at) {
        CHECK(g[at] >= 0.0);
        total += g[at];
        if (bits.size() < std::size_t(n)) continue;
        std::vector<std::uint8_t> needle;
        for (int k = n - 1; k >= 0; --k) needle.push_back((pattern >> k) & 1);
        CHECK(g[at] == Approx(double(naive_count(bits, needle)) / double(bits.size() - n + 1)));
      }
      if (bits.size() >= std::size_t(n)) CHECK(total == Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("pattern counters match a naive scan") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto frag = testing::alphabet_bytes(rng, 1 + rng() % 200, static_cast<std::uint8_t>(2 + rng() % 3));
    const Bytes needle = testing::alphabet_bytes(rng, 1 + rng() % 4, 3);
    CHECK(count_byte_pattern(frag, needle) == naive_count(frag, needle));
    std::vector<std::uint8_t> bit_needle(1 + rng() % 16);
    for (auto& b : bit_needle) b = rng() & 1;
    CHECK(count_bit_pattern(frag, bit_needle) == naive_count(bits_of(frag), bit_needle));
  }
}

TEST_CASE("video patterns") {
  CHECK(video_pattern_table().size() == 17);
  Bytes frag(100, 0x20);
  frag[10] = 0x4F, frag[11] = 0x67, frag[12] = 0x67, frag[13] = 0x53;
  const auto v = video_patterns(frag);
  std::size_t ogg = 17;
  for (std::size_t i = 0; i < 17; ++i)
    if (video_pattern_table()[i].bytes == Bytes{0x4F, 0x67, 0x67, 0x53}) ogg = i;
  REQUIRE(ogg < 17);
  CHECK(v[ogg] == Approx(std::ldexp(1.0, 32) / 97));
  for (std::size_t i = 0; i < 17; ++i)
    if (i != ogg) CHECK(v[i] == 0.0);

  for (const auto& p : video_pattern_table()) {
    if (p.bytes.size() != 2) continue;
    Bytes rep;
    for (int k = 0; k < 5; ++k) rep.insert(rep.end(), p.bytes.begin(), p.bytes.end());
    CHECK(count_byte_pattern(rep, p.bytes) == naive_count(rep, p.bytes));
  }
}

TEST_CASE("audio patterns") {
  const auto a = audio_patterns(Bytes{0xFF, 0xF0});
  CHECK(a[0] == Approx(4096.0 / 5));
  for (double x : audio_patterns(Bytes(10, 0))) CHECK(x == 0.0);
  CHECK(audio_patterns(Bytes(10, 0xFF))[0] == Approx(4096.0));
}

TEST_CASE("LZ76 phrase count") {
  for (std::size_t n : {2, 3, 10, 100}) CHECK(lz76_phrase_count(std::vector<std::uint8_t>(n, 0)) == 2);
  for (std::size_t n : {4, 5, 16, 101}) {
    std::vector<std::uint8_t> alt(n);
    for (std::size_t i = 0; i < n; ++i) alt[i] = i % 2;
    CHECK(lz76_phrase_count(alt) == 3);
  }
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::uint8_t> s(1 + rng() % 64);
    const auto bias = rng() % 4;
    for (auto& b : s) b = bias == 0 ? rng() % 2 : (rng() % 5 == 0);
    CHECK(lz76_phrase_count(s) == lz76_reference(s));
  }
  const auto k = kolmogorov_complexity(testing::random_bytes(rng, 1024));
  CHECK(std::abs(k - 1.0) < 0.2);

  // Extending a stream never lowers the phrase count.
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint8_t> s(200);
    for (auto& b : s) b = rng() % 2;
    std::size_t prev = 0;
    for (std::size_t n = 1; n <= s.size(); n += 7) {
      const auto c = lz76_phrase_count(std::span(s).first(n));
      CHECK(c >= prev);
      prev = c;
    }
  }
}

TEST_CASE("chaotic features") {
  ChaoticParams p{10.0, 1, 3};
  for (double v : chaotic_features(Bytes(50, 9), p)) CHECK(v == 0.0);
  CHECK(chaotic_features(Bytes(50, 9), p).size() == 12);
  CHECK_THROWS_AS(chaotic_features(Bytes(4, 0), p), Error);
  CHECK_THROWS_AS(chaotic_features(Bytes(40, 0), ChaoticParams{0.0, 1, 2}), Error);

  Bytes periodic(60);
  for (std::size_t i = 0; i < periodic.size(); ++i) periodic[i] = static_cast<std::uint8_t>((i % 3) * 40);
  const auto per = chaotic_features(periodic, ChaoticParams{10.0, 3, 5});
  for (std::size_t d = 0; d < 3; ++d) CHECK(per[4 * d + 3] == 0.0);

  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 20; ++trial) {
    const auto frag = testing::fuzz_fragment(rng, 12, 120);
    ChaoticParams q{0.5 + (rng() % 40) / 4.0, 1 + rng() % 2, 3 + rng() % 3};
    const auto got = chaotic_features(frag, q);
    const auto want = chaotic_reference(frag, q);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == Approx(want[i]).epsilon(1e-9));
    for (std::size_t i = 0; i < got.size(); i += 4) CHECK((got[i] >= 0 && got[i] <= 1));
  }

  const auto random = testing::random_bytes(rng, 400);
  const auto fnf = chaotic_features(random, ChaoticParams{2.0, 1, 8});
  CHECK(fnf[0] > fnf[28]);
}

TEST_CASE("bicoherence") {
  CHECK(bicoherence(Bytes(512, 7)) == 0.0);
  CHECK_THROWS_AS(bicoherence(Bytes(255, 0)), Error);
  std::mt19937_64 rng(25);
  std::normal_distribution<double> normal(128, 30);
  Bytes noise(4096);
  for (auto& b : noise) b = static_cast<std::uint8_t>(std::clamp(std::lround(normal(rng)), 0L, 255L));
  const double b_noise = bicoherence(noise);
  CHECK(b_noise < 0.3);

  // Tones at f1, f2 and the phase-locked product at f1 + f2.
  Bytes coupled(4096);
  std::uniform_real_distribution<double> phase(0, 2 * std::numbers::pi);
  for (std::size_t s = 0; s < coupled.size() / 128; ++s) {
    const double p1 = phase(rng), p2 = phase(rng);
    for (std::size_t t = 0; t < 128; ++t) {
      const double w = 2 * std::numbers::pi * t / 128.0;
      const double v = std::cos(10 * w + p1) + std::cos(17 * w + p2) + 0.8 * std::cos(27 * w + p1 + p2);
      coupled[s * 128 + t] = static_cast<std::uint8_t>(std::lround(128 + 40 * v));
    }
  }
  CHECK(bicoherence(coupled) > b_noise);
}

TEST_CASE("gist") {
  GistParams p;
  CHECK(p.output_size() == 512);
  std::mt19937_64 rng(26);
  CHECK(gist_features(testing::random_bytes(rng, 1024), p).size() == 512);
  for (double v : gist_features(Bytes(1024, 100), p)) CHECK(std::abs(v) < 1e-6);
  for (int trial = 0; trial < 10; ++trial) {
    GistParams q;
    q.row_size = 8 + rng() % 40;
    q.grid = 1 + rng() % 4;
    q.orientations.assign(1 + rng() % 4, 0);
    for (auto& o : q.orientations) o = 1 + static_cast<int>(rng() % 6);
    const auto frag = testing::random_bytes(rng, q.row_size + rng() % 900);
    const auto g = gist_features(frag, q);
    std::size_t sum = 0;
    for (int o : q.orientations) sum += static_cast<std::size_t>(o);
    CHECK(g.size() == q.grid * q.grid * sum);
    for (double v : g) CHECK(std::isfinite(v));
  }
  GistParams bad;
  bad.grid = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}
