#include <doctest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include "fragkit/error.hpp"
#include "fragkit/features_basic.hpp"
#include "support.hpp"

using namespace fragkit;
using namespace fragkit::features;
using doctest::Approx;

namespace {

Bytes uniform256() {
  Bytes b(256);
  std::iota(b.begin(), b.end(), 0);
  return b;
}

Bytes filled(std::size_t n, std::uint8_t v) { return Bytes(n, v); }

double sample_std(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::vector<double> as_doubles(const Bytes& b) { return {b.begin(), b.end()}; }

// Quadratic DFT magnitude, bins 1..floor(L/2).
std::vector<double> naive_spectrum(const Bytes& b) {
  const std::size_t n = b.size();
  std::vector<double> out;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += static_cast<double>(b[t]) * std::polar(1.0, -2.0 * std::numbers::pi * double(k) * double(t) / double(n));
    }
    out.push_back(std::abs(acc));
  }
  return out;
}

}  // namespace

TEST_CASE("exact-uniform fragment: BFD, chi-square and concentration") {
  const auto f = bfd_features(uniform256());
  REQUIRE(f.size() == 260);
  for (int i = 0; i < 256; ++i) CHECK(f[i] == Approx(1.0).epsilon(1e-12));
  CHECK(f[256] == Approx(0.0));  // SdFreq
  CHECK(f[257] == Approx(4.0));  // ModesFreq
  CHECK(f[258] == Approx(0.0));  // CorNextFreq
  CHECK(std::abs(f[259] - 1.0) < 1e-9);  // ChiSq p-value
  const auto c = byte_concentration(uniform256());
  CHECK(c[0] == Approx(32));
  CHECK(c[1] == Approx(96));
  CHECK(c[2] == Approx(64));
}

TEST_CASE("BFD small cases") {
  auto zeros = bfd_features(filled(37, 0));
  CHECK(zeros[0] == Approx(256));
  for (int i = 1; i < 256; ++i) CHECK(zeros[i] == 0.0);
  auto pair = bfd_features(Bytes{0, 1, 0, 1});
  CHECK(pair[0] == Approx(128));
  CHECK(pair[1] == Approx(128));
  CHECK(std::accumulate(pair.begin() + 2, pair.begin() + 256, 0.0) == 0.0);
  CHECK_THROWS_AS(bfd_features(Bytes{}), Error);
}

TEST_CASE("BFD summary statistics against direct formulas") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto frag = testing::alphabet_bytes(rng, 64 + rng() % 900, static_cast<std::uint8_t>(2 + rng() % 200));
    const auto f = bfd_features(frag);
    std::vector<double> bfd(256, 0.0);
    for (auto b : frag) bfd[b] += 256.0 / static_cast<double>(frag.size());
    CHECK(std::accumulate(f.begin(), f.begin() + 256, 0.0) == Approx(256).epsilon(1e-12));
    double mean = 1.0, var = 0.0;
    for (double v : bfd) var += (v - mean) * (v - mean);
    CHECK(f[256] == Approx(std::sqrt(var / 256)).epsilon(1e-9));
    auto sorted = bfd;
    std::sort(sorted.rbegin(), sorted.rend());
    CHECK(f[257] == Approx(sorted[0] + sorted[1] + sorted[2] + sorted[3]).epsilon(1e-9));
    double ma = 0, mb = 0;
    for (int i = 0; i < 255; ++i) ma += bfd[i], mb += bfd[i + 1];
    ma /= 255, mb /= 255;
    double sab = 0, saa = 0, sbb = 0;
    for (int i = 0; i < 255; ++i) {
      sab += (bfd[i] - ma) * (bfd[i + 1] - mb);
      saa += (bfd[i] - ma) * (bfd[i] - ma);
      sbb += (bfd[i + 1] - mb) * (bfd[i + 1] - mb);
    }
    const double corr = saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : 0.0;
    CHECK(f[258] == Approx(corr).epsilon(1e-9));
    const double expected = static_cast<double>(frag.size()) / 256.0;
    double t = 0.0;
    for (double v : bfd) {
      const double count = v * static_cast<double>(frag.size()) / 256.0;
      t += (count - expected) * (count - expected) / expected;
    }
    CHECK(f[259] == Approx(boost::math::gamma_q(127.5, t / 2)).epsilon(1e-9));
  }
}

TEST_CASE("regularized upper incomplete gamma matches boost") {
  for (double a : {0.5, 1.0, 2.5, 10.0, 127.5, 500.0}) {
    for (double x : {0.0, 0.01, 0.5, 1.0, 3.0, 9.9, 11.0, 100.0, 127.0, 130.0, 400.0, 520.0}) {
      const double want = boost::math::gamma_q(a, x);
      const double got = regularized_gamma_q(a, x);
      CHECK(std::abs(got - want) <= 1e-10 + 1e-9 * want);
    }
  }
  CHECK(chi_square_upper_tail(0.0, 255) == Approx(1.0));
}

TEST_CASE("rate of change") {
  auto constant = roc_features(filled(50, 9));
  REQUIRE(constant.size() == 257);
  CHECK(constant[0] == Approx(256));
  for (int j = 1; j < 256; ++j) CHECK(constant[j] == 0.0);
  CHECK(constant[256] == 0.0);

  auto jump = roc_features(Bytes{0, 255});
  CHECK(jump[255] == Approx(32768));
  CHECK(jump[256] == Approx(255));

  auto small = roc_features(Bytes{10, 13, 9});
  CHECK(small[3] == Approx(65536.0 / (2 * 253) * 0.5));
  CHECK(small[4] == Approx(65536.0 / (2 * 252) * 0.5));
  CHECK(small[256] == Approx(3.5));
  CHECK_THROWS_AS(roc_features(Bytes{1}), Error);

  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto y = roc_frequencies(testing::fuzz_fragment(rng, 2, 600));
    CHECK(std::accumulate(y.begin(), y.end(), 0.0) == Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("longest streak") {
  const Bytes example{12, 123, 123, 123, 43, 123, 43, 43, 43, 43, 43, 123, 43, 76, 54, 54, 54, 54};
  CHECK(std::abs(longest_streak(example) - 5.0 / 18.0) < 1e-12);
  CHECK(longest_streak(filled(10, 3)) == 1.0);
  Bytes alt(40);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2;
  CHECK(longest_streak(alt) == Approx(1.0 / 40));
}

TEST_CASE("byte concentration") {
  auto spaces = byte_concentration(filled(20, 0x20));
  CHECK(spaces[0] == 0.0);
  CHECK(spaces[1] == Approx(256));
  CHECK(spaces[2] == 0.0);
  CHECK(byte_concentration(filled(9, 0xFF))[2] == Approx(256));
  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    auto c = byte_concentration(testing::fuzz_fragment(rng, 1, 300));
    CHECK(c[0] + c[1] + c[2] <= 256 + 1e-9);
  }
}

TEST_CASE("basic statistics") {
  const auto s = basic_stats(Bytes{2, 8});
  CHECK(s[0] == Approx(5));
  CHECK(s[1] == Approx(std::sqrt(18.0)));
  CHECK(s[2] == Approx(2));
  CHECK(s[3] == Approx(5));
  CHECK(s[4] == Approx(3));
  CHECK(s[5] == Approx(4));
  CHECK(s[6] == Approx(3.2));

  const auto z = basic_stats(Bytes{0, 9, 200});
  CHECK(z[5] == 0.0);
  CHECK(z[6] == 0.0);

  const auto c = basic_stats(filled(11, 77));
  for (int i : {0, 2, 3, 5, 6}) CHECK(c[i] == Approx(77));
  CHECK(c[1] == 0.0);
  CHECK(c[4] == 0.0);
  CHECK_THROWS_AS(basic_stats(Bytes{1}), Error);

  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    auto frag = testing::random_bytes(rng, 2 + rng() % 300);
    for (auto& b : frag) b = std::max<std::uint8_t>(b, 1);
    const auto st = basic_stats(frag);
    CHECK(st[6] <= st[5] + 1e-9);
    CHECK(st[5] <= st[0] + 1e-9);
    CHECK(st[1] == Approx(sample_std(as_doubles(frag))).epsilon(1e-9));
  }
}

TEST_CASE("higher-order statistics") {
  const auto h = higher_order_stats(Bytes{1, 2, 3, 4});
  CHECK(h[0] == Approx(1.8));
  CHECK(std::abs(h[1]) < 1e-12);
  const auto sym = higher_order_stats(Bytes{10, 20, 20, 50, 80, 80, 90});
  CHECK(std::abs(sym[1]) < 1e-12);
  CHECK(higher_order_stats(filled(8, 4))[0] == 0.0);
  CHECK_THROWS_AS(higher_order_stats(Bytes{1, 2, 3}), Error);

  // Rounded Gaussian bytes, far from the clamp at 0 and 255.
  std::mt19937_64 rng(15);
  const std::size_t n = 60000;
  Bytes g(n);
  std::normal_distribution<double> normal(128.0, 25.0);
  for (auto& b : g) b = static_cast<std::uint8_t>(std::clamp(std::lround(normal(rng)), 0L, 255L));
  const auto hg = higher_order_stats(g);
  const double se_skew = std::sqrt(6.0 / n), se_kurt = std::sqrt(24.0 / n);
  CHECK(std::abs(hg[1]) < 3 * se_skew);
  CHECK(std::abs(hg[0] - 3.0) < 3 * se_kurt + 0.01);  // + rounding to integers
}

TEST_CASE("window statistics") {
  const auto constant = window_stats(filled(1024, 7), 256);
  for (double x : constant) CHECK(x == 0.0);

  Bytes frag;
  for (int w = 0; w < 4; ++w) {
    for (int i = 0; i < 8; ++i) frag.push_back(w % 2 ? 10 : 0);
  }
  const auto s = window_stats(frag, 8);
  CHECK(s[0] == Approx(10));
  CHECK(s[1] == Approx(0));
  CHECK_THROWS_AS(window_stats(filled(767, 0), 256), Error);

  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t w = 4 + rng() % 40, j = 3 + rng() % 10;
    const auto f = testing::random_bytes(rng, w * j + rng() % w);
    std::vector<double> mu, sd;
    for (std::size_t k = 0; k < j; ++k) {
      std::vector<double> part(f.begin() + k * w, f.begin() + (k + 1) * w);
      mu.push_back(std::accumulate(part.begin(), part.end(), 0.0) / w);
      sd.push_back(sample_std(part));
    }
    auto d1 = [](const std::vector<double>& v) {
      double a = 0;
      for (std::size_t i = 0; i + 1 < v.size(); ++i) a += std::abs(v[i + 1] - v[i]);
      return a / (v.size() - 1);
    };
    auto d2 = [](const std::vector<double>& v) {
      double a = 0;
      for (std::size_t i = 0; i + 2 < v.size(); ++i) a += std::abs(std::abs(v[i + 2] - v[i + 1]) - std::abs(v[i + 1] - v[i]));
      return a / (v.size() - 2);
    };
    const double sigma = sample_std(as_doubles(f));
    double dev = 0;
    for (double x : sd) dev += std::abs(x - sigma);
    const auto got = window_stats(f, w);
    CHECK(got[0] == Approx(d1(mu)).epsilon(1e-9));
    CHECK(got[1] == Approx(d2(mu)).epsilon(1e-9));
    CHECK(got[2] == Approx(d1(sd)).epsilon(1e-9));
    CHECK(got[3] == Approx(d2(sd)).epsilon(1e-9));
    CHECK(got[4] == Approx(dev / j).epsilon(1e-9));
  }
}

TEST_CASE("autocorrelation") {
  Bytes alt(1024);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? 255 : 0;
  CHECK(autocorrelation(alt, 1)[0] <= -0.99);
  for (double r : autocorrelation(filled(100, 3), 5)) CHECK(r == 0.0);
  CHECK_THROWS_AS(autocorrelation(filled(5, 0), 5), Error);

  std::mt19937_64 rng(17);
  for (double r : autocorrelation(testing::random_bytes(rng, 4096), 5)) CHECK(std::abs(r) < 0.08);
  for (int trial = 0; trial < 200; ++trial) {
    const auto f = testing::fuzz_fragment(rng, 8, 400);
    for (double r : autocorrelation(f, 5)) CHECK(std::abs(r) <= 1 + 1e-9);
  }
}

TEST_CASE("frequency-domain statistics") {
  std::mt19937_64 rng(18);
  CHECK(frequency_domain_stats(testing::random_bytes(rng, 1024), 4).size() == 12);
  for (double v : frequency_domain_stats(filled(512, 200), 4)) CHECK(v == 0.0);
  CHECK_THROWS_AS(frequency_domain_stats(filled(512, 0), 0), Error);
  CHECK_THROWS_AS(frequency_domain_stats(filled(512, 0), 9), Error);

  // A 40-cycle sinusoid puts its energy in bin 40, inside the first of 4 bands.
  Bytes tone(1024);
  for (std::size_t i = 0; i < tone.size(); ++i) {
    tone[i] = static_cast<std::uint8_t>(std::lround(127.5 + 127 * std::sin(2 * std::numbers::pi * 40 * i / 1024.0)));
  }
  const auto bands = frequency_domain_stats(tone, 4);
  CHECK(bands[0] > bands[3]);
  CHECK(bands[0] > bands[6]);
  CHECK(bands[0] > bands[9]);

  for (int trial = 0; trial < 10; ++trial) {
    const auto f = testing::random_bytes(rng, 16 + rng() % 200);
    const auto want = naive_spectrum(f);
    const auto got = magnitude_spectrum(f);
    REQUIRE(got.size() == want.size());
    for (std::size_t k = 0; k < got.size(); ++k) CHECK(got[k] == Approx(want[k]).epsilon(1e-9));
  }
}

TEST_CASE("binary ratio") {
  CHECK(binary_ratio(filled(10, 0xFF)) == 0.0);
  CHECK(binary_ratio(filled(10, 0x0F)) == 1.0);
  CHECK(binary_ratio(filled(10, 0x00)) == 80.0);
  CHECK(binary_ratio(Bytes{0x01}) == 7.0);
}

TEST_CASE("entropy") {
  CHECK(shannon_entropy(filled(100, 5)) == 0.0);
  CHECK(shannon_entropy(uniform256()) == Approx(8.0));
  std::mt19937_64 rng(19);
  double total = 0.0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) total += shannon_entropy(testing::random_bytes(rng, 4096));
  CHECK(std::abs(total / trials - truncated_uniform_entropy(4096)) < 0.2);
  for (int t = 0; t < 200; ++t) {
    const auto e = entropy_features(testing::fuzz_fragment(rng, 1, 2000));
    CHECK(e[0] >= 0.0);
    CHECK(e[0] <= 8.0);
    CHECK(std::isfinite(e[1]));
  }
  CHECK(truncated_uniform_entropy(1 << 20) <= 8.0);
}
