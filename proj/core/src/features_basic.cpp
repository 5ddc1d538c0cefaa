#include "fragkit/features_basic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numeric>

#include <unsupported/Eigen/FFT>

#include "fragkit/error.hpp"

namespace fragkit::features {

namespace {

void require_length(ByteSpan fragment, std::size_t min_len, const char* what) {
  if (fragment.size() < min_len) {
    throw input_error(std::string(what) + " needs a fragment of at least " + std::to_string(min_len) +
                      " bytes, got " + std::to_string(fragment.size()));
  }
}

double mean_of(ByteSpan x) {
  double s = 0.0;
  for (auto v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Sample STD with the (n-1) denominator; 0 for a single value.
double sample_std(ByteSpan x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double ss = 0.0;
  for (auto v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

// Population mean, variance, skewness; skewness is 0 when variance vanishes.
std::array<double, 3> moments(std::span<const double> v) {
  const auto n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    const double d = x - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  const double scale = std::max(std::abs(m), 1.0);
  const double skew = m2 > 1e-24 * scale * scale ? m3 / std::pow(m2, 1.5) : 0.0;
  return {m, m2, skew};
}

}  // namespace

ByteHistogram byte_histogram(ByteSpan fragment) {
  require_length(fragment, 1, "byte histogram");
  ByteHistogram h;
  for (auto b : fragment) ++h.counts[b];
  const auto len = static_cast<double>(fragment.size());
  const double expected = len / 256.0;
  for (std::size_t i = 0; i < 256; ++i) {
    const auto f = static_cast<double>(h.counts[i]);
    h.probability[i] = f / len;
    h.bfd[i] = h.probability[i] * 256.0;
    h.chi_statistic += (f - expected) * (f - expected) / expected;
  }
  return h;
}

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw parameter_error("incomplete gamma needs a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  constexpr double kEps = 1e-16;
  constexpr int kMaxIter = 100000;
  const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    // P(a,x) = e^-x x^a / Gamma(a+1) * sum x^n / ((a+1)...(a+n))
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int n = 0; n < kMaxIter; ++n) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * kEps) break;
    }
    const double p = sum * std::exp(log_prefix);
    return std::clamp(1.0 - p, 0.0, 1.0);
  }
  // Modified Lentz evaluation of the continued fraction for Q.
  constexpr double kTiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::clamp(std::exp(log_prefix) * h, 0.0, 1.0);
}

double chi_square_upper_tail(double statistic, double dof) {
  return regularized_gamma_q(dof / 2.0, std::max(statistic, 0.0) / 2.0);
}

std::vector<double> bfd_features(ByteSpan fragment) {
  const auto h = byte_histogram(fragment);
  std::vector<double> out(h.bfd.begin(), h.bfd.end());

  const double mean = 1.0;  // the BFD values always sum to 256
  double ss = 0.0;
  for (double v : h.bfd) ss += (v - mean) * (v - mean);
  const double sd_freq = std::sqrt(ss / 256.0);

  std::array<double, 256> sorted = h.bfd;
  std::partial_sort(sorted.begin(), sorted.begin() + 4, sorted.end(), std::greater<>());
  const double modes_freq = sorted[0] + sorted[1] + sorted[2] + sorted[3];

  const double cor_next = pearson(std::span(h.bfd).first(255), std::span(h.bfd).subspan(1));

  out.push_back(sd_freq);
  out.push_back(modes_freq);
  out.push_back(cor_next);
  out.push_back(chi_square_upper_tail(h.chi_statistic, 255.0));
  return out;
}

std::array<double, 256> roc_frequencies(ByteSpan fragment) {
  require_length(fragment, 2, "rate of change");
  std::array<double, 256> y{};
  for (std::size_t i = 0; i + 1 < fragment.size(); ++i) {
    y[static_cast<std::size_t>(std::abs(int{fragment[i]} - int{fragment[i + 1]}))] += 1.0;
  }
  const auto pairs = static_cast<double>(fragment.size() - 1);
  for (auto& v : y) v /= pairs;
  return y;
}

std::vector<double> roc_features(ByteSpan fragment) {
  const auto y = roc_frequencies(fragment);
  std::vector<double> out(257);
  double mean_roc = 0.0;
  out[0] = 256.0 * y[0];
  for (std::size_t j = 1; j < 256; ++j) {
    out[j] = (256.0 * 256.0) / (2.0 * static_cast<double>(256 - j)) * y[j];
    mean_roc += static_cast<double>(j) * y[j];
  }
  out[256] = mean_roc;
  return out;
}

double longest_streak(ByteSpan fragment) {
  require_length(fragment, 1, "longest streak");
  std::size_t best = 1, run = 1;
  for (std::size_t i = 1; i < fragment.size(); ++i) {
    run = fragment[i] == fragment[i - 1] ? run + 1 : 1;
    best = std::max(best, run);
  }
  return static_cast<double>(best) / static_cast<double>(fragment.size());
}

std::array<double, 3> byte_concentration(ByteSpan fragment) {
  const auto h = byte_histogram(fragment);
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 32; ++i) out[0] += h.bfd[i];
  for (std::size_t i = 32; i < 128; ++i) out[1] += h.bfd[i];
  for (std::size_t i = 192; i < 256; ++i) out[2] += h.bfd[i];
  return out;
}

std::array<double, 7> basic_stats(ByteSpan fragment) {
  require_length(fragment, 2, "basic statistics");
  const auto n = static_cast<double>(fragment.size());
  const double mu_a = mean_of(fragment);
  const double sigma = sample_std(fragment);

  std::array<std::size_t, 256> counts{};
  for (auto b : fragment) ++counts[b];
  // max_element returns the first maximum, i.e. the smallest byte value on ties.
  const auto mode = static_cast<double>(std::max_element(counts.begin(), counts.end()) - counts.begin());

  // Median from the counting sort.
  auto nth = [&](std::size_t k) {
    std::size_t seen = 0;
    for (std::size_t v = 0; v < 256; ++v) {
      seen += counts[v];
      if (seen > k) return static_cast<double>(v);
    }
    return 255.0;
  };
  const auto len = fragment.size();
  const double median = len % 2 == 1 ? nth(len / 2) : 0.5 * (nth(len / 2 - 1) + nth(len / 2));

  double mad = 0.0;
  for (auto v : fragment) mad += std::abs(v - mu_a);
  mad /= n;

  double mu_g = 0.0, mu_h = 0.0;
  if (counts[0] == 0) {
    double log_sum = 0.0, inv_sum = 0.0;
    for (auto v : fragment) {
      log_sum += std::log(static_cast<double>(v));
      inv_sum += 1.0 / static_cast<double>(v);
    }
    mu_g = std::exp(log_sum / n);
    mu_h = n / inv_sum;
  }
  return {mu_a, sigma, mode, median, mad, mu_g, mu_h};
}

std::array<double, 2> higher_order_stats(ByteSpan fragment) {
  require_length(fragment, 4, "higher-order statistics");
  const auto n = static_cast<double>(fragment.size());
  const double mu = mean_of(fragment);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (auto v : fragment) {
    const double d = v - mu;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 <= 0.0) return {0.0, 0.0};
  const double k = m4 / (m2 * m2);
  const double s = m3 / std::pow(m2, 1.5);
  const double kurtosis = (n - 1.0) / ((n - 2.0) * (n - 3.0)) * ((n + 1.0) * k - 3.0 * (n - 1.0)) + 3.0;
  const double skewness = std::sqrt(n * (n - 1.0)) / (n - 2.0) * s;
  return {kurtosis, skewness};
}

std::array<double, 5> window_stats(ByteSpan fragment, std::size_t window) {
  if (window < 1) throw parameter_error("window size must be >= 1");
  const std::size_t windows = fragment.size() / window;
  if (windows < 3) {
    throw input_error("window statistics need at least 3 windows (L >= 3*W = " +
                      std::to_string(3 * window) + " bytes), got L = " + std::to_string(fragment.size()));
  }
  std::vector<double> mu(windows), sd(windows);
  for (std::size_t j = 0; j < windows; ++j) {
    auto w = fragment.subspan(j * window, window);
    mu[j] = mean_of(w);
    sd[j] = sample_std(w);
  }
  auto delta = [](const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t j = 0; j + 1 < v.size(); ++j) s += std::abs(v[j + 1] - v[j]);
    return s / static_cast<double>(v.size() - 1);
  };
  auto delta2 = [](const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t j = 0; j + 2 < v.size(); ++j) {
      s += std::abs(std::abs(v[j + 2] - v[j + 1]) - std::abs(v[j + 1] - v[j]));
    }
    return s / static_cast<double>(v.size() - 2);
  };
  const double sigma = sample_std(fragment);
  double dev = 0.0;
  for (double s : sd) dev += std::abs(s - sigma);
  dev /= static_cast<double>(windows);
  return {delta(mu), delta2(mu), delta(sd), delta2(sd), dev};
}

std::vector<double> autocorrelation(ByteSpan fragment, std::size_t max_lag) {
  if (max_lag < 1) throw parameter_error("autocorrelation lag must be >= 1");
  if (max_lag >= fragment.size()) {
    throw input_error("autocorrelation lag " + std::to_string(max_lag) + " needs L > lag, got L = " +
                      std::to_string(fragment.size()));
  }
  const double mu = mean_of(fragment);
  const auto denom = static_cast<double>(fragment.size() - 1);
  auto cov = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t j = 0; j + k < fragment.size(); ++j) s += (fragment[j] - mu) * (fragment[j + k] - mu);
    return s / denom;
  };
  const double c0 = cov(0);
  std::vector<double> r(max_lag, 0.0);
  if (c0 <= 0.0) return r;
  for (std::size_t k = 1; k <= max_lag; ++k) r[k - 1] = cov(k) / c0;
  return r;
}

std::vector<double> magnitude_spectrum(ByteSpan fragment) {
  require_length(fragment, 2, "magnitude spectrum");
  std::vector<double> signal(fragment.begin(), fragment.end());
  std::vector<std::complex<double>> spectrum;
  Eigen::FFT<double> fft;
  fft.fwd(spectrum, signal);
  const std::size_t bins = fragment.size() / 2;
  const double total = std::accumulate(signal.begin(), signal.end(), 0.0);
  // Bins of a constant signal are zero up to round-off; snap those to 0.
  const double floor = 1e-10 * (total + 1.0);
  std::vector<double> mag(bins);
  for (std::size_t k = 1; k <= bins; ++k) {
    const double m = std::abs(spectrum[k]);
    mag[k - 1] = m < floor ? 0.0 : m;
  }
  return mag;
}

std::vector<double> frequency_domain_stats(ByteSpan fragment, std::size_t bands) {
  if (bands < 1 || bands > 8) throw parameter_error("number of sub-bands must lie in [1, 8]");
  require_length(fragment, 2 * bands, "frequency-domain statistics");
  const auto mag = magnitude_spectrum(fragment);
  const std::size_t width = mag.size() / bands;
  std::vector<double> out;
  out.reserve(3 * bands);
  for (std::size_t b = 0; b < bands; ++b) {
    const std::size_t lo = b * width;
    const std::size_t hi = b + 1 == bands ? mag.size() : lo + width;
    const auto m = moments(std::span(mag).subspan(lo, hi - lo));
    out.insert(out.end(), m.begin(), m.end());
  }
  return out;
}

double binary_ratio(ByteSpan fragment) {
  require_length(fragment, 1, "binary ratio");
  std::uint64_t ones = 0;
  for (auto b : fragment) ones += static_cast<std::uint64_t>(std::popcount(b));
  const std::uint64_t bits = 8 * fragment.size();
  if (ones == 0) return static_cast<double>(bits);
  return static_cast<double>(bits - ones) / static_cast<double>(ones);
}

double shannon_entropy(ByteSpan fragment) {
  const auto h = byte_histogram(fragment);
  double e = 0.0;
  for (double p : h.probability) {
    if (p > 0.0) e -= p * std::log2(p);
  }
  return std::clamp(e, 0.0, 8.0);
}

double truncated_uniform_entropy(std::size_t length, std::size_t alphabet) {
  if (length < 1 || alphabet < 1) throw parameter_error("truncated entropy needs L >= 1 and m >= 1");
  const double c = static_cast<double>(length) / static_cast<double>(alphabet);
  const double log_c = std::log(c);
  // sum_{j>=1} Poisson(j-1; c) * log2(j)
  double series = 0.0;
  for (std::size_t j = 1;; ++j) {
    const double k = static_cast<double>(j - 1);
    const double weight = std::exp(-c + k * log_c - std::lgamma(k + 1.0));
    const double term = weight * std::log2(static_cast<double>(j));
    series += term;
    if (k > c && term < 1e-12) break;
    if (j > 10'000'000) break;
  }
  return std::log2(static_cast<double>(alphabet)) + std::log2(c) - series;
}

std::array<double, 2> entropy_features(ByteSpan fragment) {
  const double h = shannon_entropy(fragment);
  return {h, truncated_uniform_entropy(fragment.size()) - h};
}

}  // namespace fragkit::features
