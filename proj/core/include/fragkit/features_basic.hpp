#pragma once

// Byte-distribution, statistical, windowed, spectral and entropy features.
// Every function takes the raw fragment bytes and returns finite values only;
// degenerate cases (zero variance and the like) map to 0.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fragkit::features {

using ByteSpan = std::span<const std::uint8_t>;

struct ByteHistogram {
  std::array<std::uint64_t, 256> counts{};
  std::array<double, 256> probability{};
  std::array<double, 256> bfd{};  // probability * 256
  double chi_statistic = 0.0;     // sum (f - L/256)^2 / (L/256)
};

ByteHistogram byte_histogram(ByteSpan fragment);

/// Regularized upper incomplete gamma Q(a, x), series below x < a + 1 and a
/// Lentz continued fraction above.
double regularized_gamma_q(double a, double x);

/// Upper-tail chi-square p-value with `dof` degrees of freedom.
double chi_square_upper_tail(double statistic, double dof);

/// BFD_0..BFD_255, SdFreq, ModesFreq, CorNextFreq, ChiSq (260 values).
std::vector<double> bfd_features(ByteSpan fragment);

/// Normalized rate-of-change histogram y_hat_0..y_hat_255 then the mean
/// absolute consecutive difference (257 values). Requires L >= 2.
std::vector<double> roc_features(ByteSpan fragment);

/// Raw y_j: share of consecutive pairs with |x_i - x_{i+1}| = j.
std::array<double, 256> roc_frequencies(ByteSpan fragment);

/// Longest run of one repeated byte value divided by L.
double longest_streak(ByteSpan fragment);

/// Low [0,32), ASCII [32,128), High [192,256) sums of BFD values.
std::array<double, 3> byte_concentration(ByteSpan fragment);

/// Arithmetic mean, STD (L-1), mode, median, MAD, geometric mean, harmonic
/// mean. Requires L >= 2.
std::array<double, 7> basic_stats(ByteSpan fragment);

/// Bias-corrected kurtosis and skewness. Requires L >= 4.
std::array<double, 2> higher_order_stats(ByteSpan fragment);

/// Delta mean, delta-delta mean, delta STD, delta-delta STD and deviation
/// from the whole-fragment STD over floor(L/W) non-overlapping windows.
/// Requires at least 3 windows.
std::array<double, 5> window_stats(ByteSpan fragment, std::size_t window);

/// r_1..r_max_lag. Requires 1 <= max_lag < L.
std::vector<double> autocorrelation(ByteSpan fragment, std::size_t max_lag);

/// One-sided magnitude spectrum without the DC bin (floor(L/2) bins).
std::vector<double> magnitude_spectrum(ByteSpan fragment);

/// Mean, variance, skewness of the magnitude spectrum per sub-band
/// (3 * bands values). bands in [1, 8], L >= 2 * bands.
std::vector<double> frequency_domain_stats(ByteSpan fragment, std::size_t bands);

/// Zero bits over one bits of the MSB-first bitstream; 8L when no bit is set.
double binary_ratio(ByteSpan fragment);

/// Shannon entropy in bits.
double shannon_entropy(ByteSpan fragment);

/// Expected entropy (bits) of L draws from a uniform alphabet of `alphabet`
/// symbols, via the Poisson-weighted truncated series.
double truncated_uniform_entropy(std::size_t length, std::size_t alphabet = 256);

/// Entropy H and truncated-uniform entropy minus H.
std::array<double, 2> entropy_features(ByteSpan fragment);

}  // namespace fragkit::features
