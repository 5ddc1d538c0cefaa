#pragma once

// Bit/byte pattern rates, complexity, chaotic, bispectral and texture features.
// Bitstreams are most-significant-bit first within each byte.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fragkit/features_basic.hpp"

namespace fragkit::features {

/// Bit j (0-based) of the MSB-first bitstream of `bytes`.
inline int bit_at(ByteSpan bytes, std::size_t j) { return (bytes[j / 8] >> (7 - j % 8)) & 1; }

/// Normalized overlapping counts of every n-bit pattern, for each n in
/// n_values (each 1..13), patterns in ascending numeric order.
std::vector<double> ngram_features(ByteSpan fragment, std::span<const int> n_values);

struct BytePattern {
  std::string name;  // identifier-safe label, e.g. "OGV_4F676753"
  std::vector<std::uint8_t> bytes;
};

struct BitPattern {
  std::string name;
  std::vector<std::uint8_t> bits;  // 0/1 values
};

/// The 17 video-container byte patterns, in output order.
const std::vector<BytePattern>& video_pattern_table();
/// MP3 and FLAC frame sync words.
const std::vector<BitPattern>& audio_pattern_table();

/// Overlapping occurrence count of `pattern` in `fragment`.
std::size_t count_byte_pattern(ByteSpan fragment, std::span<const std::uint8_t> pattern);
/// Overlapping occurrence count of a 0/1 pattern in the bitstream.
std::size_t count_bit_pattern(ByteSpan fragment, std::span<const std::uint8_t> bits);

/// frq / (L - l_p + 1) * 2^(8 l_p) per video pattern (17 values).
std::vector<double> video_patterns(ByteSpan fragment);
/// frq / (8L - l_p + 1) * 2^l_p per audio sync word (2 values).
std::vector<double> audio_patterns(ByteSpan fragment);

/// Lempel-Ziv (1976) production complexity c(n) by the Kaspar-Schuster scan.
std::size_t lz76_phrase_count(std::span<const std::uint8_t> symbols);

/// c(n) log2(n) / n over the 8L-bit stream.
double kolmogorov_complexity(ByteSpan fragment);

struct ChaoticParams {
  double ratio = 10.0;
  std::size_t d_min = 1;
  std::size_t d_max = 3;
};

/// Per embedding dimension D in [d_min, d_max]: false-neighbor fraction,
/// mean and RMS nearest-neighbor distance, and the Lyapunov estimate
/// (4 values per D, grouped by D).
std::vector<double> chaotic_features(ByteSpan fragment, const ChaoticParams& params);

inline constexpr std::size_t kBicoherenceSegment = 128;

/// Mean bicoherence magnitude over the principal region, from 128-sample
/// segments with the segment mean removed. Requires L >= 256.
double bicoherence(ByteSpan fragment);

struct GistParams {
  std::size_t row_size = 32;
  std::size_t grid = 4;                      // M windows per dimension
  std::vector<int> orientations{8, 8, 8, 8};  // one entry per scale

  std::size_t output_size() const;
  void validate() const;
};

/// Log-Gabor filter-bank energies pooled over an M x M grid, ordered by scale,
/// orientation, then grid cell in row-major order.
std::vector<double> gist_features(ByteSpan fragment, const GistParams& params);

}  // namespace fragkit::features
