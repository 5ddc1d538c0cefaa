#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fragkit/binary_io.hpp"
#include "fragkit/fragstore.hpp"

namespace fragkit::similarity {

using ByteSpan = std::span<const std::uint8_t>;

enum class Placement { Begin, End, Random };

Placement parse_placement(const std::string& text);
std::string to_string(Placement placement);

/// Fragments of one class used as anchors for similarity features.
struct RepresentativeSet {
  std::string class_name;
  std::vector<Bytes> fragments;
  Placement placement = Placement::Begin;

  std::size_t count() const { return fragments.size(); }
};

/// Per-byte-value mean and STD of the representatives' BFD vectors.
struct CentroidModel {
  std::string class_name;
  std::array<double, 256> mean{};
  std::array<double, 256> stddev{};
};

/// begin: first `count` records; end: last `count`; random: seeded sample
/// without replacement (archive order kept).
RepresentativeSet select_representatives(const FragmentArchive& archive, std::size_t count,
                                         Placement placement, std::uint64_t rng_seed);

CentroidModel build_centroid(const RepresentativeSet& reps);

/// Cosine similarity and damped Mahalanobis distance of the fragment's BFD to
/// each model (2 values per model).
std::vector<double> centroid_features(ByteSpan fragment, std::span<const CentroidModel> models);

/// Length of the longest common contiguous run of bytes.
std::size_t longest_common_substring(ByteSpan a, ByteSpan b);

/// Length of the longest common subsequence (bit-parallel row update).
std::size_t longest_common_subsequence(ByteSpan a, ByteSpan b);

/// Per set: mean longest-common-substring length and mean
/// longest-common-subsequence length against its representatives.
std::vector<double> lcs_features(ByteSpan fragment, std::span<const RepresentativeSet> sets);

}  // namespace fragkit::similarity
