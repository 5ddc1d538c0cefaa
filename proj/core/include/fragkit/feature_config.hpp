#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fragkit/features_advanced.hpp"
#include "fragkit/features_basic.hpp"
#include "fragkit/fragstore.hpp"
#include "fragkit/similarity.hpp"

namespace fragkit {

/// The 22 feature categories.
enum class FeatureKind {
  Bfd,
  RateOfChange,
  LongestStreak,
  NGram,
  ByteConcentration,
  BasicStats,
  HigherOrderStats,
  Bicoherence,
  WindowStats,
  Autocorrelation,
  FrequencyDomain,
  BinaryRatio,
  Entropy,
  VideoPatterns,
  AudioPatterns,
  Kolmogorov,
  FalseNeighbors,
  Lyapunov,
  Gist,
  LcSubsequence,
  LcSubstring,
  Centroid,
};

std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view name);
const std::vector<FeatureKind>& all_feature_kinds();

/// One feature category plus the parameters it uses. Fields not used by
/// `kind` are ignored.
struct FeatureSpec {
  FeatureKind kind = FeatureKind::Bfd;
  std::vector<int> n_values{2};                   // NGram
  std::size_t window = 256;                       // WindowStats
  std::size_t max_lag = 5;                        // Autocorrelation
  std::size_t bands = 4;                          // FrequencyDomain
  features::ChaoticParams chaotic;                // FalseNeighbors, Lyapunov
  features::GistParams gist;                      // Gist
  std::vector<similarity::RepresentativeSet> representatives;  // LcSubsequence, LcSubstring
  std::vector<similarity::CentroidModel> centroids;            // Centroid

  void validate() const;
  std::size_t dimension() const;
  std::vector<std::string> descriptors() const;
};

class FeatureConfig {
 public:
  FeatureConfig() = default;
  explicit FeatureConfig(std::vector<FeatureSpec> specs);

  const std::vector<FeatureSpec>& specs() const { return specs_; }
  bool empty() const { return specs_.empty(); }
  std::size_t dimension() const;
  std::vector<std::string> descriptors() const;

  /// Feature vector of one fragment, in descriptor order.
  std::vector<double> extract(std::span<const std::uint8_t> fragment) const;

  /// Self-contained form, centroid and representative payloads included.
  nlohmann::json to_json() const;

  /// Accepts the stored form and the request form. Request form entries for
  /// similarity categories name classes
  ///   {"kind": "centroid", "representatives": [{"class": "PDF", "count": 10,
  ///    "placement": "random", "seed": 7}]}
  /// which are resolved against `archives` (matched by class name or its
  /// identifier-safe form).
  static FeatureConfig from_json(const nlohmann::json& j, std::span<const FragmentArchive> archives = {});

 private:
  std::vector<FeatureSpec> specs_;
};

/// BFD, RoC, streak, 2/3-grams, concentration, basic and higher statistics,
/// 256-byte windows, 5 autocorrelation lags, 4 sub-bands, entropy: 566 columns.
FeatureConfig text_fragment_config();

/// Replaces characters outside [A-Za-z0-9_] with '_' and prefixes a leading
/// digit (or an empty name) with "C_".
std::string identifier_safe(std::string_view name);

/// identifier_safe() applied to each name, then numeric suffixes (_2, _3, ...)
/// on collisions.
std::vector<std::string> unique_identifiers(std::span<const std::string> names);

}  // namespace fragkit
