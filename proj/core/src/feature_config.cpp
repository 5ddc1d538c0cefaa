#include "fragkit/feature_config.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <utility>

#include "fragkit/error.hpp"

namespace fragkit {

using nlohmann::json;

namespace {

struct KindName {
  FeatureKind kind;
  std::string_view name;
};

constexpr std::array<KindName, 22> kKindNames = {{
    {FeatureKind::Bfd, "bfd"},
    {FeatureKind::RateOfChange, "roc"},
    {FeatureKind::LongestStreak, "streak"},
    {FeatureKind::NGram, "ngram"},
    {FeatureKind::ByteConcentration, "concentration"},
    {FeatureKind::BasicStats, "basic"},
    {FeatureKind::HigherOrderStats, "higher"},
    {FeatureKind::Bicoherence, "bicoherence"},
    {FeatureKind::WindowStats, "window"},
    {FeatureKind::Autocorrelation, "autocorr"},
    {FeatureKind::FrequencyDomain, "freq"},
    {FeatureKind::BinaryRatio, "bro"},
    {FeatureKind::Entropy, "entropy"},
    {FeatureKind::VideoPatterns, "video"},
    {FeatureKind::AudioPatterns, "audio"},
    {FeatureKind::Kolmogorov, "kolmogorov"},
    {FeatureKind::FalseNeighbors, "fnn"},
    {FeatureKind::Lyapunov, "lyapunov"},
    {FeatureKind::Gist, "gist"},
    {FeatureKind::LcSubsequence, "lcsubsequence"},
    {FeatureKind::LcSubstring, "lcsubstring"},
    {FeatureKind::Centroid, "centroid"},
}};

std::string bits_label(std::size_t value, int width) {
  std::string s(static_cast<std::size_t>(width), '0');
  for (int i = 0; i < width; ++i) {
    if ((value >> (width - 1 - i)) & 1) s[static_cast<std::size_t>(i)] = '1';
  }
  return s;
}

template <typename Named>
std::vector<std::string> class_labels(const std::vector<Named>& items, std::string_view prefix) {
  std::vector<std::string> names;
  for (const auto& it : items) names.push_back(std::string(prefix) + identifier_safe(it.class_name));
  return unique_identifiers(names);
}

const FragmentArchive& find_archive(std::span<const FragmentArchive> archives, const std::string& cls) {
  for (const auto& a : archives) {
    if (a.class_name == cls || identifier_safe(a.class_name) == cls) return a;
  }
  std::string known;
  for (const auto& a : archives) known += (known.empty() ? "" : ", ") + a.class_name;
  throw input_error("representative class '" + cls + "' not among the archives (" + known + ")");
}

std::vector<similarity::RepresentativeSet> resolve_requests(const json& requests,
                                                            std::span<const FragmentArchive> archives) {
  std::vector<similarity::RepresentativeSet> sets;
  for (const auto& r : requests) {
    const auto cls = r.at("class").get<std::string>();
    const auto count = r.value("count", std::size_t{1});
    const auto placement = similarity::parse_placement(r.value("placement", std::string("begin")));
    const auto seed = r.value("seed", std::uint64_t{0});
    sets.push_back(similarity::select_representatives(find_archive(archives, cls), count, placement, seed));
  }
  return sets;
}

}  // namespace

std::string_view to_string(FeatureKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "unknown";
}

FeatureKind parse_feature_kind(std::string_view name) {
  for (const auto& kn : kKindNames) {
    if (kn.name == name) return kn.kind;
  }
  std::string valid;
  for (const auto& kn : kKindNames) valid += (valid.empty() ? "" : ", ") + std::string(kn.name);
  throw parameter_error("unknown feature kind '" + std::string(name) + "' (valid: " + valid + ")");
}

const std::vector<FeatureKind>& all_feature_kinds() {
  static const std::vector<FeatureKind> kinds = [] {
    std::vector<FeatureKind> v;
    for (const auto& kn : kKindNames) v.push_back(kn.kind);
    return v;
  }();
  return kinds;
}

std::string identifier_safe(std::string_view name) {
  std::string out;
  out.reserve(name.size() + 2);
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
    out.push_back(ok ? c : '_');
  }
  if (out.empty() || (out[0] >= '0' && out[0] <= '9')) out = "C_" + out;
  return out;
}

std::vector<std::string> unique_identifiers(std::span<const std::string> names) {
  std::vector<std::string> out;
  std::set<std::string> used;
  for (const auto& n : names) {
    auto base = identifier_safe(n);
    auto candidate = base;
    for (int k = 2; used.count(candidate); ++k) candidate = base + "_" + std::to_string(k);
    used.insert(candidate);
    out.push_back(candidate);
  }
  return out;
}

void FeatureSpec::validate() const {
  switch (kind) {
    case FeatureKind::NGram:
      if (n_values.empty()) throw parameter_error("n-gram feature needs at least one n");
      for (int n : n_values) {
        if (n < 1 || n > 13) throw parameter_error("n-gram length must lie in [1, 13], got " + std::to_string(n));
      }
      if (std::set<int>(n_values.begin(), n_values.end()).size() != n_values.size()) {
        throw parameter_error("n-gram lengths must be distinct");
      }
      break;
    case FeatureKind::WindowStats:
      if (window < 1) throw parameter_error("window size must be >= 1");
      break;
    case FeatureKind::Autocorrelation:
      if (max_lag < 1) throw parameter_error("autocorrelation lag must be >= 1");
      break;
    case FeatureKind::FrequencyDomain:
      if (bands < 1 || bands > 8) throw parameter_error("number of sub-bands must lie in [1, 8]");
      break;
    case FeatureKind::FalseNeighbors:
    case FeatureKind::Lyapunov:
      if (!(chaotic.ratio > 0.0)) throw parameter_error("ratio factor must be > 0");
      if (chaotic.d_min < 1 || chaotic.d_min > chaotic.d_max) {
        throw parameter_error("embedding dimensions need 1 <= D_min <= D_max");
      }
      break;
    case FeatureKind::Gist:
      gist.validate();
      break;
    case FeatureKind::LcSubsequence:
    case FeatureKind::LcSubstring:
      if (representatives.empty()) throw parameter_error("LCS features need at least one representative set");
      for (const auto& s : representatives) {
        if (s.fragments.empty()) throw parameter_error("representative set for " + s.class_name + " is empty");
      }
      break;
    case FeatureKind::Centroid:
      if (centroids.empty()) throw parameter_error("centroid features need at least one model");
      break;
    default:
      break;
  }
}

std::size_t FeatureSpec::dimension() const {
  switch (kind) {
    case FeatureKind::Bfd: return 260;
    case FeatureKind::RateOfChange: return 257;
    case FeatureKind::LongestStreak: return 1;
    case FeatureKind::NGram: {
      std::size_t d = 0;
      for (int n : n_values) d += std::size_t{1} << n;
      return d;
    }
    case FeatureKind::ByteConcentration: return 3;
    case FeatureKind::BasicStats: return 7;
    case FeatureKind::HigherOrderStats: return 2;
    case FeatureKind::Bicoherence: return 1;
    case FeatureKind::WindowStats: return 5;
    case FeatureKind::Autocorrelation: return max_lag;
    case FeatureKind::FrequencyDomain: return 3 * bands;
    case FeatureKind::BinaryRatio: return 1;
    case FeatureKind::Entropy: return 2;
    case FeatureKind::VideoPatterns: return features::video_pattern_table().size();
    case FeatureKind::AudioPatterns: return features::audio_pattern_table().size();
    case FeatureKind::Kolmogorov: return 1;
    case FeatureKind::FalseNeighbors: return 3 * (chaotic.d_max - chaotic.d_min + 1);
    case FeatureKind::Lyapunov: return chaotic.d_max - chaotic.d_min + 1;
    case FeatureKind::Gist: return gist.output_size();
    case FeatureKind::LcSubsequence:
    case FeatureKind::LcSubstring: return representatives.size();
    case FeatureKind::Centroid: return 2 * centroids.size();
  }
  return 0;
}

std::vector<std::string> FeatureSpec::descriptors() const {
  std::vector<std::string> d;
  auto indexed = [&](std::string_view prefix, std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i) d.push_back(std::string(prefix) + std::to_string(i));
  };
  switch (kind) {
    case FeatureKind::Bfd:
      indexed("BFD_", 0, 256);
      d.insert(d.end(), {"SdFreq", "ModesFreq", "CorNextFreq", "ChiSq"});
      break;
    case FeatureKind::RateOfChange:
      indexed("RoC_", 0, 256);
      d.push_back("MeanRoC");
      break;
    case FeatureKind::LongestStreak: d.push_back("LongestStreak"); break;
    case FeatureKind::NGram:
      for (int n : n_values) {
        for (std::size_t p = 0; p < (std::size_t{1} << n); ++p) {
          d.push_back("NGram" + std::to_string(n) + "_" + bits_label(p, n));
        }
      }
      break;
    case FeatureKind::ByteConcentration: d.insert(d.end(), {"Low", "ASCII", "High"}); break;
    case FeatureKind::BasicStats:
      d.insert(d.end(), {"Mean", "STD", "Mode", "Median", "MAD", "GeometricMean", "HarmonicMean"});
      break;
    case FeatureKind::HigherOrderStats: d.insert(d.end(), {"Kurtosis", "Skewness"}); break;
    case FeatureKind::Bicoherence: d.push_back("Bicoherence"); break;
    case FeatureKind::WindowStats:
      d.insert(d.end(), {"DeltaMean", "DeltaDeltaMean", "DeltaSTD", "DeltaDeltaSTD", "DeviationSTD"});
      break;
    case FeatureKind::Autocorrelation: indexed("AutoCorr_", 1, max_lag + 1); break;
    case FeatureKind::FrequencyDomain:
      for (std::size_t b = 1; b <= bands; ++b) {
        const auto tag = "_band" + std::to_string(b);
        d.insert(d.end(), {"Mean" + tag, "Variance" + tag, "Skewness" + tag});
      }
      break;
    case FeatureKind::BinaryRatio: d.push_back("BinaryRatio"); break;
    case FeatureKind::Entropy: d.insert(d.end(), {"Entropy", "TruncatedEntropyDiff"}); break;
    case FeatureKind::VideoPatterns:
      for (const auto& p : features::video_pattern_table()) d.push_back("Video_" + p.name);
      break;
    case FeatureKind::AudioPatterns:
      for (const auto& p : features::audio_pattern_table()) d.push_back("Audio_" + p.name);
      break;
    case FeatureKind::Kolmogorov: d.push_back("Kolmogorov"); break;
    case FeatureKind::FalseNeighbors:
      for (auto dim = chaotic.d_min; dim <= chaotic.d_max; ++dim) {
        const auto tag = "_D" + std::to_string(dim);
        d.insert(d.end(), {"FNF" + tag, "NeighborMean" + tag, "NeighborRMS" + tag});
      }
      break;
    case FeatureKind::Lyapunov:
      for (auto dim = chaotic.d_min; dim <= chaotic.d_max; ++dim) d.push_back("Lyapunov_D" + std::to_string(dim));
      break;
    case FeatureKind::Gist:
      for (std::size_t s = 0; s < gist.orientations.size(); ++s) {
        for (int o = 0; o < gist.orientations[s]; ++o) {
          for (std::size_t c = 0; c < gist.grid * gist.grid; ++c) {
            d.push_back("GIST_s" + std::to_string(s + 1) + "_o" + std::to_string(o + 1) + "_c" + std::to_string(c + 1));
          }
        }
      }
      break;
    case FeatureKind::LcSubsequence: d = class_labels(representatives, "LCSubsequence_"); break;
    case FeatureKind::LcSubstring: d = class_labels(representatives, "LCSubstring_"); break;
    case FeatureKind::Centroid: {
      auto labels = class_labels(centroids, "");
      for (const auto& l : labels) d.insert(d.end(), {"CosineSimilarity_" + l, "Mahalanobis_" + l});
      break;
    }
  }
  return d;
}

FeatureConfig::FeatureConfig(std::vector<FeatureSpec> specs) : specs_(std::move(specs)) {
  for (const auto& s : specs_) s.validate();
  auto names = descriptors();
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) throw parameter_error("feature configuration yields duplicate column " + n);
  }
}

std::size_t FeatureConfig::dimension() const {
  std::size_t d = 0;
  for (const auto& s : specs_) d += s.dimension();
  return d;
}

std::vector<std::string> FeatureConfig::descriptors() const {
  std::vector<std::string> d;
  for (const auto& s : specs_) {
    auto part = s.descriptors();
    d.insert(d.end(), part.begin(), part.end());
  }
  return d;
}

std::vector<double> FeatureConfig::extract(std::span<const std::uint8_t> x) const {
  namespace ft = features;
  std::vector<double> out;
  out.reserve(dimension());
  auto append = [&out](const auto& values) { out.insert(out.end(), values.begin(), values.end()); };

  // FalseNeighbors and Lyapunov share one neighbour search when their
  // parameters agree.
  std::optional<std::pair<ft::ChaoticParams, std::vector<double>>> chaotic_cache;
  auto chaotic = [&](const ft::ChaoticParams& p) -> const std::vector<double>& {
    if (!chaotic_cache || chaotic_cache->first.ratio != p.ratio || chaotic_cache->first.d_min != p.d_min ||
        chaotic_cache->first.d_max != p.d_max) {
      chaotic_cache.emplace(p, ft::chaotic_features(x, p));
    }
    return chaotic_cache->second;
  };

  for (const auto& s : specs_) {
    switch (s.kind) {
      case FeatureKind::Bfd: append(ft::bfd_features(x)); break;
      case FeatureKind::RateOfChange: append(ft::roc_features(x)); break;
      case FeatureKind::LongestStreak: out.push_back(ft::longest_streak(x)); break;
      case FeatureKind::NGram: append(ft::ngram_features(x, s.n_values)); break;
      case FeatureKind::ByteConcentration: append(ft::byte_concentration(x)); break;
      case FeatureKind::BasicStats: append(ft::basic_stats(x)); break;
      case FeatureKind::HigherOrderStats: append(ft::higher_order_stats(x)); break;
      case FeatureKind::Bicoherence: out.push_back(ft::bicoherence(x)); break;
      case FeatureKind::WindowStats: append(ft::window_stats(x, s.window)); break;
      case FeatureKind::Autocorrelation: append(ft::autocorrelation(x, s.max_lag)); break;
      case FeatureKind::FrequencyDomain: append(ft::frequency_domain_stats(x, s.bands)); break;
      case FeatureKind::BinaryRatio: out.push_back(ft::binary_ratio(x)); break;
      case FeatureKind::Entropy: append(ft::entropy_features(x)); break;
      case FeatureKind::VideoPatterns: append(ft::video_patterns(x)); break;
      case FeatureKind::AudioPatterns: append(ft::audio_patterns(x)); break;
      case FeatureKind::Kolmogorov: out.push_back(ft::kolmogorov_complexity(x)); break;
      case FeatureKind::FalseNeighbors: {
        const auto& c = chaotic(s.chaotic);
        for (std::size_t i = 0; i < c.size(); i += 4) out.insert(out.end(), c.begin() + i, c.begin() + i + 3);
        break;
      }
      case FeatureKind::Lyapunov: {
        const auto& c = chaotic(s.chaotic);
        for (std::size_t i = 3; i < c.size(); i += 4) out.push_back(c[i]);
        break;
      }
      case FeatureKind::Gist: append(ft::gist_features(x, s.gist)); break;
      case FeatureKind::LcSubsequence:
      case FeatureKind::LcSubstring:
        for (const auto& set : s.representatives) {
          double total = 0.0;
          for (const auto& rep : set.fragments) {
            total += static_cast<double>(s.kind == FeatureKind::LcSubstring
                                             ? similarity::longest_common_substring(x, rep)
                                             : similarity::longest_common_subsequence(x, rep));
          }
          out.push_back(total / static_cast<double>(set.fragments.size()));
        }
        break;
      case FeatureKind::Centroid: append(similarity::centroid_features(x, s.centroids)); break;
    }
  }
  return out;
}

json FeatureConfig::to_json() const {
  json features = json::array();
  for (const auto& s : specs_) {
    json j{{"kind", to_string(s.kind)}};
    switch (s.kind) {
      case FeatureKind::NGram: j["n"] = s.n_values; break;
      case FeatureKind::WindowStats: j["size"] = s.window; break;
      case FeatureKind::Autocorrelation: j["max_lag"] = s.max_lag; break;
      case FeatureKind::FrequencyDomain: j["bands"] = s.bands; break;
      case FeatureKind::FalseNeighbors:
      case FeatureKind::Lyapunov:
        j["ratio"] = s.chaotic.ratio;
        j["d_min"] = s.chaotic.d_min;
        j["d_max"] = s.chaotic.d_max;
        break;
      case FeatureKind::Gist:
        j["row_size"] = s.gist.row_size;
        j["grid"] = s.gist.grid;
        j["orientations"] = s.gist.orientations;
        break;
      case FeatureKind::LcSubsequence:
      case FeatureKind::LcSubstring: {
        json sets = json::array();
        for (const auto& set : s.representatives) {
          json frags = json::array();
          for (const auto& f : set.fragments) frags.push_back(to_hex(f));
          sets.push_back({{"class", set.class_name},
                          {"placement", similarity::to_string(set.placement)},
                          {"fragments", frags}});
        }
        j["sets"] = sets;
        break;
      }
      case FeatureKind::Centroid: {
        json models = json::array();
        for (const auto& m : s.centroids) {
          models.push_back({{"class", m.class_name}, {"mean", m.mean}, {"stddev", m.stddev}});
        }
        j["models"] = models;
        break;
      }
      default:
        break;
    }
    features.push_back(std::move(j));
  }
  return json{{"features", features}};
}

FeatureConfig FeatureConfig::from_json(const json& root, std::span<const FragmentArchive> archives) {
  try {
    const json& list = root.is_array() ? root : root.at("features");
    std::vector<FeatureSpec> specs;
    for (const auto& j : list) {
      FeatureSpec s;
      s.kind = parse_feature_kind(j.at("kind").get<std::string>());
      switch (s.kind) {
        case FeatureKind::NGram: s.n_values = j.value("n", std::vector<int>{2}); break;
        case FeatureKind::WindowStats: s.window = j.value("size", std::size_t{256}); break;
        case FeatureKind::Autocorrelation: s.max_lag = j.value("max_lag", std::size_t{5}); break;
        case FeatureKind::FrequencyDomain: s.bands = j.value("bands", std::size_t{4}); break;
        case FeatureKind::FalseNeighbors:
        case FeatureKind::Lyapunov:
          s.chaotic.ratio = j.value("ratio", 10.0);
          s.chaotic.d_min = j.value("d_min", std::size_t{1});
          s.chaotic.d_max = j.value("d_max", std::size_t{3});
          break;
        case FeatureKind::Gist:
          s.gist.row_size = j.value("row_size", std::size_t{32});
          s.gist.grid = j.value("grid", std::size_t{4});
          s.gist.orientations = j.value("orientations", std::vector<int>{8, 8, 8, 8});
          break;
        case FeatureKind::LcSubsequence:
        case FeatureKind::LcSubstring:
          if (j.contains("sets")) {
            for (const auto& set : j.at("sets")) {
              similarity::RepresentativeSet rs;
              rs.class_name = set.at("class").get<std::string>();
              rs.placement = similarity::parse_placement(set.value("placement", std::string("begin")));
              for (const auto& f : set.at("fragments")) rs.fragments.push_back(from_hex(f.get<std::string>()));
              s.representatives.push_back(std::move(rs));
            }
          } else {
            s.representatives = resolve_requests(j.at("representatives"), archives);
          }
          break;
        case FeatureKind::Centroid:
          if (j.contains("models")) {
            for (const auto& m : j.at("models")) {
              similarity::CentroidModel cm;
              cm.class_name = m.at("class").get<std::string>();
              cm.mean = m.at("mean").get<std::array<double, 256>>();
              cm.stddev = m.at("stddev").get<std::array<double, 256>>();
              s.centroids.push_back(cm);
            }
          } else {
            for (const auto& set : resolve_requests(j.at("representatives"), archives)) {
              s.centroids.push_back(similarity::build_centroid(set));
            }
          }
          break;
        default:
          break;
      }
      specs.push_back(std::move(s));
    }
    return FeatureConfig(std::move(specs));
  } catch (const json::exception& e) {
    throw format_error(std::string("malformed feature configuration: ") + e.what());
  }
}

FeatureConfig text_fragment_config() {
  std::vector<FeatureSpec> specs;
  auto add = [&](FeatureKind k) -> FeatureSpec& {
    specs.push_back(FeatureSpec{});
    specs.back().kind = k;
    return specs.back();
  };
  add(FeatureKind::Bfd);
  add(FeatureKind::RateOfChange);
  add(FeatureKind::LongestStreak);
  add(FeatureKind::NGram).n_values = {2, 3};
  add(FeatureKind::ByteConcentration);
  add(FeatureKind::BasicStats);
  add(FeatureKind::HigherOrderStats);
  add(FeatureKind::WindowStats).window = 256;
  add(FeatureKind::Autocorrelation).max_lag = 5;
  add(FeatureKind::FrequencyDomain).bands = 4;
  add(FeatureKind::Entropy);
  return FeatureConfig(std::move(specs));
}

}  // namespace fragkit
