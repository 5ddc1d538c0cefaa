#include "fragkit/similarity.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "fragkit/error.hpp"
#include "fragkit/features_basic.hpp"

namespace fragkit::similarity {

Placement parse_placement(const std::string& text) {
  if (text == "begin") return Placement::Begin;
  if (text == "end") return Placement::End;
  if (text == "random") return Placement::Random;
  throw parameter_error("representative placement must be begin, end or random, got '" + text + "'");
}

std::string to_string(Placement placement) {
  switch (placement) {
    case Placement::Begin: return "begin";
    case Placement::End: return "end";
    case Placement::Random: return "random";
  }
  return "begin";
}

RepresentativeSet select_representatives(const FragmentArchive& archive, std::size_t count,
                                         Placement placement, std::uint64_t rng_seed) {
  const auto& records = archive.records;
  if (count < 1) throw parameter_error("representative count must be >= 1");
  if (count > records.size()) {
    throw input_error("class " + archive.class_name + " has " + std::to_string(records.size()) +
                      " fragments, cannot take " + std::to_string(count) + " representatives");
  }
  RepresentativeSet reps{archive.class_name, {}, placement};
  reps.fragments.reserve(count);
  switch (placement) {
    case Placement::Begin:
      for (std::size_t i = 0; i < count; ++i) reps.fragments.push_back(records[i].bytes);
      break;
    case Placement::End:
      for (std::size_t i = records.size() - count; i < records.size(); ++i) reps.fragments.push_back(records[i].bytes);
      break;
    case Placement::Random: {
      std::vector<std::size_t> index(records.size()), chosen;
      for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
      std::mt19937_64 rng(rng_seed);
      std::sample(index.begin(), index.end(), std::back_inserter(chosen), count, rng);
      for (auto i : chosen) reps.fragments.push_back(records[i].bytes);
      break;
    }
  }
  return reps;
}

CentroidModel build_centroid(const RepresentativeSet& reps) {
  if (reps.fragments.empty()) throw input_error("centroid model needs at least one representative");
  CentroidModel model;
  model.class_name = reps.class_name;
  std::vector<std::array<double, 256>> bfds;
  bfds.reserve(reps.fragments.size());
  for (const auto& f : reps.fragments) bfds.push_back(features::byte_histogram(f).bfd);
  const auto n = static_cast<double>(bfds.size());
  for (std::size_t i = 0; i < 256; ++i) {
    double sum = 0.0;
    for (const auto& b : bfds) sum += b[i];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& b : bfds) ss += (b[i] - mean) * (b[i] - mean);
    model.mean[i] = mean;
    model.stddev[i] = bfds.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return model;
}

std::vector<double> centroid_features(ByteSpan fragment, std::span<const CentroidModel> models) {
  if (models.empty()) throw parameter_error("centroid features need at least one model");
  const auto bfd = features::byte_histogram(fragment).bfd;
  std::vector<double> out;
  out.reserve(2 * models.size());
  for (const auto& m : models) {
    double dot = 0.0, nf = 0.0, nm = 0.0, maha = 0.0;
    for (std::size_t i = 0; i < 256; ++i) {
      dot += bfd[i] * m.mean[i];
      nf += bfd[i] * bfd[i];
      nm += m.mean[i] * m.mean[i];
      const double d = bfd[i] - m.mean[i];
      maha += d * d / (0.01 + m.stddev[i]);
    }
    out.push_back(nm > 0.0 ? dot / (std::sqrt(nf) * std::sqrt(nm)) : 0.0);
    out.push_back(std::sqrt(maha));
  }
  return out;
}

std::size_t longest_common_substring(ByteSpan a, ByteSpan b) {
  if (a.empty() || b.empty()) return 0;
  // run[j] = length of the common suffix of a[..i] and b[..j].
  std::vector<std::uint32_t> run(b.size() + 1, 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = b.size(); j > 0; --j) {
      run[j] = a[i] == b[j - 1] ? run[j - 1] + 1 : 0;
      best = std::max<std::size_t>(best, run[j]);
    }
  }
  return best;
}

std::size_t longest_common_subsequence(ByteSpan a, ByteSpan b) {
  if (a.empty() || b.empty()) return 0;
  const std::size_t m = a.size();
  const std::size_t words = (m + 63) / 64;
  // match[c][w]: bit i of word w set when a[64w + i] == c.
  std::vector<std::uint64_t> match(256 * words, 0);
  for (std::size_t i = 0; i < m; ++i) match[a[i] * words + i / 64] |= std::uint64_t{1} << (i % 64);

  std::vector<std::uint64_t> v(words, ~std::uint64_t{0});
  for (auto c : b) {
    const std::uint64_t* mc = &match[c * words];
    std::uint64_t carry = 0;
    for (std::size_t w = 0; w < words; ++w) {
      const std::uint64_t u = v[w] & mc[w];
      const std::uint64_t t = v[w] + u;
      const std::uint64_t c1 = t < v[w];
      const std::uint64_t s = t + carry;
      const std::uint64_t c2 = s < t;
      carry = c1 | c2;
      v[w] = s | (v[w] & ~mc[w]);
    }
  }
  std::size_t zeros = 0;
  for (std::size_t w = 0; w < words; ++w) {
    std::uint64_t word = ~v[w];
    if (w + 1 == words && m % 64 != 0) word &= (std::uint64_t{1} << (m % 64)) - 1;
    zeros += static_cast<std::size_t>(std::popcount(word));
  }
  return zeros;
}

std::vector<double> lcs_features(ByteSpan fragment, std::span<const RepresentativeSet> sets) {
  std::vector<double> out;
  out.reserve(2 * sets.size());
  for (const auto& set : sets) {
    if (set.fragments.empty()) throw input_error("representative set for " + set.class_name + " is empty");
    double substring = 0.0, subsequence = 0.0;
    for (const auto& rep : set.fragments) {
      substring += static_cast<double>(longest_common_substring(fragment, rep));
      subsequence += static_cast<double>(longest_common_subsequence(fragment, rep));
    }
    const auto n = static_cast<double>(set.fragments.size());
    out.push_back(substring / n);
    out.push_back(subsequence / n);
  }
  return out;
}

}  // namespace fragkit::similarity
