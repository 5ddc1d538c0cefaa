#include "fragkit/features_advanced.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>

#include <unsupported/Eigen/FFT>

#include "fragkit/error.hpp"

namespace fragkit::features {

namespace {

using Complex = std::complex<double>;

std::vector<std::uint8_t> to_bits(ByteSpan bytes) {
  std::vector<std::uint8_t> bits(bytes.size() * 8);
  for (std::size_t j = 0; j < bits.size(); ++j) bits[j] = static_cast<std::uint8_t>(bit_at(bytes, j));
  return bits;
}

std::vector<std::uint8_t> bits_of(std::uint64_t value, int width) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(width));
  for (int i = 0; i < width; ++i) bits[static_cast<std::size_t>(i)] = (value >> (width - 1 - i)) & 1;
  return bits;
}

}  // namespace

std::vector<double> ngram_features(ByteSpan fragment, std::span<const int> n_values) {
  std::vector<double> out;
  const std::size_t total_bits = fragment.size() * 8;
  for (int n : n_values) {
    if (n < 1 || n > 13) throw parameter_error("n-gram length must lie in [1, 13], got " + std::to_string(n));
    if (total_bits < static_cast<std::size_t>(n)) {
      throw input_error("fragment of " + std::to_string(total_bits) + " bits is shorter than n = " +
                        std::to_string(n));
    }
    const std::size_t patterns = std::size_t{1} << n;
    const std::uint32_t mask = static_cast<std::uint32_t>(patterns - 1);
    std::vector<std::uint64_t> counts(patterns, 0);
    std::uint32_t window = 0;
    for (std::size_t j = 0; j < total_bits; ++j) {
      window = ((window << 1) | static_cast<std::uint32_t>(bit_at(fragment, j))) & mask;
      if (j + 1 >= static_cast<std::size_t>(n)) ++counts[window];
    }
    const auto windows = static_cast<double>(total_bits - static_cast<std::size_t>(n) + 1);
    for (auto c : counts) out.push_back(static_cast<double>(c) / windows);
  }
  return out;
}

const std::vector<BytePattern>& video_pattern_table() {
  static const std::vector<BytePattern> table = {
      {"MKV_A0", {0xA0}},
      {"MKV_A3", {0xA3}},
      {"AVI_30306463", {0x30, 0x30, 0x64, 0x63}},
      {"AVI_30317762", {0x30, 0x31, 0x77, 0x62}},
      {"RMVB_0000", {0x00, 0x00}},
      {"RMVB_0001", {0x00, 0x01}},
      {"OGV_4F676753", {0x4F, 0x67, 0x67, 0x53}},
      {"MP4_419A", {0x41, 0x9A}},
      {"MP4_019E", {0x01, 0x9E}},
      {"MP4_019F", {0x01, 0x9F}},
      {"MP4_419B", {0x41, 0x9B}},
      {"MP4_6742", {0x67, 0x42}},
      {"MP4_419E", {0x41, 0x9E}},
      {"MP4_419F", {0x41, 0x9F}},
      {"MP4_6588", {0x65, 0x88}},
      {"MP4_68CE", {0x68, 0xCE}},
      // The published MP4 list names 0x6588 twice; both slots are kept so the
      // block stays 17 wide.
      {"MP4_6588_b", {0x65, 0x88}},
  };
  return table;
}

const std::vector<BitPattern>& audio_pattern_table() {
  static const std::vector<BitPattern> table = {
      {"MP3", bits_of(0xFFF, 12)},
      {"FLAC", bits_of(0x3FFE, 14)},
  };
  return table;
}

std::size_t count_byte_pattern(ByteSpan fragment, std::span<const std::uint8_t> pattern) {
  const std::size_t lp = pattern.size();
  if (lp == 0 || fragment.size() < lp) return 0;
  if (lp <= 4) {
    // Rolling packed comparison.
    std::uint32_t target = 0, window = 0;
    for (auto b : pattern) target = (target << 8) | b;
    const std::uint32_t mask = lp == 4 ? 0xFFFFFFFFu : ((1u << (8 * lp)) - 1);
    std::size_t count = 0;
    for (std::size_t i = 0; i < fragment.size(); ++i) {
      window = ((window << 8) | fragment[i]) & mask;
      if (i + 1 >= lp && window == target) ++count;
    }
    return count;
  }
  std::size_t count = 0;
  auto it = fragment.begin();
  while ((it = std::search(it, fragment.end(), pattern.begin(), pattern.end())) != fragment.end()) {
    ++count;
    ++it;
  }
  return count;
}

std::size_t count_bit_pattern(ByteSpan fragment, std::span<const std::uint8_t> bits) {
  const std::size_t lp = bits.size();
  const std::size_t total = fragment.size() * 8;
  if (lp == 0 || lp > 63 || total < lp) return 0;
  std::uint64_t target = 0;
  for (auto b : bits) target = (target << 1) | (b & 1u);
  const std::uint64_t mask = (std::uint64_t{1} << lp) - 1;
  std::uint64_t window = 0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < total; ++j) {
    window = ((window << 1) | static_cast<std::uint64_t>(bit_at(fragment, j))) & mask;
    if (j + 1 >= lp && window == target) ++count;
  }
  return count;
}

std::vector<double> video_patterns(ByteSpan fragment) {
  std::vector<double> out;
  for (const auto& p : video_pattern_table()) {
    const std::size_t lp = p.bytes.size();
    if (fragment.size() < lp) {
      out.push_back(0.0);
      continue;
    }
    const auto frq = static_cast<double>(count_byte_pattern(fragment, p.bytes));
    out.push_back(frq / static_cast<double>(fragment.size() - lp + 1) * std::ldexp(1.0, static_cast<int>(8 * lp)));
  }
  return out;
}

std::vector<double> audio_patterns(ByteSpan fragment) {
  const std::size_t total = fragment.size() * 8;
  if (total < 12) throw input_error("audio patterns need at least 12 bits");
  std::vector<double> out;
  for (const auto& p : audio_pattern_table()) {
    const std::size_t lp = p.bits.size();
    if (total < lp) {
      out.push_back(0.0);
      continue;
    }
    const auto frq = static_cast<double>(count_bit_pattern(fragment, p.bits));
    out.push_back(frq / static_cast<double>(total - lp + 1) * std::ldexp(1.0, static_cast<int>(lp)));
  }
  return out;
}

std::size_t lz76_phrase_count(std::span<const std::uint8_t> s) {
  const std::size_t n = s.size();
  if (n == 0) return 0;
  if (n == 1) return 1;
  // Kaspar & Schuster (1987): i scans candidate copy sources, l marks the
  // start of the current phrase, k its matched length so far.
  std::size_t i = 0, k = 1, l = 1, k_max = 1, c = 1;
  for (;;) {
    if (s[i + k - 1] == s[l + k - 1]) {
      ++k;
      if (l + k > n) {
        ++c;
        break;
      }
    } else {
      k_max = std::max(k, k_max);
      ++i;
      if (i == l) {
        ++c;
        l += k_max;
        if (l + 1 > n) break;
        i = 0;
        k = 1;
        k_max = 1;
      } else {
        k = 1;
      }
    }
  }
  return c;
}

double kolmogorov_complexity(ByteSpan fragment) {
  if (fragment.empty()) throw input_error("Kolmogorov complexity needs a non-empty fragment");
  const auto bits = to_bits(fragment);
  const auto n = static_cast<double>(bits.size());
  return static_cast<double>(lz76_phrase_count(bits)) * std::log2(n) / n;
}

std::vector<double> chaotic_features(ByteSpan x, const ChaoticParams& params) {
  if (!(params.ratio > 0.0) || !std::isfinite(params.ratio)) throw parameter_error("ratio factor must be > 0");
  if (params.d_min < 1 || params.d_min > params.d_max) {
    throw parameter_error("embedding dimensions need 1 <= D_min <= D_max");
  }
  const std::size_t len = x.size();
  if (len < params.d_max + 2) {
    throw input_error("chaotic features need L >= D_max + 2 = " +
                      std::to_string(params.d_max + 2) + ", got L = " + std::to_string(len));
  }
  auto dist2 = [&](std::size_t i, std::size_t j, std::size_t dim) {
    std::int64_t s = 0;
    for (std::size_t k = 0; k < dim; ++k) {
      const std::int64_t d = std::int64_t{x[i + k]} - std::int64_t{x[j + k]};
      s += d * d;
    }
    return s;
  };

  std::vector<double> out;
  for (std::size_t dim = params.d_min; dim <= params.d_max; ++dim) {
    const std::size_t count = len - dim + 1;
    if (count < 2) throw input_error("fewer than 2 embedding vectors");
    std::vector<std::size_t> nn(count);
    std::vector<std::int64_t> nn_d2(count, std::numeric_limits<std::int64_t>::max());
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t j = 0; j < count; ++j) {
        if (j == i) continue;
        const auto d2 = dist2(i, j, dim);
        if (d2 < nn_d2[i]) {
          nn_d2[i] = d2;
          nn[i] = j;
        }
      }
    }

    double sum_d = 0.0, sum_d2 = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      sum_d += std::sqrt(static_cast<double>(nn_d2[i]));
      sum_d2 += static_cast<double>(nn_d2[i]);
    }
    const double mean_d = sum_d / static_cast<double>(count);
    const double rms_d = std::sqrt(sum_d2 / static_cast<double>(count));

    // False neighbours: pairs whose (D+1)-extension exists and whose
    // distance is non-zero.
    std::size_t examined = 0, false_pairs = 0;
    double log_sum = 0.0;
    std::size_t log_pairs = 0;
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = nn[i];
      const auto d2 = nn_d2[i];
      if (d2 == 0) continue;
      if (i + dim < len && j + dim < len) {
        const std::int64_t extra = std::int64_t{x[i + dim]} - std::int64_t{x[j + dim]};
        const double grow = std::sqrt(static_cast<double>(d2 + extra * extra) / static_cast<double>(d2));
        ++examined;
        if (grow > params.ratio) ++false_pairs;
      }
      if (i + 1 < count && j + 1 < count) {
        const auto next = dist2(i + 1, j + 1, dim);
        if (next > 0) {
          log_sum += 0.5 * std::log(static_cast<double>(next) / static_cast<double>(d2));
          ++log_pairs;
        }
      }
    }
    out.push_back(examined ? static_cast<double>(false_pairs) / static_cast<double>(examined) : 0.0);
    out.push_back(mean_d);
    out.push_back(rms_d);
    out.push_back(log_pairs ? log_sum / static_cast<double>(log_pairs) : 0.0);
  }
  return out;
}

double bicoherence(ByteSpan fragment) {
  constexpr std::size_t n = kBicoherenceSegment;
  constexpr std::size_t half = n / 2;
  if (fragment.size() < 2 * n) {
    throw input_error("bicoherence needs at least " + std::to_string(2 * n) + " bytes, got " +
                      std::to_string(fragment.size()));
  }
  const std::size_t segments = fragment.size() / n;
  std::vector<Complex> bispec((half + 1) * (half + 1), Complex{});
  std::vector<double> power(half + 1, 0.0);
  Eigen::FFT<double> fft;
  std::vector<double> seg(n);
  std::vector<Complex> spec;
  for (std::size_t s = 0; s < segments; ++s) {
    auto bytes = fragment.subspan(s * n, n);
    const double mean = std::accumulate(bytes.begin(), bytes.end(), 0.0) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) seg[i] = bytes[i] - mean;
    fft.fwd(spec, seg);
    for (std::size_t f = 0; f <= half; ++f) power[f] += std::norm(spec[f]);
    for (std::size_t f1 = 1; f1 <= half; ++f1) {
      for (std::size_t f2 = 1; f2 <= f1 && f1 + f2 <= half; ++f2) {
        bispec[f1 * (half + 1) + f2] += spec[f1] * spec[f2] * std::conj(spec[f1 + f2]);
      }
    }
  }
  const auto k = static_cast<double>(segments);
  const double max_power = *std::max_element(power.begin(), power.end()) / k;
  const double tiny = max_power * 1e-20;
  double total = 0.0;
  std::size_t cells = 0;
  for (std::size_t f1 = 1; f1 <= half; ++f1) {
    for (std::size_t f2 = 1; f2 <= f1 && f1 + f2 <= half; ++f2) {
      ++cells;
      const double p1 = power[f1] / k, p2 = power[f2] / k, p3 = power[f1 + f2] / k;
      if (p1 <= tiny || p2 <= tiny || p3 <= tiny) continue;
      total += std::abs(bispec[f1 * (half + 1) + f2] / k) / std::sqrt(p1 * p2 * p3);
    }
  }
  return cells ? total / static_cast<double>(cells) : 0.0;
}

std::size_t GistParams::output_size() const {
  std::size_t total = 0;
  for (int o : orientations) total += static_cast<std::size_t>(std::max(o, 0));
  return grid * grid * total;
}

void GistParams::validate() const {
  if (row_size < 1) throw parameter_error("GIST image row size must be >= 1");
  if (grid < 1) throw parameter_error("GIST grid size M must be >= 1");
  if (orientations.empty()) throw parameter_error("GIST needs at least one scale");
  for (int o : orientations) {
    if (o < 1) throw parameter_error("GIST orientation counts must be >= 1");
  }
}

namespace {

using Image = std::vector<Complex>;  // row-major, rows x cols

void fft2(Image& img, std::size_t rows, std::size_t cols, bool inverse) {
  Eigen::FFT<double> fft;
  std::vector<Complex> in, out;
  in.resize(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(img.begin() + static_cast<std::ptrdiff_t>(r * cols), cols, in.begin());
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    std::copy_n(out.begin(), cols, img.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  in.resize(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) in[r] = img[r * cols + c];
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    for (std::size_t r = 0; r < rows; ++r) img[r * cols + c] = out[r];
  }
}

double signed_frequency(std::size_t k, std::size_t n) {
  const auto kk = static_cast<double>(k);
  const auto nn = static_cast<double>(n);
  return k < (n + 1) / 2 ? kk / nn : (kk - nn) / nn;
}

}  // namespace

std::vector<double> gist_features(ByteSpan fragment, const GistParams& params) {
  params.validate();
  if (fragment.size() < params.row_size) {
    throw input_error("GIST needs at least one full image row of " + std::to_string(params.row_size) + " bytes");
  }
  const std::size_t cols = params.row_size;
  const std::size_t rows = (fragment.size() + cols - 1) / cols;
  Image spectrum(rows * cols, Complex{});
  for (std::size_t i = 0; i < fragment.size(); ++i) spectrum[i] = fragment[i];
  fft2(spectrum, rows, cols, false);

  // Log-Gabor bank: centre frequency halves per scale, zero response at DC.
  constexpr double kRadialSigma = 0.55;  // sigma / f0 on a log scale (about two octaves)
  const double log_sigma = std::log(kRadialSigma);
  const double pi = std::numbers::pi;

  std::vector<double> out;
  out.reserve(params.output_size());
  Image response(rows * cols);
  for (std::size_t scale = 0; scale < params.orientations.size(); ++scale) {
    const double f0 = 0.25 / std::ldexp(1.0, static_cast<int>(scale));
    const int n_orient = params.orientations[scale];
    const double angular_sigma = pi / n_orient / 1.2;
    for (int o = 0; o < n_orient; ++o) {
      const double theta0 = pi * o / n_orient;
      for (std::size_t r = 0; r < rows; ++r) {
        const double fy = signed_frequency(r, rows);
        for (std::size_t c = 0; c < cols; ++c) {
          const double fx = signed_frequency(c, cols);
          const double radius = std::hypot(fx, fy);
          double gain = 0.0;
          if (radius > 0.0) {
            const double lr = std::log(radius / f0);
            double dtheta = std::atan2(fy, fx) - theta0;
            dtheta = std::remainder(dtheta, 2.0 * pi);
            gain = std::exp(-lr * lr / (2.0 * log_sigma * log_sigma)) *
                   std::exp(-dtheta * dtheta / (2.0 * angular_sigma * angular_sigma));
          }
          response[r * cols + c] = spectrum[r * cols + c] * gain;
        }
      }
      fft2(response, rows, cols, true);
      for (std::size_t gy = 0; gy < params.grid; ++gy) {
        const std::size_t r0 = gy * rows / params.grid, r1 = (gy + 1) * rows / params.grid;
        for (std::size_t gx = 0; gx < params.grid; ++gx) {
          const std::size_t c0 = gx * cols / params.grid, c1 = (gx + 1) * cols / params.grid;
          double sum = 0.0;
          for (std::size_t r = r0; r < r1; ++r) {
            for (std::size_t c = c0; c < c1; ++c) sum += std::abs(response[r * cols + c]);
          }
          const std::size_t cells = (r1 - r0) * (c1 - c0);
          out.push_back(cells ? sum / static_cast<double>(cells) : 0.0);
        }
      }
    }
  }
  return out;
}

}  // namespace fragkit::features
