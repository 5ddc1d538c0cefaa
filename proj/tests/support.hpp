#pragma once
// Seeded generators and fixtures shared by the test suites.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "fragkit/binary_io.hpp"
#include "fragkit/dataset.hpp"

namespace fragkit::testing {

inline Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng() & 0xFF);
  return out;
}

/// Bytes drawn from a small alphabet, so repeats and patterns are common.
inline Bytes alphabet_bytes(std::mt19937_64& rng, std::size_t n, std::uint8_t alphabet) {
  Bytes out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng() % alphabet);
  return out;
}

/// Mixed fuzz generator: uniform, constant, sparse, small alphabet, ramps,
/// alternating and text-like fragments of length >= min_len.
inline Bytes fuzz_fragment(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len) {
  const std::size_t n = min_len + rng() % (max_len - min_len + 1);
  Bytes out(n);
  switch (rng() % 8) {
    case 0:
      return random_bytes(rng, n);
    case 1: {
      const auto v = static_cast<std::uint8_t>(rng());
      std::fill(out.begin(), out.end(), v);
      return out;
    }
    case 2:
      for (auto& b : out) b = rng() % 50 == 0 ? static_cast<std::uint8_t>(rng()) : 0;
      return out;
    case 3:
      return alphabet_bytes(rng, n, static_cast<std::uint8_t>(2 + rng() % 6));
    case 4:
      for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::uint8_t>(i);
      return out;
    case 5:
      for (std::size_t i = 0; i < n; ++i) out[i] = i % 2 ? 0xFF : 0x00;
      return out;
    case 6:
      for (auto& b : out) b = static_cast<std::uint8_t>(32 + rng() % 95);
      return out;
    default:
      for (auto& b : out) b = static_cast<std::uint8_t>(rng() % 4 == 0 ? 0xFF : rng() % 3);
      return out;
  }
}

/// Gaussian blobs, one per class, centered at (separation * c) on every
/// feature. Every sample is its own file group.
inline Dataset blobs(std::size_t per_class, std::size_t classes, std::size_t features, double separation,
                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset ds;
  const auto s = per_class * classes;
  ds.samples.resize(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(features));
  for (std::size_t c = 0; c < classes; ++c) ds.class_names.push_back("class" + std::to_string(c));
  for (std::size_t j = 0; j < features; ++j) ds.descriptors.push_back("f" + std::to_string(j));
  for (std::size_t i = 0; i < s; ++i) {
    const auto c = static_cast<std::uint32_t>(i % classes);
    for (std::size_t j = 0; j < features; ++j) {
      ds.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = separation * c + noise(rng);
    }
    ds.labels.push_back(c);
    ds.file_ids.push_back(i);
  }
  return ds;
}

/// A fresh directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("fragkit_test_" + std::to_string(rd()) + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_bytes(const std::filesystem::path& path, const Bytes& bytes) {
  std::filesystem::create_directories(path.parent_path());
  write_file_atomic(path, bytes);
}

}  // namespace fragkit::testing
