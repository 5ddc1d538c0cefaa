#pragma once
// Labeled feature datasets: construction, file format, reshaping, scaling,
// sample weights and file-group-aware splits.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fragkit/feature_config.hpp"
#include "fragkit/fragstore.hpp"

namespace fragkit {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Labels = std::vector<std::uint32_t>;
using Indices = std::vector<std::size_t>;

/// S samples x F features plus label and file-group columns. file_ids carry
/// (archive index << 32 | archive file id) when built from archives.
struct Dataset {
  Matrix samples;
  Labels labels;
  std::vector<std::uint64_t> file_ids;
  std::vector<std::string> class_names;
  std::vector<std::string> descriptors;
  FeatureConfig feature_config;

  std::size_t size() const { return labels.size(); }
  std::size_t features() const { return descriptors.size(); }
  std::size_t classes() const { return class_names.size(); }

  /// Sample count per class.
  std::vector<std::size_t> class_counts() const;
  /// Throws a format error describing the first broken invariant.
  void check() const;
  /// Rows `rows`, in the given order, all columns.
  Dataset rows(std::span<const std::size_t> rows) const;
};

/// [begin, end) row ranges of consecutive equal file ids.
std::vector<std::pair<std::size_t, std::size_t>> file_groups(std::span<const std::uint64_t> file_ids);

Dataset build_dataset(std::span<const FragmentArchive> archives, const FeatureConfig& config);

inline constexpr std::string_view kDatasetMagic = "fragkit-dataset v1";

Bytes encode_dataset(const Dataset& ds);
Dataset decode_dataset(std::span<const std::uint8_t> data);
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

/// Reorders whole file groups; order inside a group is kept.
Dataset permute_dataset(const Dataset& ds, std::uint64_t rng_seed);
/// Columns of b appended to a; sizes, labels and file ids must agree.
Dataset expand_dataset(const Dataset& a, const Dataset& b);
/// Each group of labels collapses into one class named new_names[g]. Untouched
/// classes keep their relative order; merged classes take the position of
/// their lowest member.
Dataset merge_labels(const Dataset& ds, const std::vector<std::vector<std::uint32_t>>& groups,
                     const std::vector<std::string>& new_names);
/// Rows of the kept classes (relabeled in kept order) and the kept columns.
Dataset sub_dataset(const Dataset& ds, std::span<const std::uint32_t> keep_classes,
                    std::span<const std::size_t> keep_features);

/// Names to indices; unknown names raise an error listing valid ones.
std::vector<std::uint32_t> class_indices(const Dataset& ds, std::span<const std::string> names);
std::vector<std::size_t> feature_indices(const Dataset& ds, std::span<const std::string> names);

enum class ScalingMethod { None, ZScore, MinMax };
ScalingMethod parse_scaling(const std::string& text);
std::string to_string(ScalingMethod method);

/// z-score: offset = mean, scale = STD (n-1). min-max: offset = min,
/// scale = max - min. A zero scale marks a degenerate feature mapped to 0.
struct ScalingParams {
  ScalingMethod method = ScalingMethod::None;
  Vector offset;
  Vector scale;
};

ScalingParams fit_scaling(const Matrix& train, ScalingMethod method);
Matrix apply_scaling(const Matrix& rows, const ScalingParams& params);

enum class WeightMethod { Uniform, Balanced };
WeightMethod parse_weighting(const std::string& text);
std::string to_string(WeightMethod method);

/// Uniform: 1. Balanced: S / (C * S_c) with C the number of classes present.
Vector compute_weights(std::span<const std::uint32_t> labels, WeightMethod method);

struct SplitSpec {
  double start = 0.0;
  double end = 1.0;
  double train_percent = 100.0;
  double validation_percent = 0.0;

  void validate() const;
};

struct Split {
  Indices train;
  Indices validation;
};

/// Slice [floor(start S), ceil(end S)), cut at round(train% of the slice)
/// then moved forward to the next file-group boundary.
Split split_dataset(const Dataset& ds, const SplitSpec& spec);

}  // namespace fragkit
