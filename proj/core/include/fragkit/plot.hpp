#pragma once
// Plot data for feature histograms and 2-D/3-D scatters, emitted as
// tab-separated text (one header line) and static SVG.

#include <array>
#include <string>
#include <vector>

#include "fragkit/dataset.hpp"

namespace fragkit::plot {

struct HistogramSeries {
  std::string class_name;
  std::vector<std::size_t> counts;
};

/// Shared edges over the min-max range of the selected classes' values.
struct Histogram {
  std::string feature;
  std::vector<double> edges;  // bins + 1
  std::vector<HistogramSeries> series;
};

/// A constant feature puts every sample in the first bin.
Histogram make_histogram(const Dataset& ds, std::size_t feature, std::span<const std::uint32_t> classes,
                         std::size_t bins);

struct ScatterGroup {
  std::string name;
  std::vector<std::uint32_t> classes;
};

struct Scatter {
  std::vector<std::string> axes;  // 2 or 3
  std::vector<std::string> group_names;
  std::vector<std::vector<std::array<double, 3>>> points;  // third coordinate 0 for 2-D
};

Scatter make_scatter(const Dataset& ds, std::span<const std::size_t> features, const std::vector<ScatterGroup>& groups);

/// Columns: class, bin, lower, upper, count.
std::string histogram_tsv(const Histogram& h);
std::string histogram_svg(const Histogram& h);
/// Columns: group, then one per axis.
std::string scatter_tsv(const Scatter& s);
std::string scatter_svg(const Scatter& s);

}  // namespace fragkit::plot
