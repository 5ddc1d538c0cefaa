#include "fragkit/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "fragkit/error.hpp"

namespace fragkit::plot {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* colour(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

constexpr double kW = 640, kH = 420, kL = 60, kR = 150, kT = 30, kB = 50;

void svg_open(std::ostringstream& o, const std::string& title) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kW / 2 << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
    << escape(title) << "</text>\n"
    << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << kW - kL - kR << "\" height=\"" << kH - kT - kB
    << "\" fill=\"none\" stroke=\"black\"/>\n";
}

void legend(std::ostringstream& o, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = kT + 10 + 18 * static_cast<double>(i);
    o << "<rect x=\"" << kW - kR + 10 << "\" y=\"" << y << "\" width=\"12\" height=\"12\" fill=\"" << colour(i)
      << "\"/>\n<text x=\"" << kW - kR + 28 << "\" y=\"" << y + 10
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(names[i]) << "</text>\n";
  }
}

void axis_labels(std::ostringstream& o, double lo_x, double hi_x, double lo_y, double hi_y, const std::string& xl,
                 const std::string& yl) {
  const double x1 = kW - kR, y1 = kH - kB;
  o << "<g font-family=\"sans-serif\" font-size=\"10\">\n"
    << "<text x=\"" << kL << "\" y=\"" << y1 + 14 << "\">" << num(lo_x) << "</text>\n"
    << "<text x=\"" << x1 << "\" y=\"" << y1 + 14 << "\" text-anchor=\"end\">" << num(hi_x) << "</text>\n"
    << "<text x=\"" << kL - 4 << "\" y=\"" << y1 << "\" text-anchor=\"end\">" << num(lo_y) << "</text>\n"
    << "<text x=\"" << kL - 4 << "\" y=\"" << kT + 8 << "\" text-anchor=\"end\">" << num(hi_y) << "</text>\n"
    << "<text x=\"" << (kL + x1) / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
    << escape(xl) << "</text>\n"
    << "<text transform=\"translate(14," << (kT + y1) / 2 << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">"
    << escape(yl) << "</text>\n</g>\n";
}

}  // namespace

Histogram make_histogram(const Dataset& ds, std::size_t feature, std::span<const std::uint32_t> classes,
                         std::size_t bins) {
  if (bins < 1) throw parameter_error("histogram needs at least one bin");
  if (classes.empty()) throw parameter_error("histogram needs at least one class");
  if (feature >= ds.features()) throw parameter_error("feature index out of range");
  for (auto c : classes) {
    if (c >= ds.classes()) throw parameter_error("class index out of range");
  }
  const auto col = static_cast<Eigen::Index>(feature);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (std::find(classes.begin(), classes.end(), ds.labels[i]) == classes.end()) continue;
    lo = std::min(lo, ds.samples(static_cast<Eigen::Index>(i), col));
    hi = std::max(hi, ds.samples(static_cast<Eigen::Index>(i), col));
  }
  Histogram h;
  h.feature = ds.descriptors[feature];
  if (!std::isfinite(lo)) lo = hi = 0.0;
  const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0 / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(b == bins && hi > lo ? hi : lo + width * static_cast<double>(b));
  for (auto c : classes) {
    HistogramSeries s{ds.class_names[c], std::vector<std::size_t>(bins, 0)};
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.labels[i] != c) continue;
      const double v = ds.samples(static_cast<Eigen::Index>(i), col);
      std::size_t b = 0;
      if (hi > lo) b = std::min(bins - 1, static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins)));
      ++s.counts[b];
    }
    h.series.push_back(std::move(s));
  }
  return h;
}

Scatter make_scatter(const Dataset& ds, std::span<const std::size_t> features, const std::vector<ScatterGroup>& groups) {
  if (features.size() != 2 && features.size() != 3) {
    throw parameter_error("scatter needs 2 or 3 features, got " + std::to_string(features.size()));
  }
  if (groups.empty()) throw parameter_error("scatter needs at least one class group");
  Scatter s;
  for (auto f : features) {
    if (f >= ds.features()) throw parameter_error("feature index out of range");
    s.axes.push_back(ds.descriptors[f]);
  }
  for (const auto& g : groups) {
    if (g.classes.empty()) throw parameter_error("class group " + g.name + " is empty");
    s.group_names.push_back(g.name);
    std::vector<std::array<double, 3>> pts;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (std::find(g.classes.begin(), g.classes.end(), ds.labels[i]) == g.classes.end()) continue;
      std::array<double, 3> p{0.0, 0.0, 0.0};
      for (std::size_t a = 0; a < features.size(); ++a) {
        p[a] = ds.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(features[a]));
      }
      pts.push_back(p);
    }
    s.points.push_back(std::move(pts));
  }
  return s;
}

std::string histogram_tsv(const Histogram& h) {
  std::ostringstream o;
  o << "class\tbin\tlower\tupper\tcount\n";
  for (const auto& s : h.series) {
    for (std::size_t b = 0; b < s.counts.size(); ++b) {
      o << s.class_name << '\t' << b << '\t' << num(h.edges[b]) << '\t' << num(h.edges[b + 1]) << '\t' << s.counts[b]
        << '\n';
    }
  }
  return o.str();
}

std::string histogram_svg(const Histogram& h) {
  std::ostringstream o;
  svg_open(o, "Histogram of " + h.feature);
  std::size_t top = 1;
  for (const auto& s : h.series) top = std::max(top, *std::max_element(s.counts.begin(), s.counts.end()));
  const auto bins = h.edges.size() - 1;
  const double pw = kW - kL - kR, ph = kH - kT - kB;
  const double slot = pw / static_cast<double>(bins);
  const double bar = slot / static_cast<double>(h.series.size());
  for (std::size_t k = 0; k < h.series.size(); ++k) {
    for (std::size_t b = 0; b < bins; ++b) {
      const double hh = ph * static_cast<double>(h.series[k].counts[b]) / static_cast<double>(top);
      o << "<rect x=\"" << num(kL + slot * static_cast<double>(b) + bar * static_cast<double>(k)) << "\" y=\""
        << num(kT + ph - hh) << "\" width=\"" << num(bar) << "\" height=\"" << num(hh) << "\" fill=\"" << colour(k)
        << "\" fill-opacity=\"0.8\"/>\n";
    }
  }
  std::vector<std::string> names;
  for (const auto& s : h.series) names.push_back(s.class_name);
  legend(o, names);
  axis_labels(o, h.edges.front(), h.edges.back(), 0, static_cast<double>(top), h.feature, "count");
  o << "</svg>\n";
  return o.str();
}

std::string scatter_tsv(const Scatter& s) {
  std::ostringstream o;
  o << "group";
  for (const auto& a : s.axes) o << '\t' << a;
  o << '\n';
  for (std::size_t g = 0; g < s.points.size(); ++g) {
    for (const auto& p : s.points[g]) {
      o << s.group_names[g];
      for (std::size_t a = 0; a < s.axes.size(); ++a) o << '\t' << num(p[a]);
      o << '\n';
    }
  }
  return o.str();
}

std::string scatter_svg(const Scatter& s) {
  const bool three = s.axes.size() == 3;
  // 3-D points use a fixed oblique projection onto the page.
  auto project = [&](const std::array<double, 3>& p, const std::array<double, 3>& lo,
                     const std::array<double, 3>& span) -> std::array<double, 2> {
    std::array<double, 3> u{};
    for (int a = 0; a < 3; ++a) u[a] = span[a] > 0 ? (p[a] - lo[a]) / span[a] : 0.5;
    if (!three) return {u[0], u[1]};
    return {0.75 * u[0] + 0.25 * u[2], 0.75 * u[1] + 0.25 * u[2]};
  };
  std::array<double, 3> lo{}, hi{};
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (const auto& g : s.points) {
    for (const auto& p : g) {
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], p[a]);
        hi[a] = std::max(hi[a], p[a]);
      }
    }
  }
  std::array<double, 3> span{};
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(lo[a])) lo[a] = hi[a] = 0.0;
    span[a] = hi[a] - lo[a];
  }
  std::ostringstream o;
  std::string title = s.axes[0];
  for (std::size_t a = 1; a < s.axes.size(); ++a) title += " / " + s.axes[a];
  svg_open(o, title);
  const double pw = kW - kL - kR, ph = kH - kT - kB;
  for (std::size_t g = 0; g < s.points.size(); ++g) {
    for (const auto& p : s.points[g]) {
      const auto q = project(p, lo, span);
      o << "<circle cx=\"" << num(kL + q[0] * pw) << "\" cy=\"" << num(kT + (1.0 - q[1]) * ph)
        << "\" r=\"2.5\" fill=\"" << colour(g) << "\" fill-opacity=\"0.7\"/>\n";
    }
  }
  legend(o, s.group_names);
  axis_labels(o, lo[0], hi[0], lo[1], hi[1], s.axes[0], three ? s.axes[1] + " (depth: " + s.axes[2] + ")" : s.axes[1]);
  o << "</svg>\n";
  return o.str();
}

}  // namespace fragkit::plot
