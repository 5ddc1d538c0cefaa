#include "fragkit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string_view>

#include "fragkit/error.hpp"
#include "fragkit/parallel.hpp"

namespace fragkit {

using nlohmann::json;

namespace {

constexpr std::uint64_t kMaxExactId = std::uint64_t{1} << 53;

std::string join(std::span<const std::string> items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

}  // namespace

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(classes(), 0);
  for (auto l : labels) {
    if (l < counts.size()) ++counts[l];
  }
  return counts;
}

void Dataset::check() const {
  const auto s = size();
  if (static_cast<std::size_t>(samples.rows()) != s || file_ids.size() != s) {
    throw format_error("dataset has " + std::to_string(samples.rows()) + " sample rows, " + std::to_string(s) +
                       " labels and " + std::to_string(file_ids.size()) + " file ids");
  }
  if (static_cast<std::size_t>(samples.cols()) != features()) {
    throw format_error("dataset has " + std::to_string(samples.cols()) + " columns but " +
                       std::to_string(features()) + " descriptors");
  }
  for (std::size_t i = 0; i < s; ++i) {
    if (labels[i] >= classes()) {
      throw format_error("sample " + std::to_string(i) + " has label " + std::to_string(labels[i]) + " but only " +
                         std::to_string(classes()) + " classes");
    }
  }
  if (!samples.allFinite()) {
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
      for (Eigen::Index j = 0; j < samples.cols(); ++j) {
        if (!std::isfinite(samples(i, j))) {
          throw format_error("non-finite value at sample " + std::to_string(i) + ", feature " +
                             descriptors[static_cast<std::size_t>(j)]);
        }
      }
    }
  }
  std::set<std::uint64_t> seen;
  for (const auto& [b, e] : file_groups(file_ids)) {
    if (!seen.insert(file_ids[b]).second) {
      throw format_error("file id " + std::to_string(file_ids[b]) + " is not contiguous (again at sample " +
                         std::to_string(b) + ")");
    }
  }
}

Dataset Dataset::rows(std::span<const std::size_t> idx) const {
  Dataset out;
  out.samples.resize(static_cast<Eigen::Index>(idx.size()), samples.cols());
  out.labels.reserve(idx.size());
  out.file_ids.reserve(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.samples.row(static_cast<Eigen::Index>(r)) = samples.row(static_cast<Eigen::Index>(idx[r]));
    out.labels.push_back(labels[idx[r]]);
    out.file_ids.push_back(file_ids[idx[r]]);
  }
  out.class_names = class_names;
  out.descriptors = descriptors;
  out.feature_config = feature_config;
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> file_groups(std::span<const std::uint64_t> ids) {
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  std::size_t b = 0;
  for (std::size_t i = 1; i <= ids.size(); ++i) {
    if (i == ids.size() || ids[i] != ids[b]) {
      groups.emplace_back(b, i);
      b = i;
    }
  }
  return groups;
}

Dataset build_dataset(std::span<const FragmentArchive> archives, const FeatureConfig& config) {
  if (archives.empty()) throw input_error("a dataset needs at least one archive");
  if (config.empty()) throw parameter_error("feature configuration selects no features");

  struct Item {
    std::size_t archive;
    std::size_t record;
  };
  std::vector<Item> items;
  for (std::size_t a = 0; a < archives.size(); ++a) {
    for (std::size_t r = 0; r < archives[a].records.size(); ++r) items.push_back({a, r});
  }

  Dataset ds;
  ds.descriptors = config.descriptors();
  ds.feature_config = config;
  std::vector<std::string> names;
  for (const auto& a : archives) names.push_back(a.class_name);
  ds.class_names = unique_identifiers(names);

  const auto f = static_cast<Eigen::Index>(ds.descriptors.size());
  ds.samples.resize(static_cast<Eigen::Index>(items.size()), f);
  std::vector<std::exception_ptr> failures(items.size());
  parallel_for(items.size(), [&](std::size_t i) {
    try {
      const auto& rec = archives[items[i].archive].records[items[i].record];
      const auto v = config.extract(rec.bytes);
      for (Eigen::Index j = 0; j < f; ++j) {
        if (!std::isfinite(v[static_cast<std::size_t>(j)])) {
          throw numeric_error("feature " + ds.descriptors[static_cast<std::size_t>(j)] + " is not finite");
        }
      }
      ds.samples.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), f);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  });
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!failures[i]) continue;
    const auto where = "fragment " + std::to_string(i) + " (class " + archives[items[i].archive].class_name +
                       ", record " + std::to_string(items[i].record) + "): ";
    try {
      std::rethrow_exception(failures[i]);
    } catch (const Error& e) {
      throw Error(e.kind(), where + e.what());
    } catch (const std::exception& e) {
      throw input_error(where + e.what());
    }
  }

  ds.labels.reserve(items.size());
  ds.file_ids.reserve(items.size());
  for (const auto& it : items) {
    ds.labels.push_back(static_cast<std::uint32_t>(it.archive));
    ds.file_ids.push_back((static_cast<std::uint64_t>(it.archive) << 32) |
                          archives[it.archive].records[it.record].file_id);
  }
  return ds;
}

Bytes encode_dataset(const Dataset& ds) {
  ds.check();
  json header{{"kind", "dataset"},
              {"samples", ds.size()},
              {"features", ds.features()},
              {"class_names", ds.class_names},
              {"descriptors", ds.descriptors},
              {"feature_config", ds.feature_config.to_json()}};
  const auto text = header.dump();
  ByteWriter w;
  w.raw(kDatasetMagic);
  w.raw("\nheader-bytes: " + std::to_string(text.size()) + "\n");
  w.raw(text);
  w.raw("\n");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (Eigen::Index j = 0; j < ds.samples.cols(); ++j) w.f64(ds.samples(static_cast<Eigen::Index>(i), j));
    w.f64(static_cast<double>(ds.labels[i]));
    if (ds.file_ids[i] >= kMaxExactId) throw format_error("file id too large to store exactly");
    w.f64(static_cast<double>(ds.file_ids[i]));
  }
  return w.take();
}

Dataset decode_dataset(std::span<const std::uint8_t> data) {
  ByteReader r(data);
  auto line = [&](std::string_view what) {
    std::string s;
    for (;;) {
      const auto c = static_cast<char>(r.u8());
      if (c == '\n') return s;
      s.push_back(c);
      if (s.size() > 64) throw format_error("overlong " + std::string(what) + " line at byte offset 0");
    }
  };
  const auto magic = line("magic");
  if (magic != kDatasetMagic) throw format_error("not a fragkit dataset (first line '" + magic + "')");
  const auto size_line = line("header size");
  constexpr std::string_view prefix = "header-bytes: ";
  if (size_line.rfind(prefix, 0) != 0) throw format_error("missing header-bytes line at byte offset 19");
  std::size_t header_size = 0;
  try {
    header_size = std::stoull(size_line.substr(prefix.size()));
  } catch (const std::exception&) {
    throw format_error("bad header-bytes value '" + size_line + "'");
  }
  const auto header_at = r.offset();
  const auto raw = r.raw(header_size, "dataset header");
  if (r.u8() != '\n') throw format_error("missing newline after header at byte offset " + std::to_string(r.offset() - 1));

  Dataset ds;
  std::size_t s = 0, f = 0;
  try {
    const auto header = json::parse(raw.begin(), raw.end());
    if (header.at("kind") != "dataset") throw format_error("artifact is a " + header.at("kind").dump() + ", not a dataset");
    s = header.at("samples").get<std::size_t>();
    f = header.at("features").get<std::size_t>();
    ds.class_names = header.at("class_names").get<std::vector<std::string>>();
    ds.descriptors = header.at("descriptors").get<std::vector<std::string>>();
    ds.feature_config = FeatureConfig::from_json(header.at("feature_config"));
  } catch (const json::exception& e) {
    throw format_error("malformed dataset header at byte offset " + std::to_string(header_at) + ": " + e.what());
  }
  if (ds.descriptors.size() != f) throw format_error("header declares " + std::to_string(f) + " features but lists " +
                                                     std::to_string(ds.descriptors.size()) + " descriptors");
  const auto row_bytes = (f + 2) * 8;
  if (s != 0 && r.remaining() / row_bytes < s) {
    throw format_error("truncated sample matrix at byte offset " + std::to_string(r.offset()) + ": need " +
                       std::to_string(s * row_bytes) + " bytes, have " + std::to_string(r.remaining()));
  }
  ds.samples.resize(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(f));
  ds.labels.resize(s);
  ds.file_ids.resize(s);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < f; ++j) ds.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r.f64();
    const auto at = r.offset();
    const double label = r.f64();
    const double id = r.f64();
    if (!(label >= 0) || label != std::floor(label) || label > 4294967295.0 || !(id >= 0) || id != std::floor(id) ||
        id >= static_cast<double>(kMaxExactId)) {
      throw format_error("invalid label/file id at byte offset " + std::to_string(at));
    }
    ds.labels[i] = static_cast<std::uint32_t>(label);
    ds.file_ids[i] = static_cast<std::uint64_t>(id);
  }
  if (!r.done()) throw format_error("trailing bytes at byte offset " + std::to_string(r.offset()));
  ds.check();
  return ds;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  write_file_atomic(path, encode_dataset(ds));
}

Dataset read_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path)); }

Dataset permute_dataset(const Dataset& ds, std::uint64_t rng_seed) {
  auto groups = file_groups(ds.file_ids);
  std::mt19937_64 rng(rng_seed);
  std::shuffle(groups.begin(), groups.end(), rng);
  Indices order;
  order.reserve(ds.size());
  for (const auto& [b, e] : groups) {
    for (auto i = b; i < e; ++i) order.push_back(i);
  }
  return ds.rows(order);
}

Dataset expand_dataset(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size()) {
    throw input_error("cannot expand: datasets have " + std::to_string(a.size()) + " and " + std::to_string(b.size()) +
                      " samples");
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.labels[i] != b.labels[i]) throw input_error("cannot expand: labels differ at sample " + std::to_string(i));
    if (a.file_ids[i] != b.file_ids[i]) {
      throw input_error("cannot expand: file ids differ at sample " + std::to_string(i));
    }
  }
  if (a.class_names != b.class_names) throw input_error("cannot expand: class names differ");
  std::set<std::string> names(a.descriptors.begin(), a.descriptors.end());
  for (const auto& d : b.descriptors) {
    if (names.count(d)) throw input_error("cannot expand: descriptor " + d + " present in both datasets");
  }
  if (b.features() == 0) return a;

  Dataset out = a;
  out.samples.resize(a.samples.rows(), a.samples.cols() + b.samples.cols());
  out.samples << a.samples, b.samples;
  out.descriptors.insert(out.descriptors.end(), b.descriptors.begin(), b.descriptors.end());
  auto specs = a.feature_config.specs();
  specs.insert(specs.end(), b.feature_config.specs().begin(), b.feature_config.specs().end());
  out.feature_config = FeatureConfig(std::move(specs));
  return out;
}

Dataset merge_labels(const Dataset& ds, const std::vector<std::vector<std::uint32_t>>& groups,
                     const std::vector<std::string>& new_names) {
  if (groups.size() != new_names.size()) throw parameter_error("one new name is needed per merge group");
  const auto c = ds.classes();
  std::vector<int> group_of(c, -1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw parameter_error("merge group " + std::to_string(g) + " is empty");
    for (auto l : groups[g]) {
      if (l >= c) throw parameter_error("label " + std::to_string(l) + " out of range");
      if (group_of[l] != -1) throw parameter_error("class " + ds.class_names[l] + " appears in more than one group");
      group_of[l] = static_cast<int>(g);
    }
  }
  // New class order: walk old classes; a group is placed at its first member.
  std::vector<std::uint32_t> remap(c);
  std::vector<std::string> names;
  std::vector<int> group_slot(groups.size(), -1);
  for (std::size_t l = 0; l < c; ++l) {
    const int g = group_of[l];
    if (g < 0) {
      remap[l] = static_cast<std::uint32_t>(names.size());
      names.push_back(ds.class_names[l]);
    } else {
      if (group_slot[static_cast<std::size_t>(g)] < 0) {
        group_slot[static_cast<std::size_t>(g)] = static_cast<int>(names.size());
        names.push_back(new_names[static_cast<std::size_t>(g)]);
      }
      remap[l] = static_cast<std::uint32_t>(group_slot[static_cast<std::size_t>(g)]);
    }
  }
  Dataset out = ds;
  out.class_names = unique_identifiers(names);
  for (auto& l : out.labels) l = remap[l];
  return out;
}

Dataset sub_dataset(const Dataset& ds, std::span<const std::uint32_t> keep_classes,
                    std::span<const std::size_t> keep_features) {
  if (keep_classes.empty()) throw parameter_error("class selection is empty");
  if (keep_features.empty()) throw parameter_error("feature selection is empty");
  std::vector<int> new_label(ds.classes(), -1);
  for (std::size_t k = 0; k < keep_classes.size(); ++k) {
    const auto l = keep_classes[k];
    if (l >= ds.classes()) throw parameter_error("class index " + std::to_string(l) + " out of range");
    if (new_label[l] >= 0) throw parameter_error("class " + ds.class_names[l] + " selected twice");
    new_label[l] = static_cast<int>(k);
  }
  std::set<std::size_t> seen;
  for (auto j : keep_features) {
    if (j >= ds.features()) throw parameter_error("feature index " + std::to_string(j) + " out of range");
    if (!seen.insert(j).second) throw parameter_error("feature " + ds.descriptors[j] + " selected twice");
  }

  Indices rows;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (new_label[ds.labels[i]] >= 0) rows.push_back(i);
  }
  Dataset out;
  out.samples.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(keep_features.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < keep_features.size(); ++k) {
      out.samples(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          ds.samples(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(keep_features[k]));
    }
    out.labels.push_back(static_cast<std::uint32_t>(new_label[ds.labels[rows[r]]]));
    out.file_ids.push_back(ds.file_ids[rows[r]]);
  }
  for (auto l : keep_classes) out.class_names.push_back(ds.class_names[l]);
  for (auto j : keep_features) out.descriptors.push_back(ds.descriptors[j]);

  // Keep the extraction recipe only when the column set is untouched, so a
  // machine trained on a column subset still reports its true descriptors.
  Indices all(ds.features());
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (std::equal(keep_features.begin(), keep_features.end(), all.begin(), all.end())) {
    out.feature_config = ds.feature_config;
  }
  return out;
}

std::vector<std::uint32_t> class_indices(const Dataset& ds, std::span<const std::string> names) {
  std::vector<std::uint32_t> out;
  for (const auto& n : names) {
    auto it = std::find(ds.class_names.begin(), ds.class_names.end(), n);
    if (it == ds.class_names.end()) {
      throw parameter_error("unknown class '" + n + "' (valid: " + join(ds.class_names) + ")");
    }
    out.push_back(static_cast<std::uint32_t>(it - ds.class_names.begin()));
  }
  return out;
}

std::vector<std::size_t> feature_indices(const Dataset& ds, std::span<const std::string> names) {
  std::map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < ds.descriptors.size(); ++j) index.emplace(ds.descriptors[j], j);
  std::vector<std::size_t> out;
  for (const auto& n : names) {
    auto it = index.find(n);
    if (it == index.end()) {
      std::vector<std::string> head(ds.descriptors.begin(),
                                    ds.descriptors.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(
                                                                 ds.descriptors.size(), 12)));
      throw parameter_error("unknown feature '" + n + "' (valid: " + join(head) +
                            (ds.descriptors.size() > 12 ? ", ...; see `fragkit show`)" : ")"));
    }
    out.push_back(it->second);
  }
  return out;
}

ScalingMethod parse_scaling(const std::string& text) {
  if (text == "none") return ScalingMethod::None;
  if (text == "zscore") return ScalingMethod::ZScore;
  if (text == "minmax") return ScalingMethod::MinMax;
  throw parameter_error("scaling must be zscore, minmax or none, got '" + text + "'");
}

std::string to_string(ScalingMethod method) {
  switch (method) {
    case ScalingMethod::ZScore: return "zscore";
    case ScalingMethod::MinMax: return "minmax";
    case ScalingMethod::None: break;
  }
  return "none";
}

ScalingParams fit_scaling(const Matrix& train, ScalingMethod method) {
  ScalingParams p;
  p.method = method;
  const auto f = train.cols();
  p.offset = Vector::Zero(f);
  p.scale = Vector::Ones(f);
  if (method == ScalingMethod::None) return p;
  const auto n = train.rows();
  if (n < 1 || (method == ScalingMethod::ZScore && n < 2)) {
    throw input_error("scaling needs at least " + std::string(method == ScalingMethod::ZScore ? "2" : "1") +
                      " training rows, got " + std::to_string(n));
  }
  for (Eigen::Index j = 0; j < f; ++j) {
    const auto col = train.col(j);
    if (method == ScalingMethod::ZScore) {
      const double mean = col.mean();
      const double ss = (col.array() - mean).square().sum();
      p.offset[j] = mean;
      p.scale[j] = std::sqrt(ss / static_cast<double>(n - 1));
    } else {
      const double lo = col.minCoeff();
      p.offset[j] = lo;
      p.scale[j] = col.maxCoeff() - lo;
    }
  }
  return p;
}

Matrix apply_scaling(const Matrix& rows, const ScalingParams& p) {
  if (p.method == ScalingMethod::None) return rows;
  if (rows.cols() != p.offset.size()) {
    throw compatibility_error("scaling fitted on " + std::to_string(p.offset.size()) + " features, rows have " +
                              std::to_string(rows.cols()));
  }
  Matrix out(rows.rows(), rows.cols());
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    if (p.scale[j] > 0.0) {
      out.col(j) = (rows.col(j).array() - p.offset[j]) / p.scale[j];
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

WeightMethod parse_weighting(const std::string& text) {
  if (text == "uniform") return WeightMethod::Uniform;
  if (text == "balanced") return WeightMethod::Balanced;
  throw parameter_error("weighting must be balanced or uniform, got '" + text + "'");
}

std::string to_string(WeightMethod method) { return method == WeightMethod::Balanced ? "balanced" : "uniform"; }

Vector compute_weights(std::span<const std::uint32_t> labels, WeightMethod method) {
  const auto s = labels.size();
  Vector w = Vector::Ones(static_cast<Eigen::Index>(s));
  if (method == WeightMethod::Uniform || s == 0) return w;
  std::map<std::uint32_t, std::size_t> counts;
  for (auto l : labels) ++counts[l];
  const double c = static_cast<double>(counts.size());
  for (std::size_t i = 0; i < s; ++i) {
    w[static_cast<Eigen::Index>(i)] = static_cast<double>(s) / (c * static_cast<double>(counts[labels[i]]));
  }
  return w;
}

void SplitSpec::validate() const {
  if (!(start >= 0.0 && end <= 1.0 && start < end)) {
    throw parameter_error("range must satisfy 0 <= start < end <= 1, got [" + std::to_string(start) + ", " +
                          std::to_string(end) + "]");
  }
  if (!(train_percent >= 0.0 && validation_percent >= 0.0) ||
      std::abs(train_percent + validation_percent - 100.0) > 1e-9) {
    throw parameter_error("train and validation percents must be non-negative and sum to 100");
  }
  if (train_percent < 70.0) {
    throw parameter_error("train percent must be at least 70, got " + std::to_string(train_percent));
  }
}

Split split_dataset(const Dataset& ds, const SplitSpec& spec) {
  spec.validate();
  const auto s = ds.size();
  const auto begin = static_cast<std::size_t>(std::floor(spec.start * static_cast<double>(s)));
  const auto end = std::min(s, static_cast<std::size_t>(std::ceil(spec.end * static_cast<double>(s) - 1e-9)));
  if (begin >= end) throw input_error("range [" + std::to_string(spec.start) + ", " + std::to_string(spec.end) +
                                      "] selects no samples out of " + std::to_string(s));
  const auto len = end - begin;
  auto cut = begin + static_cast<std::size_t>(std::llround(spec.train_percent / 100.0 * static_cast<double>(len)));
  cut = std::min(cut, end);
  while (cut > begin && cut < end && ds.file_ids[cut] == ds.file_ids[cut - 1]) ++cut;

  Split split;
  for (auto i = begin; i < cut; ++i) split.train.push_back(i);
  for (auto i = cut; i < end; ++i) split.validation.push_back(i);
  return split;
}

}  // namespace fragkit
