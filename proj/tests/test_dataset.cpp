#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "fragkit/dataset.hpp"
#include "fragkit/error.hpp"
#include "support.hpp"

using namespace fragkit;
using doctest::Approx;
using nlohmann::json;

namespace {

FragmentArchive random_archive(std::mt19937_64& rng, const std::string& name, std::size_t files, std::size_t per_file,
                               std::size_t len) {
  FragmentArchive a{name, {}};
  for (std::size_t f = 0; f < files; ++f)
    for (std::size_t k = 0; k < per_file; ++k) a.records.push_back({static_cast<std::uint32_t>(f), testing::random_bytes(rng, len)});
  return a;
}

// Random dataset with file groups of random size, labels per group.
Dataset grouped(std::mt19937_64& rng, std::size_t groups, std::size_t classes, std::size_t features) {
  Dataset ds;
  for (std::size_t c = 0; c < classes; ++c) ds.class_names.push_back("c" + std::to_string(c));
  for (std::size_t j = 0; j < features; ++j) ds.descriptors.push_back("f" + std::to_string(j));
  std::vector<std::vector<double>> rows;
  for (std::size_t g = 0; g < groups; ++g) {
    const auto label = static_cast<std::uint32_t>(g % classes);
    const std::size_t n = 1 + rng() % 4;
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> row(features);
      for (auto& v : row) v = static_cast<double>(rng() % 1000) / 7.0;
      rows.push_back(row);
      ds.labels.push_back(label);
      ds.file_ids.push_back(1000 + g);
    }
  }
  ds.samples.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(features));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < features; ++j) ds.samples(i, j) = rows[i][j];
  return ds;
}

using Triple = std::tuple<std::vector<double>, std::uint32_t, std::uint64_t>;

std::multiset<Triple> triples(const Dataset& ds) {
  std::multiset<Triple> out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::vector<double> row(ds.samples.row(i).begin(), ds.samples.row(i).end());
    out.insert({row, ds.labels[i], ds.file_ids[i]});
  }
  return out;
}

bool groups_contiguous(const Dataset& ds) {
  std::set<std::uint64_t> closed;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (i > 0 && ds.file_ids[i] != ds.file_ids[i - 1]) {
      if (!closed.insert(ds.file_ids[i - 1]).second) return false;
      if (closed.count(ds.file_ids[i])) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("text fragment configuration has 566 columns in block order") {
  const auto config = text_fragment_config();
  CHECK(config.dimension() == 566);
  const auto d = config.descriptors();
  REQUIRE(d.size() == 566);
  const std::vector<std::pair<std::string, std::size_t>> blocks{
      {"BFD_0", 0},        {"ChiSq", 259},          {"RoC_0", 260},        {"MeanRoC", 516},
      {"LongestStreak", 517}, {"NGram2_00", 518},   {"NGram3_111", 529},   {"Low", 530},
      {"High", 532},       {"Mean", 533},           {"HarmonicMean", 539}, {"Kurtosis", 540},
      {"Skewness", 541},   {"DeltaMean", 542},      {"DeviationSTD", 546}, {"AutoCorr_1", 547},
      {"AutoCorr_5", 551}, {"Mean_band1", 552},     {"Skewness_band4", 563}, {"Entropy", 564},
      {"TruncatedEntropyDiff", 565}};
  for (const auto& [name, at] : blocks) CHECK(d[at] == name);
  CHECK(std::set<std::string>(d.begin(), d.end()).size() == 566);
}

TEST_CASE("every category's descriptor count matches its dimension") {
  for (auto kind : all_feature_kinds()) {
    FeatureSpec spec;
    spec.kind = kind;
    if (kind == FeatureKind::LcSubsequence || kind == FeatureKind::LcSubstring) {
      spec.representatives = {{"A", {Bytes{1, 2}}, similarity::Placement::Begin}};
    }
    if (kind == FeatureKind::Centroid) spec.centroids = {similarity::build_centroid({"A", {Bytes{1}}, similarity::Placement::Begin})};
    CHECK(spec.descriptors().size() == spec.dimension());
    CHECK(parse_feature_kind(to_string(kind)) == kind);
  }
  CHECK(all_feature_kinds().size() == 22);
}

TEST_CASE("identifier-safe names") {
  CHECK(identifier_safe("AAC 64k") == "AAC_64k");
  CHECK(identifier_safe("7z") == "C_7z");
  CHECK(identifier_safe("") == "C_");
  const std::vector<std::string> names{"a-b", "a_b", "a b"};
  const auto u = unique_identifiers(names);
  CHECK(u == std::vector<std::string>{"a_b", "a_b_2", "a_b_3"});
}

TEST_CASE("feature configuration JSON round trip and request form") {
  std::mt19937_64 rng(41);
  const std::vector<FragmentArchive> archives{random_archive(rng, "PDF", 4, 2, 300), random_archive(rng, "TXT", 4, 2, 300)};
  const auto request = json::parse(R"({"features": [
      {"kind": "bfd"}, {"kind": "ngram", "n": [1, 4]}, {"kind": "window", "size": 64},
      {"kind": "centroid", "representatives": [{"class": "PDF", "count": 3, "placement": "random", "seed": 5},
                                               {"class": "TXT", "count": 2, "placement": "end"}]},
      {"kind": "lcsubstring", "representatives": [{"class": "TXT", "count": 2}]},
      {"kind": "fnn", "ratio": 5, "d_min": 1, "d_max": 2},
      {"kind": "gist", "row_size": 16, "grid": 2, "orientations": [4, 2]}]})");
  const auto config = FeatureConfig::from_json(request, archives);
  CHECK(config.dimension() == 260 + 2 + 16 + 5 + 4 + 1 + 3 * 2 + 4 * 6);
  const auto stored = config.to_json();
  const auto again = FeatureConfig::from_json(stored);
  CHECK(again.descriptors() == config.descriptors());
  const auto frag = testing::random_bytes(rng, 300);
  CHECK(again.extract(frag) == config.extract(frag));

  CHECK_THROWS_AS(FeatureConfig::from_json(json::parse(R"({"features":[{"kind":"nope"}]})")), Error);
  CHECK_THROWS_AS(FeatureConfig::from_json(json::parse(R"({"features":[{"kind":"centroid","representatives":[{"class":"MP3","count":1}]}]})"), archives), Error);
  CHECK_THROWS_AS(FeatureConfig::from_json(json::parse(R"({"features":[{"kind":"bfd"},{"kind":"bfd"}]})")), Error);
}

TEST_CASE("build_dataset") {
  std::mt19937_64 rng(42);
  const std::vector<FragmentArchive> one{random_archive(rng, "only", 3, 2, 1024)};
  const auto ds1 = build_dataset(one, text_fragment_config());
  CHECK(ds1.size() == 6);
  CHECK(ds1.classes() == 1);
  CHECK(ds1.features() == 566);

  const std::vector<FragmentArchive> two{random_archive(rng, "a b", 2, 2, 1024), random_archive(rng, "c", 3, 1, 1024)};
  const auto ds = build_dataset(two, text_fragment_config());
  CHECK(ds.class_names == std::vector<std::string>{"a_b", "c"});
  CHECK(ds.labels == Labels{0, 0, 0, 0, 1, 1, 1});
  CHECK(ds.class_counts() == std::vector<std::size_t>{4, 3});
  CHECK(file_groups(ds.file_ids).size() == 5);
  CHECK_NOTHROW(ds.check());
  CHECK(ds.samples.allFinite());
  const auto again = build_dataset(two, text_fragment_config());
  CHECK(again.samples == ds.samples);

  const std::vector<FragmentArchive> short_frag{{"x", {{0, Bytes(1024, 1)}, {1, Bytes(100, 1)}}}};
  try {
    build_dataset(short_frag, text_fragment_config());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("fragment 1") != std::string::npos);
  }
}

TEST_CASE("dataset file round trip and corruption") {
  std::mt19937_64 rng(43);
  auto ds = grouped(rng, 10, 3, 4);
  const auto bytes = encode_dataset(ds);
  const auto back = decode_dataset(bytes);
  CHECK(back.samples == ds.samples);
  CHECK(back.labels == ds.labels);
  CHECK(back.file_ids == ds.file_ids);
  CHECK(back.class_names == ds.class_names);
  CHECK(back.descriptors == ds.descriptors);

  testing::TempDir dir;
  write_dataset(ds, dir / "d.fds");
  CHECK(read_dataset(dir / "d.fds").samples == ds.samples);

  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  CHECK_THROWS_AS(decode_dataset(truncated), Error);
  auto trailing = bytes;
  trailing.push_back(1);
  CHECK_THROWS_AS(decode_dataset(trailing), Error);
  auto magic = bytes;
  magic[0] = 'g';
  try {
    decode_dataset(magic);
    FAIL("expected a format error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
  }
}

TEST_CASE("permute_dataset keeps groups and the sample multiset") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ds = grouped(rng, 1 + rng() % 30, 3, 3);
    const auto p = permute_dataset(ds, rng());
    CHECK(triples(p) == triples(ds));
    CHECK(groups_contiguous(p));
  }
  std::mt19937_64 one_rng(1);
  const auto single = grouped(one_rng, 1, 1, 2);
  CHECK(permute_dataset(single, 9).samples == single.samples);
  const auto three = grouped(rng, 3, 2, 2);
  CHECK(permute_dataset(three, 77).file_ids == permute_dataset(three, 77).file_ids);
}

TEST_CASE("expand, merge and subset") {
  std::mt19937_64 rng(45);
  auto a = grouped(rng, 8, 2, 3);
  auto b = a;
  b.samples = Matrix::Random(a.samples.rows(), 2);
  b.descriptors = {"g0", "g1"};
  b.feature_config = FeatureConfig{};
  const auto e = expand_dataset(a, b);
  CHECK(e.features() == 5);
  CHECK(e.samples.leftCols(3) == a.samples);
  CHECK(e.samples.rightCols(2) == b.samples);

  auto empty = a;
  empty.samples.resize(a.samples.rows(), 0);
  empty.descriptors.clear();
  CHECK(expand_dataset(a, empty).samples == a.samples);
  auto bad = b;
  bad.labels[0] = 1 - bad.labels[0];
  CHECK_THROWS_AS(expand_dataset(a, bad), Error);
  CHECK_THROWS_AS(expand_dataset(a, a), Error);  // duplicate descriptors

  auto five = grouped(rng, 20, 5, 2);
  five.class_names = {"AAC_64", "MP3", "AAC_128", "OGG", "WAV"};
  const auto merged = merge_labels(five, {{0, 2}}, {"AAC"});
  CHECK(merged.classes() == 4);
  CHECK(merged.size() == five.size());
  CHECK(merged.class_names[0] == "AAC");
  CHECK(merged.class_counts()[0] == five.class_counts()[0] + five.class_counts()[2]);
  const auto renamed = merge_labels(five, {{3}}, {"Vorbis"});
  CHECK(renamed.labels == five.labels);
  CHECK(renamed.class_names[3] == "Vorbis");
  CHECK_THROWS_AS(merge_labels(five, {{0, 1}, {1, 2}}, {"x", "y"}), Error);

  std::vector<std::uint32_t> all{0, 1, 2, 3, 4};
  std::vector<std::size_t> cols{0, 1};
  const auto same = sub_dataset(five, all, cols);
  CHECK(same.samples == five.samples);
  const std::uint32_t keep[] = {3};
  const auto only = sub_dataset(five, keep, cols);
  CHECK(only.size() == five.class_counts()[3]);
  CHECK(groups_contiguous(only));
  CHECK_THROWS_AS(sub_dataset(five, std::span<const std::uint32_t>{}, cols), Error);

  std::mt19937_64 frng(46);
  const std::vector<FragmentArchive> arch{random_archive(frng, "PDF", 2, 1, 1024), random_archive(frng, "TXT", 2, 1, 1024)};
  const auto text = build_dataset(arch, text_fragment_config());
  const std::vector<std::string> pair{"BFD_92", "ASCII"};
  const auto f = feature_indices(text, pair);
  const auto two = sub_dataset(text, std::vector<std::uint32_t>{0, 1}, f);
  CHECK(two.descriptors == pair);
  CHECK(two.feature_config.empty());
  const std::vector<std::string> unknown{"BFD_999"};
  try {
    feature_indices(text, unknown);
    FAIL("expected an error");
  } catch (const Error& err) {
    CHECK(std::string(err.what()).find("valid: BFD_0") != std::string::npos);
  }
}

TEST_CASE("scaling") {
  Matrix col(3, 1);
  col << 1, 2, 3;
  const auto z = apply_scaling(col, fit_scaling(col, ScalingMethod::ZScore));
  CHECK(z(0, 0) == Approx(-1));
  CHECK(z(1, 0) == Approx(0));
  CHECK(z(2, 0) == Approx(1));
  const auto mm = apply_scaling(col, fit_scaling(col, ScalingMethod::MinMax));
  CHECK(mm(0, 0) == 0.0);
  CHECK(mm(1, 0) == Approx(0.5));
  CHECK(mm(2, 0) == 1.0);
  Matrix constant = Matrix::Constant(4, 1, 3.0);
  CHECK(apply_scaling(constant, fit_scaling(constant, ScalingMethod::ZScore)).isZero());
  CHECK(apply_scaling(constant, fit_scaling(constant, ScalingMethod::MinMax)).isZero());

  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 50; ++trial) {
    const auto rows = 2 + rng() % 40;
    Matrix x = Matrix::Random(static_cast<Eigen::Index>(rows), 5) * 100.0;
    x.col(4).setConstant(1.5);
    const auto zs = apply_scaling(x, fit_scaling(x, ScalingMethod::ZScore));
    for (int j = 0; j < 4; ++j) {
      const double mean = zs.col(j).mean();
      const double sd = std::sqrt((zs.col(j).array() - mean).square().sum() / double(rows - 1));
      CHECK(std::abs(mean) < 1e-9);
      CHECK(std::abs(sd - 1.0) < 1e-9);
    }
    CHECK(zs.col(4).isZero());
    const auto ms = apply_scaling(x, fit_scaling(x, ScalingMethod::MinMax));
    for (int j = 0; j < 4; ++j) {
      CHECK(ms.col(j).minCoeff() == 0.0);
      CHECK(ms.col(j).maxCoeff() == 1.0);
    }
  }
}

TEST_CASE("sample weights") {
  Labels labels(40, 1);
  std::fill(labels.begin(), labels.begin() + 10, 0);
  const auto w = compute_weights(labels, WeightMethod::Balanced);
  CHECK(w[0] == Approx(2.0));
  CHECK(w[39] == Approx(2.0 / 3));
  CHECK(w.head(10).sum() == Approx(20));
  CHECK(w.tail(30).sum() == Approx(20));
  CHECK(compute_weights(labels, WeightMethod::Uniform).sum() == 40);
  CHECK(compute_weights(Labels(7, 3), WeightMethod::Balanced).isOnes());

  std::mt19937_64 rng(48);
  for (int trial = 0; trial < 100; ++trial) {
    Labels y(1 + rng() % 200);
    const auto classes = 1 + rng() % 6;
    for (auto& v : y) v = static_cast<std::uint32_t>(rng() % classes);
    const auto bw = compute_weights(y, WeightMethod::Balanced);
    std::map<std::uint32_t, double> sums;
    for (std::size_t i = 0; i < y.size(); ++i) sums[y[i]] += bw[i];
    for (const auto& [c, s] : sums) CHECK(std::abs(s - double(y.size()) / double(sums.size())) < 1e-9);
  }
}

TEST_CASE("split_dataset") {
  Dataset big;
  big.samples = Matrix::Zero(7500, 1);
  big.labels.assign(7500, 0);
  for (std::uint64_t i = 0; i < 7500; ++i) big.file_ids.push_back(i);
  big.class_names = {"a"};
  big.descriptors = {"f"};
  const auto s = split_dataset(big, {0, 1, 80, 20});
  CHECK(s.train.size() == 6000);
  CHECK(s.validation.size() == 1500);
  CHECK(split_dataset(big, {0, 1, 100, 0}).validation.empty());
  CHECK_THROWS_AS(SplitSpec({0, 1, 60, 40}).validate(), Error);
  CHECK_THROWS_AS(SplitSpec({0, 1, 80, 30}).validate(), Error);

  std::mt19937_64 rng(49);
  for (int trial = 0; trial < 200; ++trial) {
    const auto ds = grouped(rng, 2 + rng() % 40, 2, 1);
    const double start = (rng() % 50) / 100.0, end = start + 0.1 + (rng() % 40) / 100.0;
    const double train = 70 + rng() % 31;
    const auto sp = split_dataset(ds, {start, std::min(end, 1.0), train, 100 - train});
    std::set<std::size_t> seen;
    for (auto i : sp.train) CHECK(seen.insert(i).second);
    for (auto i : sp.validation) CHECK(seen.insert(i).second);
    const auto lo = static_cast<std::size_t>(std::floor(start * ds.size()));
    CHECK(*seen.begin() == lo);
    CHECK(*seen.rbegin() - *seen.begin() + 1 == seen.size());
    std::set<std::uint64_t> train_ids;
    for (auto i : sp.train) train_ids.insert(ds.file_ids[i]);
    for (auto i : sp.validation) CHECK(train_ids.count(ds.file_ids[i]) == 0);
  }
}
