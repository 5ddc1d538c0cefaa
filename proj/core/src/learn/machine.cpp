#include "fragkit/learn/machine.hpp"

#include <algorithm>
#include <cmath>

#include "fragkit/error.hpp"
#include "fragkit/learn/bayes.hpp"
#include "fragkit/learn/forest.hpp"
#include "fragkit/learn/knn.hpp"
#include "fragkit/learn/neural_net.hpp"
#include "fragkit/learn/svm.hpp"
#include "fragkit/learn/tree.hpp"
#include "fragkit/parallel.hpp"

namespace fragkit::learn {

namespace {

struct KindName {
  MachineKind kind;
  const char* name;
};

constexpr KindName kKinds[] = {
    {MachineKind::Tree, "tree"}, {MachineKind::Forest, "forest"},  {MachineKind::Svm, "svm"},
    {MachineKind::Knn, "knn"},   {MachineKind::NaiveBayes, "nb"}, {MachineKind::Lda, "lda"},
    {MachineKind::NeuralNet, "nn"},
};

bool uses_validation(MachineKind k) { return k == MachineKind::Tree || k == MachineKind::NeuralNet; }

Vector gather_weights(std::span<const std::uint32_t> labels, WeightMethod method) {
  return compute_weights(labels, method);
}

/// Training part and validation carve-out of `rows`: the cut sits at
/// round(percent% of rows), moved forward past any file group it splits.
std::pair<Indices, Indices> carve(const Dataset& ds, const Indices& rows, double train_percent) {
  auto cut = static_cast<std::size_t>(std::llround(train_percent / 100.0 * static_cast<double>(rows.size())));
  cut = std::min(cut, rows.size());
  while (cut > 0 && cut < rows.size() && ds.file_ids[rows[cut]] == ds.file_ids[rows[cut - 1]]) ++cut;
  return {Indices(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(cut)),
          Indices(rows.begin() + static_cast<std::ptrdiff_t>(cut), rows.end())};
}

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

Labels gather_labels(const Labels& y, std::span<const std::size_t> rows) {
  Labels out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(y[r]);
  return out;
}

/// Scaling, weights and model fit on fit_rows (validation rows only steer
/// pruning / early stopping).
DecisionMachine fit_on_rows(const Dataset& ds, MachineKind kind, const json& params, const Indices& fit_rows,
                            const Indices& val_rows, WeightMethod weighting, ScalingMethod scaling, std::uint64_t seed) {
  if (fit_rows.empty()) throw input_error("no training samples");
  if (kind == MachineKind::Svm && scaling == ScalingMethod::None) {
    throw parameter_error("SVM training requires feature scaling (zscore or minmax)");
  }
  if (kind == MachineKind::Tree && val_rows.empty()) {
    throw input_error("decision tree needs a non-empty validation part for pruning");
  }
  DecisionMachine m;
  m.kind = kind;
  m.params = normalize_params(kind, params, ds.features());
  m.descriptors = ds.descriptors;
  m.feature_config = ds.feature_config;
  m.class_names = ds.class_names;

  const Matrix x_fit_raw = gather_rows(ds.samples, fit_rows);
  m.scaling = fit_scaling(x_fit_raw, scaling);
  const Matrix x_fit = apply_scaling(x_fit_raw, m.scaling);
  const Labels y_fit = gather_labels(ds.labels, fit_rows);
  const Vector w_fit = gather_weights(y_fit, weighting);
  const TrainingSet train{x_fit, y_fit, w_fit, ds.classes()};

  std::optional<TrainingSet> validation;
  Matrix x_val;
  Labels y_val;
  Vector w_val;
  if (uses_validation(kind) && !val_rows.empty()) {
    x_val = apply_scaling(gather_rows(ds.samples, val_rows), m.scaling);
    y_val = gather_labels(ds.labels, val_rows);
    w_val = gather_weights(y_val, weighting);
    validation.emplace(TrainingSet{x_val, y_val, w_val, ds.classes()});
  }
  m.model = fit_model(kind, m.params, train, validation, seed);
  return m;
}

std::string read_line(ByteReader& r, std::string_view what) {
  std::string s;
  const auto at = r.offset();
  for (;;) {
    const auto c = static_cast<char>(r.u8());
    if (c == '\n') return s;
    s.push_back(c);
    if (s.size() > 64) throw format_error("overlong " + std::string(what) + " line at byte offset " + std::to_string(at));
  }
}

}  // namespace

MachineKind parse_machine_kind(const std::string& text) {
  for (const auto& k : kKinds) {
    if (text == k.name) return k.kind;
  }
  throw parameter_error("model must be one of tree, forest, svm, knn, nb, lda, nn; got '" + text + "'");
}

std::string to_string(MachineKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.name;
  }
  return "tree";
}

Labels DecisionMachine::predict(const Matrix& rows) const {
  if (!model) throw input_error("machine has no trained model");
  if (static_cast<std::size_t>(rows.cols()) != descriptors.size()) {
    throw compatibility_error("machine expects " + std::to_string(descriptors.size()) + " features, rows have " +
                              std::to_string(rows.cols()));
  }
  return model->predict(apply_scaling(rows, scaling));
}

json normalize_params(MachineKind kind, const json& params, std::size_t features) {
  const json& p = params.is_null() ? json::object() : params;
  switch (kind) {
    case MachineKind::Tree: return TreeParams::from_json(p).to_json();
    case MachineKind::Forest: return ForestParams::from_json(p).to_json();
    case MachineKind::Svm: return SvmParams::from_json(p).to_json();
    case MachineKind::Knn: {
      auto k = KnnParams::from_json(p);
      if (k.features_per_learner > features) {
        throw parameter_error("features per learner (" + std::to_string(k.features_per_learner) +
                              ") exceeds the feature count " + std::to_string(features));
      }
      return k.to_json();
    }
    case MachineKind::NeuralNet: return NeuralNetParams::from_json(p).to_json();
    case MachineKind::NaiveBayes:
    case MachineKind::Lda: return json::object();
  }
  return json::object();
}

std::shared_ptr<const Model> fit_model(MachineKind kind, const json& params, const TrainingSet& train,
                                       const std::optional<TrainingSet>& validation, std::uint64_t seed) {
  switch (kind) {
    case MachineKind::Tree: {
      auto t = DecisionTree::grow(train, TreeParams::from_json(params), seed);
      if (validation) t.prune(*validation);
      return std::make_shared<DecisionTree>(std::move(t));
    }
    case MachineKind::Forest:
      return std::make_shared<RandomForest>(RandomForest::train(train, ForestParams::from_json(params), seed));
    case MachineKind::Svm: return std::make_shared<SvmOva>(SvmOva::train(train, SvmParams::from_json(params)));
    case MachineKind::Knn:
      return std::make_shared<KnnEnsemble>(KnnEnsemble::train(train, KnnParams::from_json(params), seed));
    case MachineKind::NaiveBayes: return std::make_shared<NaiveBayes>(NaiveBayes::train(train));
    case MachineKind::Lda: return std::make_shared<Lda>(Lda::train(train));
    case MachineKind::NeuralNet:
      return std::make_shared<NeuralNet>(
          NeuralNet::train(train, validation, NeuralNetParams::from_json(params), seed));
  }
  throw parameter_error("unknown machine kind");
}

TrainReport train_machine(const Dataset& ds, const TrainOptions& o) {
  o.split.validate();
  if (o.kind == MachineKind::Tree && o.split.validation_percent < 15.0) {
    throw parameter_error("decision tree needs a validation percent of at least 15, got " +
                          std::to_string(o.split.validation_percent));
  }
  const auto split = split_dataset(ds, o.split);
  TrainReport report;
  report.machine = fit_on_rows(ds, o.kind, o.params, split.train, split.validation, o.weighting, o.scaling, o.seed);
  report.train_samples = split.train.size();
  report.validation_samples = split.validation.size();
  report.train = evaluate(report.machine, ds, split.train, o.weighting);
  if (!split.validation.empty()) report.validation = evaluate(report.machine, ds, split.validation, o.weighting);
  return report;
}

double ConfusionMatrix::accuracy() const {
  double hit = 0.0;
  for (std::size_t t = 0; t < true_names.size(); ++t) {
    for (std::size_t p = 0; p < predicted_names.size(); ++p) {
      if (true_names[t] == predicted_names[p]) hit += counts(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(p));
    }
  }
  const double all = total();
  return all > 0.0 ? hit / all : 0.0;
}

ConfusionMatrix confusion_matrix(std::span<const std::uint32_t> truth, std::span<const std::uint32_t> predicted,
                                 const Vector& weights, const std::vector<std::string>& names) {
  ConfusionMatrix cm;
  cm.true_names = names;
  cm.predicted_names = names;
  const auto c = static_cast<Eigen::Index>(names.size());
  cm.counts = Eigen::MatrixXd::Zero(c, c);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.counts(truth[i], predicted[i]) += weights[static_cast<Eigen::Index>(i)];
  return cm;
}

Evaluation evaluate(const DecisionMachine& m, const Dataset& ds, std::span<const std::size_t> rows,
                    WeightMethod weighting) {
  if (m.descriptors.size() != ds.descriptors.size()) {
    throw compatibility_error("machine was trained on " + std::to_string(m.descriptors.size()) +
                              " features but the dataset has " + std::to_string(ds.descriptors.size()));
  }
  for (std::size_t j = 0; j < ds.descriptors.size(); ++j) {
    if (m.descriptors[j] != ds.descriptors[j]) {
      throw compatibility_error("feature " + std::to_string(j) + " differs: machine has " + m.descriptors[j] +
                                ", dataset has " + ds.descriptors[j]);
    }
  }
  const Labels truth = gather_labels(ds.labels, rows);
  const Labels predicted = m.predict(gather_rows(ds.samples, rows));
  const Vector w = compute_weights(truth, weighting);

  Evaluation e;
  e.samples = rows.size();
  e.confusion.true_names = ds.class_names;
  e.confusion.predicted_names = m.class_names;
  e.confusion.counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ds.classes()),
                                             static_cast<Eigen::Index>(m.class_names.size()));
  for (std::size_t i = 0; i < truth.size(); ++i) e.confusion.counts(truth[i], predicted[i]) += w[static_cast<Eigen::Index>(i)];
  e.accuracy = e.confusion.accuracy();
  return e;
}

Eigen::MatrixXd row_percent(const Eigen::MatrixXd& counts) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(counts.rows(), counts.cols());
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    const double s = counts.row(r).sum();
    if (s > 0.0) out.row(r) = counts.row(r) * (100.0 / s);
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> make_folds(std::span<const std::uint64_t> file_ids, std::size_t k) {
  if (k < 2) throw parameter_error("cross-validation needs K >= 2");
  const auto groups = file_groups(file_ids);
  const auto g = groups.size();
  if (g < k) {
    throw input_error("cross-validation with K = " + std::to_string(k) + " needs at least K file groups, found " +
                      std::to_string(g));
  }
  const auto s = file_ids.size();
  std::vector<std::size_t> bounds{0};
  std::size_t prev = 0;  // group index where the previous fold starts
  for (std::size_t m = 1; m < k; ++m) {
    const auto target = m * s / k;
    std::size_t gi = 0;
    while (gi < g && groups[gi].first < target) ++gi;
    gi = std::clamp(gi, prev + 1, g - (k - m));
    bounds.push_back(groups[gi].first);
    prev = gi;
  }
  bounds.push_back(s);
  std::vector<std::pair<std::size_t, std::size_t>> folds;
  for (std::size_t m = 0; m < k; ++m) folds.emplace_back(bounds[m], bounds[m + 1]);
  return folds;
}

CvReport cross_validate(const Dataset& ds, const CvOptions& o) {
  if (!(o.train_percent >= 70.0 && o.train_percent <= 100.0)) {
    throw parameter_error("train percent of the carve-out must lie in [70, 100]");
  }
  if (o.kind == MachineKind::Tree && 100.0 - o.train_percent < 15.0) {
    throw parameter_error("decision tree needs a validation percent of at least 15");
  }
  CvReport report;
  report.folds = o.folds;
  report.fold_ranges = make_folds(ds.file_ids, o.folds);
  report.pooled.true_names = ds.class_names;
  report.pooled.predicted_names = ds.class_names;
  report.pooled.counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ds.classes()),
                                               static_cast<Eigen::Index>(ds.classes()));
  for (std::size_t f = 0; f < report.fold_ranges.size(); ++f) {
    const auto [b, e] = report.fold_ranges[f];
    Indices rest, test;
    for (std::size_t i = 0; i < ds.size(); ++i) (i >= b && i < e ? test : rest).push_back(i);
    Indices fit = rest, val;
    if (uses_validation(o.kind)) std::tie(fit, val) = carve(ds, rest, o.train_percent);
    try {
      const auto m = fit_on_rows(ds, o.kind, o.params, fit, val, o.weighting, o.scaling, derive_seed(o.seed, f));
      report.fold_results.push_back(evaluate(m, ds, test, o.weighting));
    } catch (const Error& err) {
      throw Error(err.kind(), "fold " + std::to_string(f + 1) + ": " + err.what());
    }
    report.pooled.counts += report.fold_results.back().confusion.counts;
  }
  report.accuracy = report.pooled.accuracy();
  return report;
}

Bytes encode_machine(const DecisionMachine& m) {
  if (!m.model) throw input_error("machine has no trained model");
  json header{{"kind", "model"},
              {"machine", to_string(m.kind)},
              {"params", m.params},
              {"class_names", m.class_names},
              {"descriptors", m.descriptors},
              {"feature_config", m.feature_config.to_json()},
              {"scaling", to_string(m.scaling.method)}};
  const auto text = header.dump();
  ByteWriter w;
  w.raw(kModelMagic);
  w.raw("\nheader-bytes: " + std::to_string(text.size()) + "\n");
  w.raw(text);
  w.raw("\n");
  w.f64s(std::span<const double>(m.scaling.offset.data(), static_cast<std::size_t>(m.scaling.offset.size())));
  w.f64s(std::span<const double>(m.scaling.scale.data(), static_cast<std::size_t>(m.scaling.scale.size())));
  m.model->save(w);
  return w.take();
}

DecisionMachine decode_machine(std::span<const std::uint8_t> data) {
  ByteReader r(data);
  const auto magic = read_line(r, "magic");
  if (magic != kModelMagic) throw format_error("not a fragkit model (first line '" + magic + "')");
  const auto size_line = read_line(r, "header size");
  constexpr std::string_view prefix = "header-bytes: ";
  if (size_line.rfind(prefix, 0) != 0) throw format_error("missing header-bytes line in model file");
  std::size_t header_size = 0;
  try {
    header_size = std::stoull(size_line.substr(prefix.size()));
  } catch (const std::exception&) {
    throw format_error("bad header-bytes value '" + size_line + "'");
  }
  const auto header_at = r.offset();
  const auto raw = r.raw(header_size, "model header");
  if (r.u8() != '\n') throw format_error("missing newline after model header");

  DecisionMachine m;
  try {
    const auto h = json::parse(raw.begin(), raw.end());
    if (h.at("kind") != "model") throw format_error("artifact is a " + h.at("kind").dump() + ", not a model");
    m.kind = parse_machine_kind(h.at("machine").get<std::string>());
    m.params = h.at("params");
    m.class_names = h.at("class_names").get<std::vector<std::string>>();
    m.descriptors = h.at("descriptors").get<std::vector<std::string>>();
    m.feature_config = FeatureConfig::from_json(h.at("feature_config"));
    m.scaling.method = parse_scaling(h.at("scaling").get<std::string>());
  } catch (const json::exception& e) {
    throw format_error("malformed model header at byte offset " + std::to_string(header_at) + ": " + e.what());
  }
  const auto offset = r.f64s();
  const auto scale = r.f64s();
  if (offset.size() != m.descriptors.size() || scale.size() != m.descriptors.size()) {
    throw format_error("scaling parameters do not match the descriptor count");
  }
  m.scaling.offset = Eigen::Map<const Vector>(offset.data(), static_cast<Eigen::Index>(offset.size()));
  m.scaling.scale = Eigen::Map<const Vector>(scale.data(), static_cast<Eigen::Index>(scale.size()));

  std::shared_ptr<const Model> model;
  switch (m.kind) {
    case MachineKind::Tree: model = std::make_shared<DecisionTree>(DecisionTree::load(r)); break;
    case MachineKind::Forest: model = std::make_shared<RandomForest>(RandomForest::load(r)); break;
    case MachineKind::Svm: model = std::make_shared<SvmOva>(SvmOva::load(r)); break;
    case MachineKind::Knn: model = std::make_shared<KnnEnsemble>(KnnEnsemble::load(r)); break;
    case MachineKind::NaiveBayes: model = std::make_shared<NaiveBayes>(NaiveBayes::load(r)); break;
    case MachineKind::Lda: model = std::make_shared<Lda>(Lda::load(r)); break;
    case MachineKind::NeuralNet: model = std::make_shared<NeuralNet>(NeuralNet::load(r)); break;
  }
  if (!r.done()) throw format_error("trailing bytes at byte offset " + std::to_string(r.offset()));
  if (model->features() != m.descriptors.size() || model->classes() != m.class_names.size()) {
    throw format_error("model state shape (" + std::to_string(model->features()) + " features, " +
                       std::to_string(model->classes()) + " classes) disagrees with its header");
  }
  m.model = std::move(model);
  return m;
}

void write_machine(const DecisionMachine& m, const std::filesystem::path& path) {
  write_file_atomic(path, encode_machine(m));
}

DecisionMachine read_machine(const std::filesystem::path& path) { return decode_machine(read_file(path)); }

Dataset dataset_for_machine(std::span<const FragmentArchive> archives, const DecisionMachine& machine) {
  if (machine.feature_config.empty()) {
    throw input_error("machine carries no feature configuration (it was trained on a column subset)");
  }
  auto ds = build_dataset(archives, machine.feature_config);
  if (ds.descriptors != machine.descriptors) {
    throw compatibility_error("stored feature configuration no longer reproduces the machine's descriptors");
  }
  return ds;
}

json to_json(const Evaluation& e) {
  auto matrix = [](const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(row);
    }
    return rows;
  };
  return {{"accuracy", e.accuracy},
          {"samples", e.samples},
          {"true_classes", e.confusion.true_names},
          {"predicted_classes", e.confusion.predicted_names},
          {"confusion", matrix(e.confusion.counts)},
          {"confusion_row_percent", matrix(row_percent(e.confusion.counts))}};
}

void write_results(const json& results, const std::filesystem::path& path) {
  write_file_atomic(path, std::string(kResultsMagic) + "\n" + results.dump(2) + "\n");
}

json read_results(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const std::string text(bytes.begin(), bytes.end());
  const auto nl = text.find('\n');
  if (nl == std::string::npos || text.substr(0, nl) != kResultsMagic) {
    throw format_error("not a fragkit results file: " + path.string());
  }
  try {
    return json::parse(text.substr(nl + 1));
  } catch (const json::exception& e) {
    throw format_error("malformed results file at byte offset " + std::to_string(nl + 1) + ": " + e.what());
  }
}

}  // namespace fragkit::learn
