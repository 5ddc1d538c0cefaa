#pragma once
// Trained decision machines with their feature recipe, plus training,
// evaluation and cross-validation drivers.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fragkit/dataset.hpp"
#include "fragkit/learn/model.hpp"

namespace fragkit::learn {

/// tree | forest | svm | knn | nb | lda | nn
enum class MachineKind { Tree, Forest, Svm, Knn, NaiveBayes, Lda, NeuralNet };

MachineKind parse_machine_kind(const std::string& text);
std::string to_string(MachineKind kind);

struct DecisionMachine {
  MachineKind kind = MachineKind::Tree;
  json params;  // kind-specific, defaults filled in
  std::shared_ptr<const Model> model;
  FeatureConfig feature_config;  // empty when trained on a column subset
  std::vector<std::string> descriptors;
  ScalingParams scaling;
  std::vector<std::string> class_names;

  Labels predict(const Matrix& rows) const;
};

inline constexpr std::string_view kModelMagic = "fragkit-model v1";

Bytes encode_machine(const DecisionMachine& m);
DecisionMachine decode_machine(std::span<const std::uint8_t> data);
void write_machine(const DecisionMachine& m, const std::filesystem::path& path);
DecisionMachine read_machine(const std::filesystem::path& path);

/// Dataset of the archives under the machine's stored feature configuration.
Dataset dataset_for_machine(std::span<const FragmentArchive> archives, const DecisionMachine& machine);

struct TrainOptions {
  MachineKind kind = MachineKind::Tree;
  json params = json::object();
  SplitSpec split;
  WeightMethod weighting = WeightMethod::Balanced;
  ScalingMethod scaling = ScalingMethod::ZScore;
  std::uint64_t seed = 0;
};

/// Rows = true classes of the evaluated data, columns = machine classes.
struct ConfusionMatrix {
  std::vector<std::string> true_names;
  std::vector<std::string> predicted_names;
  Eigen::MatrixXd counts;

  /// Weight on cells whose true and predicted class names agree, over all.
  double accuracy() const;
  double total() const { return counts.sum(); }
};

struct Evaluation {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  std::size_t samples = 0;
};

struct TrainReport {
  DecisionMachine machine;
  Evaluation train;
  std::optional<Evaluation> validation;
  std::size_t train_samples = 0;
  std::size_t validation_samples = 0;
};

/// Fits the model on a prepared training set (and optional validation set for
/// tree pruning and net early stopping).
std::shared_ptr<const Model> fit_model(MachineKind kind, const json& params, const TrainingSet& train,
                                       const std::optional<TrainingSet>& validation, std::uint64_t seed);

/// Kind-specific defaults applied and validated.
json normalize_params(MachineKind kind, const json& params, std::size_t features);

/// Split, weighting, scaling (fitted on the training rows) and training.
TrainReport train_machine(const Dataset& ds, const TrainOptions& options);

/// Compatibility-checked prediction of `rows` of the dataset with weights.
Evaluation evaluate(const DecisionMachine& m, const Dataset& ds, std::span<const std::size_t> rows,
                    WeightMethod weighting);

/// Confusion over `predicted` given true labels in the same class space.
ConfusionMatrix confusion_matrix(std::span<const std::uint32_t> truth, std::span<const std::uint32_t> predicted,
                                 const Vector& weights, const std::vector<std::string>& names);

/// Each row scaled to sum to 100; zero rows stay zero.
Eigen::MatrixXd row_percent(const Eigen::MatrixXd& counts);

struct CvOptions {
  MachineKind kind = MachineKind::Tree;
  json params = json::object();
  std::size_t folds = 5;
  WeightMethod weighting = WeightMethod::Balanced;
  ScalingMethod scaling = ScalingMethod::ZScore;
  /// Training/validation carve-out inside each fold's training part (used by
  /// tree and nn).
  double train_percent = 85.0;
  std::uint64_t seed = 0;
};

struct CvReport {
  std::size_t folds = 0;
  std::vector<std::pair<std::size_t, std::size_t>> fold_ranges;  // [begin, end)
  std::vector<Evaluation> fold_results;
  ConfusionMatrix pooled;
  double accuracy = 0.0;
};

/// K contiguous folds, boundaries moved forward to file-group starts.
std::vector<std::pair<std::size_t, std::size_t>> make_folds(std::span<const std::uint64_t> file_ids, std::size_t k);

CvReport cross_validate(const Dataset& ds, const CvOptions& options);

/// Results artifact: "fragkit-results v1" then a JSON document.
inline constexpr std::string_view kResultsMagic = "fragkit-results v1";
json to_json(const Evaluation& e);
void write_results(const json& results, const std::filesystem::path& path);
json read_results(const std::filesystem::path& path);

}  // namespace fragkit::learn
