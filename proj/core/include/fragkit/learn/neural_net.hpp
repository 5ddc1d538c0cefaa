#pragma once
// One tanh hidden layer, softmax output, weighted cross-entropy, trained by
// scaled conjugate gradient with validation early stopping.

#include <optional>

#include "fragkit/learn/model.hpp"

namespace fragkit::learn {

struct NeuralNetParams {
  std::size_t hidden = 10;
  std::size_t max_epochs = 1000;
  /// Consecutive validation checks without improvement before stopping.
  std::size_t patience = 6;
  double min_gradient = 1e-6;

  void validate() const;
  json to_json() const;
  static NeuralNetParams from_json(const json& j);
};

struct NetShape {
  std::size_t inputs = 0;
  std::size_t hidden = 0;
  std::size_t outputs = 0;

  /// W1 (hidden x inputs, row-major), b1, W2 (outputs x hidden), b2.
  std::size_t parameters() const { return hidden * inputs + hidden + outputs * hidden + outputs; }
};

/// Weighted mean cross-entropy sum_i w_i (-log p_i[y_i]) / sum_i w_i; fills
/// `gradient` when given.
double net_loss(const NetShape& shape, const Vector& theta, const TrainingSet& data, Vector* gradient = nullptr);

/// Softmax outputs, one row per input row.
Matrix net_outputs(const NetShape& shape, const Vector& theta, const Matrix& x);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
Vector init_net(const NetShape& shape, std::uint64_t rng_seed);

class NeuralNet : public Model {
 public:
  NeuralNet() = default;
  NeuralNet(NetShape shape, Vector theta) : shape_(shape), theta_(std::move(theta)) {}

  static NeuralNet train(const TrainingSet& train, const std::optional<TrainingSet>& validation,
                         const NeuralNetParams& params, std::uint64_t rng_seed);

  std::string kind() const override { return "nn"; }
  std::size_t classes() const override { return shape_.outputs; }
  std::size_t features() const override { return shape_.inputs; }
  std::uint32_t predict_row(std::span<const double> row) const override;
  void save(ByteWriter& out) const override;
  static NeuralNet load(ByteReader& in);

  const NetShape& shape() const { return shape_; }
  const Vector& theta() const { return theta_; }
  std::size_t epochs() const { return epochs_; }

 private:
  NetShape shape_;
  Vector theta_;
  std::size_t epochs_ = 0;
};

}  // namespace fragkit::learn
