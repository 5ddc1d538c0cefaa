#pragma once
// Gaussian-kernel naive Bayes and pseudo-inverse linear discriminant.

#include <vector>

#include "fragkit/learn/model.hpp"

namespace fragkit::learn {

/// Per class and feature, a Gaussian kernel density over the class's training
/// values with Silverman bandwidth 1.06 sigma n^(-1/5), floored at 1e-6 times
/// the feature range and at 1e-12. Priors follow class weight sums.
class NaiveBayes : public Model {
 public:
  NaiveBayes() = default;

  static NaiveBayes train(const TrainingSet& train);

  std::string kind() const override { return "nb"; }
  std::size_t classes() const override { return log_prior_.size(); }
  std::size_t features() const override { return features_; }
  std::uint32_t predict_row(std::span<const double> row) const override;
  /// log prior + sum of log densities (each density floored at 1e-300).
  std::vector<double> log_posterior(std::span<const double> row) const;
  /// Natural log of the class-c density estimate of feature j at v.
  double log_density(std::size_t c, std::size_t j, double v) const;
  double bandwidth(std::size_t c, std::size_t j) const { return bandwidth_[c * features_ + j]; }
  void save(ByteWriter& out) const override;
  static NaiveBayes load(ByteReader& in);

 private:
  std::size_t features_ = 0;
  std::vector<double> log_prior_;
  std::vector<std::vector<double>> values_;  // [c * F + j], sorted
  std::vector<double> bandwidth_;
};

/// Weighted class means, weighted pooled covariance, eigen pseudo-inverse
/// (eigenvalues below 1e-12 of the largest dropped).
class Lda : public Model {
 public:
  Lda() = default;

  static Lda train(const TrainingSet& train);

  std::string kind() const override { return "lda"; }
  std::size_t classes() const override { return static_cast<std::size_t>(coef_.rows()); }
  std::size_t features() const override { return static_cast<std::size_t>(coef_.cols()); }
  std::uint32_t predict_row(std::span<const double> row) const override;
  /// delta_c(x) = x' S+ mu_c - mu_c' S+ mu_c / 2 + log pi_c.
  std::vector<double> discriminants(std::span<const double> row) const;
  void save(ByteWriter& out) const override;
  static Lda load(ByteReader& in);

 private:
  Matrix coef_;  // C x F, rows S+ mu_c
  std::vector<double> offset_;
};

}  // namespace fragkit::learn
