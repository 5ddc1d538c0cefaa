#include "fragkit/learn/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "fragkit/error.hpp"

namespace fragkit::learn {

namespace {

// Log-probabilities of classes absent from training; finite so files stay
// plain numbers.
constexpr double kNever = -1e300;
const double kLogFloor = std::log(1e-300);

}  // namespace

NaiveBayes NaiveBayes::train(const TrainingSet& train) {
  const auto c = train.classes;
  const auto f = train.features();
  std::vector<std::size_t> count(c, 0);
  std::vector<double> mass(c, 0.0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    ++count[train.y[i]];
    mass[train.y[i]] += train.w[static_cast<Eigen::Index>(i)];
  }
  for (std::size_t k = 0; k < c; ++k) {
    if (count[k] < 2) {
      throw input_error("naive Bayes needs at least 2 samples per class; class " + std::to_string(k) + " has " +
                        std::to_string(count[k]));
    }
  }
  double total = 0.0;
  for (double m : mass) total += m;

  NaiveBayes nb;
  nb.features_ = f;
  for (std::size_t k = 0; k < c; ++k) nb.log_prior_.push_back(mass[k] > 0.0 ? std::log(mass[k] / total) : kNever);
  nb.values_.assign(c * f, {});
  nb.bandwidth_.assign(c * f, 0.0);
  for (std::size_t j = 0; j < f; ++j) {
    const auto col = train.x.col(static_cast<Eigen::Index>(j));
    const double range = col.size() ? col.maxCoeff() - col.minCoeff() : 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) nb.values_[train.y[i] * f + j].push_back(col[static_cast<Eigen::Index>(i)]);
    for (std::size_t k = 0; k < c; ++k) {
      auto& v = nb.values_[k * f + j];
      std::sort(v.begin(), v.end());
      const auto n = static_cast<double>(v.size());
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= n;
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const double sigma = std::sqrt(ss / (n - 1.0));
      nb.bandwidth_[k * f + j] = std::max({1.06 * sigma * std::pow(n, -0.2), 1e-6 * range, 1e-12});
    }
  }
  return nb;
}

double NaiveBayes::log_density(std::size_t c, std::size_t j, double v) const {
  const auto& xs = values_[c * features_ + j];
  const double h = bandwidth_[c * features_ + j];
  const double norm = std::log(static_cast<double>(xs.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  // Terms beyond 40 bandwidths are below exp(-800) relative to the nearest one.
  auto lo = std::lower_bound(xs.begin(), xs.end(), v - 40.0 * h);
  auto hi = std::upper_bound(xs.begin(), xs.end(), v + 40.0 * h);
  if (lo == hi) {
    // No point nearby: the nearest sample dominates the sum.
    double d = std::numeric_limits<double>::infinity();
    if (lo != xs.end()) d = std::min(d, *lo - v);
    if (lo != xs.begin()) d = std::min(d, v - *(lo - 1));
    return -(d / h) * (d / h) / 2.0 - norm;
  }
  double top = -std::numeric_limits<double>::infinity();
  for (auto it = lo; it != hi; ++it) {
    const double z = (*it - v) / h;
    top = std::max(top, -z * z / 2.0);
  }
  double sum = 0.0;
  for (auto it = lo; it != hi; ++it) {
    const double z = (*it - v) / h;
    sum += std::exp(-z * z / 2.0 - top);
  }
  return top + std::log(sum) - norm;
}

std::vector<double> NaiveBayes::log_posterior(std::span<const double> row) const {
  std::vector<double> out(log_prior_);
  for (std::size_t c = 0; c < out.size(); ++c) {
    if (out[c] <= kNever) continue;
    for (std::size_t j = 0; j < features_; ++j) out[c] += std::max(kLogFloor, log_density(c, j, row[j]));
  }
  return out;
}

std::uint32_t NaiveBayes::predict_row(std::span<const double> row) const { return argmax(log_posterior(row)); }

void NaiveBayes::save(ByteWriter& out) const {
  out.u64(features_);
  out.f64s(log_prior_);
  out.f64s(bandwidth_);
  for (const auto& v : values_) out.f64s(v);
}

NaiveBayes NaiveBayes::load(ByteReader& in) {
  NaiveBayes nb;
  const auto at = in.offset();
  nb.features_ = in.u64();
  nb.log_prior_ = in.f64s();
  nb.bandwidth_ = in.f64s();
  if (nb.bandwidth_.size() != nb.log_prior_.size() * nb.features_) {
    throw format_error("inconsistent naive Bayes state near byte offset " + std::to_string(at));
  }
  for (std::size_t k = 0; k < nb.bandwidth_.size(); ++k) {
    nb.values_.push_back(in.f64s());
    if (nb.values_.back().empty() || !(nb.bandwidth_[k] > 0.0)) {
      throw format_error("empty naive Bayes density near byte offset " + std::to_string(in.offset()));
    }
  }
  return nb;
}

Lda Lda::train(const TrainingSet& train) {
  const auto c = train.classes;
  const auto f = static_cast<Eigen::Index>(train.features());
  Matrix means = Matrix::Zero(static_cast<Eigen::Index>(c), f);
  std::vector<double> mass(c, 0.0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const double w = train.w[static_cast<Eigen::Index>(i)];
    means.row(train.y[i]) += w * train.x.row(static_cast<Eigen::Index>(i));
    mass[train.y[i]] += w;
  }
  double total = 0.0;
  std::size_t present = 0;
  for (std::size_t k = 0; k < c; ++k) {
    total += mass[k];
    if (mass[k] > 0.0) {
      means.row(static_cast<Eigen::Index>(k)) /= mass[k];
      ++present;
    }
  }
  if (present < 2) throw input_error("LDA needs training samples from at least two classes");

  Matrix centered(train.x.rows(), f);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    centered.row(r) = std::sqrt(train.w[r]) * (train.x.row(r) - means.row(train.y[i]));
  }
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / total;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const auto& lambda = eig.eigenvalues();
  const double top = f > 0 ? lambda.maxCoeff() : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(f);
  for (Eigen::Index k = 0; k < f; ++k) {
    if (top > 0.0 && lambda[k] >= 1e-12 * top) inv[k] = 1.0 / lambda[k];
  }
  const Eigen::MatrixXd pinv = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();

  Lda lda;
  lda.coef_ = means * pinv;
  for (std::size_t k = 0; k < c; ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    lda.offset_.push_back(mass[k] > 0.0 ? -0.5 * lda.coef_.row(r).dot(means.row(r)) + std::log(mass[k] / total)
                                        : kNever);
  }
  return lda;
}

std::vector<double> Lda::discriminants(std::span<const double> row) const {
  const Eigen::Map<const Eigen::VectorXd> x(row.data(), static_cast<Eigen::Index>(row.size()));
  std::vector<double> out(offset_);
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (out[k] > kNever) out[k] += coef_.row(static_cast<Eigen::Index>(k)).dot(x);
  }
  return out;
}

std::uint32_t Lda::predict_row(std::span<const double> row) const { return argmax(discriminants(row)); }

void Lda::save(ByteWriter& out) const {
  out.u64(static_cast<std::uint64_t>(coef_.rows()));
  out.u64(static_cast<std::uint64_t>(coef_.cols()));
  out.f64s(std::span<const double>(coef_.data(), static_cast<std::size_t>(coef_.size())));
  out.f64s(offset_);
}

Lda Lda::load(ByteReader& in) {
  Lda lda;
  const auto at = in.offset();
  const auto c = in.u64(), f = in.u64();
  const auto coef = in.f64s();
  lda.offset_ = in.f64s();
  if (coef.size() != c * f || lda.offset_.size() != c) {
    throw format_error("inconsistent LDA state near byte offset " + std::to_string(at));
  }
  lda.coef_ = Eigen::Map<const Matrix>(coef.data(), static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(f));
  return lda;
}

}  // namespace fragkit::learn
