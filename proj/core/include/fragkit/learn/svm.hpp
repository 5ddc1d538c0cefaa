#pragma once
// One-versus-all soft-margin SVM trained by SMO (second-order working set
// selection) with per-sample box constraints.

#include <list>
#include <vector>

#include "fragkit/learn/model.hpp"

namespace fragkit::learn {

enum class KernelKind { Rbf, Linear, Polynomial };

KernelKind parse_kernel(const std::string& text);
std::string to_string(KernelKind kind);

struct KernelSpec {
  KernelKind kind = KernelKind::Rbf;
  double scale = 1.0;  // c
  int order = 3;       // q, polynomial only

  /// rbf: exp(-|a-b|^2 / c^2); linear: a.b / c^2; polynomial: (1 + a.b / c^2)^q.
  double operator()(std::span<const double> a, std::span<const double> b) const;
};

struct SvmParams {
  KernelSpec kernel;
  double box = 1.0;
  double tolerance = 1e-3;
  /// 0 picks max(100000, 100 S).
  std::size_t max_iterations = 0;
  std::size_t cache_megabytes = 256;

  void validate() const;
  json to_json() const;
  static SvmParams from_json(const json& j);
};

/// LRU cache of kernel matrix rows over one training matrix.
class KernelCache {
 public:
  KernelCache(const Matrix& x, const KernelSpec& kernel, std::size_t megabytes);
  const double* row(std::size_t i);
  double diagonal(std::size_t i) const { return diag_[i]; }

 private:
  const Matrix& x_;
  KernelSpec kernel_;
  Vector sq_norm_;
  std::vector<double> diag_;
  std::size_t capacity_;
  std::list<std::size_t> lru_;  // most recent first
  std::vector<std::list<std::size_t>::iterator> where_;
  std::vector<std::vector<double>> rows_;
  std::vector<bool> cached_;
};

/// Dual solution of one binary problem: decision value
/// sum_i alpha_i y_i K(x_i, x) - rho.
struct BinarySvm {
  std::vector<double> alpha;
  double rho = 0.0;
  std::size_t iterations = 0;
};

/// y in {-1, +1}; per-sample box C_i. Throws a numeric error when the
/// iteration cap is reached.
BinarySvm solve_binary_svm(KernelCache& cache, std::span<const int> y, std::span<const double> box,
                           double tolerance, std::size_t max_iterations);

class SvmOva : public Model {
 public:
  SvmOva() = default;

  /// Box constraint of sample i is params.box * w_i.
  static SvmOva train(const TrainingSet& train, const SvmParams& params);

  std::string kind() const override { return "svm"; }
  std::size_t classes() const override { return static_cast<std::size_t>(coef_.rows()); }
  std::size_t features() const override { return static_cast<std::size_t>(support_.cols()); }
  std::uint32_t predict_row(std::span<const double> row) const override;
  std::vector<double> decision_values(std::span<const double> row) const;
  void save(ByteWriter& out) const override;
  static SvmOva load(ByteReader& in);

  std::size_t support_vectors() const { return static_cast<std::size_t>(support_.rows()); }

 private:
  KernelSpec kernel_;
  Matrix support_;  // union of support vectors over all binary machines
  Matrix coef_;     // C x n_sv: alpha_i y_i per machine
  std::vector<double> rho_;
};

}  // namespace fragkit::learn
