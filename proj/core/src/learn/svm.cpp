#include "fragkit/learn/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fragkit/error.hpp"

namespace fragkit::learn {

KernelKind parse_kernel(const std::string& text) {
  if (text == "rbf") return KernelKind::Rbf;
  if (text == "linear") return KernelKind::Linear;
  if (text == "polynomial") return KernelKind::Polynomial;
  throw parameter_error("kernel must be rbf, linear or polynomial, got '" + text + "'");
}

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Linear: return "linear";
    case KernelKind::Polynomial: return "polynomial";
    case KernelKind::Rbf: break;
  }
  return "rbf";
}

double KernelSpec::operator()(std::span<const double> a, std::span<const double> b) const {
  const double c2 = scale * scale;
  if (kind == KernelKind::Rbf) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return std::exp(-d / c2);
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  if (kind == KernelKind::Linear) return dot / c2;
  return std::pow(1.0 + dot / c2, order);
}

void SvmParams::validate() const {
  if (!(box > 0.0)) throw parameter_error("box constraint must be positive");
  if (!(kernel.scale > 0.0)) throw parameter_error("kernel scale must be positive");
  if (kernel.order < 1 || kernel.order > 7) throw parameter_error("polynomial order must lie in [1, 7]");
  if (!(tolerance > 0.0)) throw parameter_error("SVM tolerance must be positive");
}

json SvmParams::to_json() const {
  return {{"kernel", to_string(kernel.kind)}, {"scale", kernel.scale}, {"order", kernel.order},
          {"box", box},                       {"tolerance", tolerance}, {"max_iterations", max_iterations}};
}

SvmParams SvmParams::from_json(const json& j) {
  SvmParams p;
  p.kernel.kind = parse_kernel(param(j, "kernel", std::string("rbf")));
  p.kernel.scale = param(j, "scale", p.kernel.scale);
  p.kernel.order = param(j, "order", p.kernel.order);
  p.box = param(j, "box", p.box);
  p.tolerance = param(j, "tolerance", p.tolerance);
  p.max_iterations = param(j, "max_iterations", p.max_iterations);
  p.cache_megabytes = param(j, "cache_megabytes", p.cache_megabytes);
  p.validate();
  return p;
}

KernelCache::KernelCache(const Matrix& x, const KernelSpec& kernel, std::size_t megabytes)
    : x_(x), kernel_(kernel) {
  const auto n = static_cast<std::size_t>(x.rows());
  sq_norm_ = x.rowwise().squaredNorm();
  diag_.resize(n);
  for (std::size_t i = 0; i < n; ++i) diag_[i] = kernel_(row_of(x, i), row_of(x, i));
  const auto row_bytes = std::max<std::size_t>(1, n) * sizeof(double);
  capacity_ = std::max<std::size_t>(2, megabytes * (std::size_t{1} << 20) / row_bytes);
  where_.resize(n);
  cached_.assign(n, false);
  rows_.resize(n);
}

const double* KernelCache::row(std::size_t i) {
  if (cached_[i]) {
    lru_.splice(lru_.begin(), lru_, where_[i]);
    return rows_[i].data();
  }
  std::vector<double> data;
  if (lru_.size() >= capacity_) {
    const auto victim = lru_.back();
    lru_.pop_back();
    cached_[victim] = false;
    data = std::move(rows_[victim]);
  }
  const auto n = x_.rows();
  data.resize(static_cast<std::size_t>(n));
  Eigen::Map<Vector> out(data.data(), n);
  out.noalias() = x_ * x_.row(static_cast<Eigen::Index>(i)).transpose();
  const double c2 = kernel_.scale * kernel_.scale;
  switch (kernel_.kind) {
    case KernelKind::Rbf: {
      const double ni = sq_norm_[static_cast<Eigen::Index>(i)];
      out = (-(sq_norm_.array() + ni - 2.0 * out.array()).max(0.0) / c2).exp();
      break;
    }
    case KernelKind::Linear: out /= c2; break;
    case KernelKind::Polynomial: out = (1.0 + out.array() / c2).pow(kernel_.order); break;
  }
  rows_[i] = std::move(data);
  lru_.push_front(i);
  where_[i] = lru_.begin();
  cached_[i] = true;
  return rows_[i].data();
}

BinarySvm solve_binary_svm(KernelCache& cache, std::span<const int> y, std::span<const double> box,
                           double tolerance, std::size_t max_iterations) {
  const std::size_t n = y.size();
  constexpr double kTau = 1e-12;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  BinarySvm sol;
  sol.alpha.assign(n, 0.0);
  auto& a = sol.alpha;
  std::vector<double> g(n, -1.0);  // gradient of 0.5 a'Qa - e'a
  auto at_upper = [&](std::size_t t) { return a[t] >= box[t]; };
  auto at_lower = [&](std::size_t t) { return a[t] <= 0.0; };

  for (;;) {
    // First index: maximal violation among the "up" set.
    double gmax = -kInf;
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] == 1 ? !at_upper(t) : !at_lower(t)) {
        const double v = -y[t] * g[t];
        if (v >= gmax) {
          gmax = v;
          i = t;
        }
      }
    }
    if (i == n) break;
    const double* ki = cache.row(i);
    // Second index: largest second-order objective decrease among "low".
    double gmax2 = -kInf, best = kInf;
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] == 1 ? at_lower(t) : at_upper(t)) continue;
      const double v = y[t] * g[t];
      gmax2 = std::max(gmax2, v);
      const double diff = gmax + v;
      if (diff > 0.0) {
        double quad = cache.diagonal(i) + cache.diagonal(t) - 2.0 * ki[t];
        if (quad <= 0.0) quad = kTau;
        const double obj = -(diff * diff) / quad;
        if (obj <= best) {
          best = obj;
          j = t;
        }
      }
    }
    if (gmax + gmax2 < tolerance || j == n) break;
    if (++sol.iterations > max_iterations) {
      throw numeric_error("SMO did not converge within " + std::to_string(max_iterations) +
                          " iterations (violation " + std::to_string(gmax + gmax2) + ")");
    }

    ki = cache.row(i);
    const double* kj = cache.row(j);
    const double ci = box[i], cj = box[j];
    const double old_i = a[i], old_j = a[j];
    double quad = cache.diagonal(i) + cache.diagonal(j) - 2.0 * ki[j];
    if (quad <= 0.0) quad = kTau;
    if (y[i] != y[j]) {
      const double delta = (-g[i] - g[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0.0) {
        if (a[j] < 0.0) { a[j] = 0.0; a[i] = diff; }
      } else {
        if (a[i] < 0.0) { a[i] = 0.0; a[j] = -diff; }
      }
      if (diff > ci - cj) {
        if (a[i] > ci) { a[i] = ci; a[j] = ci - diff; }
      } else {
        if (a[j] > cj) { a[j] = cj; a[i] = cj + diff; }
      }
    } else {
      const double delta = (g[i] - g[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > ci) {
        if (a[i] > ci) { a[i] = ci; a[j] = sum - ci; }
      } else {
        if (a[j] < 0.0) { a[j] = 0.0; a[i] = sum; }
      }
      if (sum > cj) {
        if (a[j] > cj) { a[j] = cj; a[i] = sum - cj; }
      } else {
        if (a[i] < 0.0) { a[i] = 0.0; a[j] = sum; }
      }
    }
    const double di = (a[i] - old_i) * y[i];
    const double dj = (a[j] - old_j) * y[j];
    for (std::size_t t = 0; t < n; ++t) g[t] += y[t] * (ki[t] * di + kj[t] * dj);
  }

  double ub = kInf, lb = -kInf, free_sum = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * g[t];
    if (at_upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (at_lower(t)) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      free_sum += yg;
    }
  }
  if (n_free > 0) {
    sol.rho = free_sum / static_cast<double>(n_free);
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    sol.rho = (ub + lb) / 2.0;
  } else {
    sol.rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
  }
  return sol;
}

SvmOva SvmOva::train(const TrainingSet& train, const SvmParams& params) {
  params.validate();
  const auto n = train.size();
  if (train.classes < 2) throw input_error("SVM needs at least two classes");
  if (n == 0) throw input_error("SVM needs training samples");
  KernelCache cache(train.x, params.kernel, params.cache_megabytes);
  const auto max_iter = params.max_iterations ? params.max_iterations : std::max<std::size_t>(100000, 100 * n);
  std::vector<double> box(n);
  for (std::size_t i = 0; i < n; ++i) box[i] = params.box * train.w[static_cast<Eigen::Index>(i)];

  std::vector<BinarySvm> machines;
  std::vector<int> y(n);
  for (std::size_t c = 0; c < train.classes; ++c) {
    for (std::size_t i = 0; i < n; ++i) y[i] = train.y[i] == c ? 1 : -1;
    try {
      machines.push_back(solve_binary_svm(cache, y, box, params.tolerance, max_iter));
    } catch (const Error& e) {
      throw Error(e.kind(), "class " + std::to_string(c) + " vs rest: " + e.what());
    }
  }

  std::vector<std::size_t> sv;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::any_of(machines.begin(), machines.end(), [&](const BinarySvm& m) { return m.alpha[i] > 0.0; })) {
      sv.push_back(i);
    }
  }
  SvmOva model;
  model.kernel_ = params.kernel;
  model.support_.resize(static_cast<Eigen::Index>(sv.size()), train.x.cols());
  model.coef_.resize(static_cast<Eigen::Index>(train.classes), static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    model.support_.row(static_cast<Eigen::Index>(k)) = train.x.row(static_cast<Eigen::Index>(sv[k]));
    for (std::size_t c = 0; c < train.classes; ++c) {
      model.coef_(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) =
          machines[c].alpha[sv[k]] * (train.y[sv[k]] == c ? 1.0 : -1.0);
    }
  }
  for (const auto& m : machines) model.rho_.push_back(m.rho);
  return model;
}

std::vector<double> SvmOva::decision_values(std::span<const double> row) const {
  const auto n_sv = static_cast<std::size_t>(support_.rows());
  Vector k(static_cast<Eigen::Index>(n_sv));
  for (std::size_t s = 0; s < n_sv; ++s) k[static_cast<Eigen::Index>(s)] = kernel_(row_of(support_, s), row);
  std::vector<double> out(rho_.size());
  for (std::size_t c = 0; c < rho_.size(); ++c) out[c] = coef_.row(static_cast<Eigen::Index>(c)).dot(k) - rho_[c];
  return out;
}

std::uint32_t SvmOva::predict_row(std::span<const double> row) const { return argmax(decision_values(row)); }

void SvmOva::save(ByteWriter& out) const {
  out.u8(static_cast<std::uint8_t>(kernel_.kind));
  out.f64(kernel_.scale);
  out.u32(static_cast<std::uint32_t>(kernel_.order));
  out.u64(static_cast<std::uint64_t>(coef_.rows()));
  out.u64(static_cast<std::uint64_t>(support_.rows()));
  out.u64(static_cast<std::uint64_t>(support_.cols()));
  out.f64s(rho_);
  out.f64s(std::span<const double>(support_.data(), static_cast<std::size_t>(support_.size())));
  out.f64s(std::span<const double>(coef_.data(), static_cast<std::size_t>(coef_.size())));
}

SvmOva SvmOva::load(ByteReader& in) {
  SvmOva m;
  const auto at = in.offset();
  const auto kind = in.u8();
  if (kind > 2) throw format_error("unknown kernel code at byte offset " + std::to_string(at));
  m.kernel_.kind = static_cast<KernelKind>(kind);
  m.kernel_.scale = in.f64();
  m.kernel_.order = static_cast<int>(in.u32());
  const auto c = in.u64(), n_sv = in.u64(), f = in.u64();
  m.rho_ = in.f64s();
  const auto sv = in.f64s();
  const auto coef = in.f64s();
  if (m.rho_.size() != c || sv.size() != n_sv * f || coef.size() != c * n_sv) {
    throw format_error("inconsistent SVM state sizes near byte offset " + std::to_string(at));
  }
  m.support_ = Eigen::Map<const Matrix>(sv.data(), static_cast<Eigen::Index>(n_sv), static_cast<Eigen::Index>(f));
  m.coef_ = Eigen::Map<const Matrix>(coef.data(), static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(n_sv));
  return m;
}

}  // namespace fragkit::learn
