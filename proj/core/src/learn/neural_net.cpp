#include "fragkit/learn/neural_net.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "fragkit/error.hpp"

namespace fragkit::learn {

void NeuralNetParams::validate() const {
  if (hidden < 1) throw parameter_error("hidden layer dimension must be >= 1");
  if (max_epochs < 1) throw parameter_error("epoch limit must be >= 1");
  if (patience < 1) throw parameter_error("early-stopping patience must be >= 1");
}

json NeuralNetParams::to_json() const {
  return {{"hidden", hidden}, {"max_epochs", max_epochs}, {"patience", patience}, {"min_gradient", min_gradient}};
}

NeuralNetParams NeuralNetParams::from_json(const json& j) {
  NeuralNetParams p;
  p.hidden = param(j, "hidden", p.hidden);
  p.max_epochs = param(j, "max_epochs", p.max_epochs);
  p.patience = param(j, "patience", p.patience);
  p.min_gradient = param(j, "min_gradient", p.min_gradient);
  p.validate();
  return p;
}

namespace {

using RowMat = Matrix;

struct Views {
  Eigen::Map<const RowMat> w1;
  Eigen::Map<const Eigen::VectorXd> b1;
  Eigen::Map<const RowMat> w2;
  Eigen::Map<const Eigen::VectorXd> b2;
};

Views views(const NetShape& s, const Vector& theta) {
  const auto h = static_cast<Eigen::Index>(s.hidden), f = static_cast<Eigen::Index>(s.inputs),
             c = static_cast<Eigen::Index>(s.outputs);
  const double* p = theta.data();
  return {Eigen::Map<const RowMat>(p, h, f), Eigen::Map<const Eigen::VectorXd>(p + h * f, h),
          Eigen::Map<const RowMat>(p + h * f + h, c, h), Eigen::Map<const Eigen::VectorXd>(p + h * f + h + c * h, c)};
}

/// Hidden activations and log-softmax outputs.
void forward(const NetShape& s, const Vector& theta, const Matrix& x, RowMat& hidden, RowMat& logp) {
  const auto v = views(s, theta);
  hidden = ((x * v.w1.transpose()).rowwise() + v.b1.transpose()).array().tanh();
  logp = (hidden * v.w2.transpose()).rowwise() + v.b2.transpose();
  for (Eigen::Index i = 0; i < logp.rows(); ++i) {
    const double top = logp.row(i).maxCoeff();
    const double lse = top + std::log((logp.row(i).array() - top).exp().sum());
    logp.row(i).array() -= lse;
  }
}

}  // namespace

double net_loss(const NetShape& s, const Vector& theta, const TrainingSet& data, Vector* gradient) {
  RowMat hidden, logp;
  forward(s, theta, data.x, hidden, logp);
  const double total = data.w.sum();
  if (!(total > 0.0)) throw input_error("neural-net loss needs positive total weight");
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    loss -= data.w[static_cast<Eigen::Index>(i)] * logp(static_cast<Eigen::Index>(i), data.y[i]);
  }
  loss /= total;
  if (!gradient) return loss;

  const auto v = views(s, theta);
  RowMat dz = logp.array().exp();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    dz(r, data.y[i]) -= 1.0;
    dz.row(r) *= data.w[r] / total;
  }
  const RowMat da = (dz * v.w2).array() * (1.0 - hidden.array().square());
  const auto h = static_cast<Eigen::Index>(s.hidden), f = static_cast<Eigen::Index>(s.inputs),
             c = static_cast<Eigen::Index>(s.outputs);
  gradient->resize(theta.size());
  double* g = gradient->data();
  Eigen::Map<RowMat>(g, h, f) = da.transpose() * data.x;
  Eigen::Map<Eigen::VectorXd>(g + h * f, h) = da.colwise().sum().transpose();
  Eigen::Map<RowMat>(g + h * f + h, c, h) = dz.transpose() * hidden;
  Eigen::Map<Eigen::VectorXd>(g + h * f + h + c * h, c) = dz.colwise().sum().transpose();
  return loss;
}

Matrix net_outputs(const NetShape& s, const Vector& theta, const Matrix& x) {
  RowMat hidden, logp;
  forward(s, theta, x, hidden, logp);
  return logp.array().exp();
}

Vector init_net(const NetShape& s, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  Vector theta(static_cast<Eigen::Index>(s.parameters()));
  const double r1 = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(1, s.inputs)));
  const double r2 = 1.0 / std::sqrt(static_cast<double>(s.hidden));
  const auto first = static_cast<Eigen::Index>(s.hidden * s.inputs + s.hidden);
  std::uniform_real_distribution<double> u1(-r1, r1), u2(-r2, r2);
  for (Eigen::Index k = 0; k < theta.size(); ++k) theta[k] = k < first ? u1(rng) : u2(rng);
  return theta;
}

NeuralNet NeuralNet::train(const TrainingSet& train, const std::optional<TrainingSet>& validation,
                           const NeuralNetParams& params, std::uint64_t rng_seed) {
  params.validate();
  if (train.size() == 0) throw input_error("neural net needs training samples");
  const NetShape shape{train.features(), params.hidden, train.classes};
  Vector x = init_net(shape, rng_seed);
  const auto n = static_cast<double>(x.size());

  auto f = [&](const Vector& t) {
    const double v = net_loss(shape, t, train);
    if (!std::isfinite(v)) throw numeric_error("neural-net training diverged (non-finite loss)");
    return v;
  };
  auto grad = [&](const Vector& t) {
    Vector g;
    net_loss(shape, t, train, &g);
    if (!g.allFinite()) throw numeric_error("neural-net training diverged (non-finite gradient)");
    return g;
  };

  // Moller's scaled conjugate gradient.
  constexpr double kSigma0 = 1e-4, kBetaMin = 1e-15, kBetaMax = 1e100;
  double fold = f(x);
  Vector g_new = grad(x), g_old = g_new, d = -g_new;
  bool success = true;
  std::size_t n_success = 0;
  double beta = 1.0, mu = 0.0, kappa = 0.0, theta = 0.0;

  Vector best = x;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t fails = 0;
  if (validation) best_val = net_loss(shape, x, *validation);

  NeuralNet net(shape, x);
  std::size_t epoch = 0;
  while (epoch < params.max_epochs) {
    ++epoch;
    if (success) {
      mu = d.dot(g_new);
      if (mu >= 0.0) {
        d = -g_new;
        mu = d.dot(g_new);
      }
      kappa = d.squaredNorm();
      if (kappa < std::numeric_limits<double>::epsilon()) break;
      const double sigma = kSigma0 / std::sqrt(kappa);
      theta = d.dot(grad(x + sigma * d) - g_new) / sigma;
    }
    double delta = theta + beta * kappa;
    if (delta <= 0.0) {
      delta = beta * kappa;
      beta -= theta / kappa;
    }
    const double alpha = -mu / delta;
    const Vector x_new = x + alpha * d;
    const double f_new = f(x_new);
    const double big_delta = 2.0 * (f_new - fold) / (alpha * mu);
    if (!std::isfinite(big_delta)) break;
    success = big_delta >= 0.0;
    if (success) {
      ++n_success;
      x = x_new;
      fold = f_new;
      g_old = g_new;
      g_new = grad(x);
      if (validation) {
        const double v = net_loss(shape, x, *validation);
        if (v < best_val) {
          best_val = v;
          best = x;
          fails = 0;
        } else if (++fails >= params.patience) {
          break;
        }
      }
      if (g_new.norm() < params.min_gradient) break;
    }
    if (big_delta < 0.25) beta = std::min(4.0 * beta, kBetaMax);
    if (big_delta > 0.75) beta = std::max(0.5 * beta, kBetaMin);
    if (static_cast<double>(n_success) >= n) {
      d = -g_new;
      n_success = 0;
    } else if (success) {
      const double gamma = (g_old - g_new).dot(g_new) / mu;
      d = gamma * d - g_new;
    }
  }
  net.theta_ = validation ? best : x;
  net.epochs_ = epoch;
  return net;
}

std::uint32_t NeuralNet::predict_row(std::span<const double> row) const {
  const auto v = views(shape_, theta_);
  const Eigen::Map<const Eigen::VectorXd> x(row.data(), static_cast<Eigen::Index>(row.size()));
  const Eigen::VectorXd hidden = (v.w1 * x + v.b1).array().tanh();
  const Eigen::VectorXd z = v.w2 * hidden + v.b2;
  return argmax(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
}

void NeuralNet::save(ByteWriter& out) const {
  out.u64(shape_.inputs);
  out.u64(shape_.hidden);
  out.u64(shape_.outputs);
  out.f64s(std::span<const double>(theta_.data(), static_cast<std::size_t>(theta_.size())));
}

NeuralNet NeuralNet::load(ByteReader& in) {
  const auto at = in.offset();
  NetShape s;
  s.inputs = in.u64();
  s.hidden = in.u64();
  s.outputs = in.u64();
  const auto theta = in.f64s();
  if (theta.size() != s.parameters() || s.hidden == 0 || s.outputs == 0) {
    throw format_error("inconsistent neural-net state near byte offset " + std::to_string(at));
  }
  return NeuralNet(s, Eigen::Map<const Vector>(theta.data(), static_cast<Eigen::Index>(theta.size())));
}

}  // namespace fragkit::learn
