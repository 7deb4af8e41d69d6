#include "cts/rocket.hpp"

#include "cts/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace cts::eval {

std::vector<RocketKernel> rocket_kernels(std::size_t count, std::size_t length, std::size_t channels,
                                         std::uint64_t seed) {
  require(length >= kRocketMinLength, ErrorCode::invalid_argument,
          "series of length " + std::to_string(length) + " is shorter than the smallest kernel");
  require(count > 0 && channels > 0, ErrorCode::invalid_argument, "need kernels and channels");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> bias(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> len_pick(0, 2);
  std::uniform_int_distribution<std::size_t> chan_pick(0, channels - 1);
  std::bernoulli_distribution pad(0.5);
  std::vector<RocketKernel> kernels(count);
  for (auto& k : kernels) {
    const std::size_t len = 7 + 2 * len_pick(rng);
    k.weights.resize(len);
    double mean = 0.0;
    for (auto& w : k.weights) {
      w = normal(rng);
      mean += w;
    }
    mean /= static_cast<double>(len);
    for (auto& w : k.weights) w -= mean;
    k.bias = bias(rng);
    const double max_exp =
        std::max(0.0, std::log2(static_cast<double>(length - 1) / static_cast<double>(len - 1)));
    std::uniform_real_distribution<double> exponent(0.0, max_exp);
    k.dilation = static_cast<std::size_t>(std::floor(std::pow(2.0, exponent(rng))));
    k.dilation = std::max<std::size_t>(1, k.dilation);
    k.padding = pad(rng) ? ((len - 1) * k.dilation) / 2 : 0;
    k.channel = channels > 1 ? chan_pick(rng) : 0;
  }
  return kernels;
}

Eigen::VectorXd rocket_features(std::span<const RocketKernel> kernels, const TimeSeries& x) {
  Eigen::VectorXd f(static_cast<Eigen::Index>(2 * kernels.size()));
  const auto t = static_cast<std::ptrdiff_t>(x.length());
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    const auto& kern = kernels[k];
    require(kern.channel < x.channels(), ErrorCode::shape_mismatch, "kernel channel out of range");
    const auto len = static_cast<std::ptrdiff_t>(kern.weights.size());
    const auto dil = static_cast<std::ptrdiff_t>(kern.dilation);
    const auto pad = static_cast<std::ptrdiff_t>(kern.padding);
    const std::ptrdiff_t out_len = t + 2 * pad - (len - 1) * dil;
    double max_v = -std::numeric_limits<double>::infinity();
    std::size_t positive = 0;
    std::size_t total = 0;
    for (std::ptrdiff_t i = 0; i < out_len; ++i) {
      double sum = kern.bias;
      for (std::ptrdiff_t j = 0; j < len; ++j) {
        const std::ptrdiff_t idx = i - pad + j * dil;
        if (idx >= 0 && idx < t)
          sum += kern.weights[static_cast<std::size_t>(j)] *
                 x(static_cast<std::size_t>(idx), kern.channel);
      }
      max_v = std::max(max_v, sum);
      positive += sum > 0.0;
      ++total;
    }
    if (total == 0) max_v = 0.0;
    f(static_cast<Eigen::Index>(2 * k)) = total ? static_cast<double>(positive) / static_cast<double>(total) : 0.0;
    f(static_cast<Eigen::Index>(2 * k + 1)) = max_v;
  }
  return f;
}

RocketModel rocket_fit(std::span<const TimeSeries> train, std::span<const std::size_t> labels,
                       std::size_t num_kernels, std::uint64_t seed) {
  require(!train.empty() && train.size() == labels.size(), ErrorCode::shape_mismatch,
          "rocket_fit needs one label per training series");
  const std::size_t classes = *std::max_element(labels.begin(), labels.end()) + 1;
  {
    std::vector<bool> seen(classes, false);
    for (auto l : labels) seen[l] = true;
    require(std::count(seen.begin(), seen.end(), true) >= 2, ErrorCode::invalid_argument,
            "rocket_fit needs at least two classes");
  }
  RocketModel m;
  m.length = train.front().length();
  m.channels = train.front().channels();
  m.classes = classes;
  m.kernels = rocket_kernels(num_kernels, m.length, m.channels, seed);

  const auto n = static_cast<Eigen::Index>(train.size());
  const auto p = static_cast<Eigen::Index>(m.feature_count());
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    require(train[static_cast<std::size_t>(i)].same_shape(train.front()), ErrorCode::shape_mismatch,
            "training series differ in shape");
    x.row(i) = rocket_features(m.kernels, train[static_cast<std::size_t>(i)]).transpose();
  }
  m.feature_mean = x.colwise().mean().transpose();
  x.rowwise() -= m.feature_mean.transpose();
  m.feature_scale = (x.colwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt().transpose();
  for (Eigen::Index j = 0; j < p; ++j)
    if (!(m.feature_scale(j) > 1e-12)) m.feature_scale(j) = 1.0;
  x = x * m.feature_scale.cwiseInverse().asDiagonal();

  Eigen::MatrixXd y = Eigen::MatrixXd::Constant(n, static_cast<Eigen::Index>(classes), -1.0);
  for (Eigen::Index i = 0; i < n; ++i) y(i, static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])) = 1.0;
  m.intercept = y.colwise().mean().transpose();
  const Eigen::MatrixXd yc = y.rowwise() - m.intercept.transpose();

  // Dual form: alpha = (K + lambda I)^-1 Y with K = X X^T, which is n x n.
  const Eigen::MatrixXd gram = x * x.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const Eigen::MatrixXd& q = es.eigenvectors();
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd qty = q.transpose() * yc;
  double best_err = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best_alpha;
  for (double lambda : {0.01, 0.1, 1.0, 10.0}) {
    const Eigen::VectorXd inv = (ev.array() + lambda).inverse();
    const Eigen::MatrixXd alpha = q * inv.asDiagonal() * qty;
    const Eigen::VectorXd g_diag = (q.array().square().matrix() * inv);
    double err = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) err += (alpha.row(i) / g_diag(i)).squaredNorm();
    if (err < best_err) {
      best_err = err;
      best_alpha = alpha;
      m.ridge_lambda = lambda;
    }
  }
  m.weights = x.transpose() * best_alpha;
  return m;
}

RocketPrediction rocket_predict(const RocketModel& model, const TimeSeries& x) {
  require(x.length() == model.length && x.channels() == model.channels, ErrorCode::shape_mismatch,
          "series shape does not match the classifier");
  const Eigen::VectorXd f = (rocket_features(model.kernels, x) - model.feature_mean)
                                .cwiseQuotient(model.feature_scale);
  RocketPrediction p;
  p.scores = model.weights.transpose() * f + model.intercept;
  Eigen::Index best = 0;
  p.scores.maxCoeff(&best);
  p.label = static_cast<std::size_t>(best);
  return p;
}

}  // namespace cts::eval
