#include "cts/metrics.hpp"

#include "cts/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace cts::eval {

double ed(const TimeSeries& x, const TimeSeries& y) {
  require(x.same_shape(y), ErrorCode::shape_mismatch, "ed needs equally shaped series");
  return (x.values() - y.values()).norm();
}

double dtw(const TimeSeries& x, const TimeSeries& y) {
  require(x.length() > 0 && y.length() > 0, ErrorCode::empty_input, "dtw on an empty series");
  require(x.channels() == y.channels(), ErrorCode::shape_mismatch,
          "dtw needs series with the same channel count");
  const auto n = static_cast<Eigen::Index>(x.length());
  const auto m = static_cast<Eigen::Index>(y.length());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(static_cast<std::size_t>(m + 1), inf);
  std::vector<double> cur(static_cast<std::size_t>(m + 1), inf);
  prev[0] = 0.0;
  for (Eigen::Index i = 1; i <= n; ++i) {
    cur[0] = inf;
    for (Eigen::Index j = 1; j <= m; ++j) {
      const double cost = (x.values().row(i - 1) - y.values().row(j - 1)).squaredNorm();
      const double best = std::min({prev[static_cast<std::size_t>(j - 1)], prev[static_cast<std::size_t>(j)],
                                    cur[static_cast<std::size_t>(j - 1)]});
      cur[static_cast<std::size_t>(j)] = cost + best;
    }
    std::swap(prev, cur);
  }
  return std::sqrt(prev[static_cast<std::size_t>(m)]);
}

std::vector<double> autocorrelation(const Eigen::VectorXd& channel, std::size_t max_lag) {
  const auto t = static_cast<std::size_t>(channel.size());
  require(max_lag >= 1 && max_lag < t, ErrorCode::invalid_argument,
          "autocorrelation lag must lie in [1, T)");
  const Eigen::VectorXd centered = channel.array() - channel.mean();
  const double denom = centered.squaredNorm();
  std::vector<double> rho(max_lag, 0.0);
  if (denom <= 0.0) return rho;
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    const auto len = static_cast<Eigen::Index>(t - lag);
    rho[lag - 1] = centered.head(len).dot(centered.segment(static_cast<Eigen::Index>(lag), len)) / denom;
  }
  return rho;
}

std::size_t default_acd_lag(std::size_t length) noexcept { return std::min<std::size_t>(length / 2, 20); }

double acd(const TimeSeries& x, const TimeSeries& y, std::size_t max_lag) {
  require(x.same_shape(y), ErrorCode::shape_mismatch, "acd needs equally shaped series");
  require(max_lag >= 1 && max_lag < x.length(), ErrorCode::invalid_argument,
          "acd max_lag must lie in [1, T)");
  double sum = 0.0;
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const auto rx = autocorrelation(x.channel(c), max_lag);
    const auto ry = autocorrelation(y.channel(c), max_lag);
    for (std::size_t l = 0; l < max_lag; ++l) sum += std::abs(rx[l] - ry[l]);
  }
  return sum / static_cast<double>(x.channels() * max_lag);
}

double acd(const TimeSeries& x, const TimeSeries& y) {
  return acd(x, y, std::max<std::size_t>(1, default_acd_lag(x.length())));
}

namespace {

Eigen::MatrixXd covariance(const Eigen::MatrixXd& rows, const Eigen::VectorXd& mean) {
  const Eigen::MatrixXd centered = rows.rowwise() - mean.transpose();
  return centered.transpose() * centered / static_cast<double>(rows.rows() - 1);
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double shrinkage) {
  require(a.rows() >= 2 && b.rows() >= 2, ErrorCode::invalid_argument,
          "Frechet distance needs at least two samples per set");
  require(a.cols() == b.cols() && a.cols() > 0, ErrorCode::shape_mismatch,
          "embedded sets differ in dimension");
  require(a.allFinite() && b.allFinite(), ErrorCode::non_finite, "embedded sets contain non-finite values");
  const Eigen::VectorXd ma = a.colwise().mean().transpose();
  const Eigen::VectorXd mb = b.colwise().mean().transpose();
  Eigen::MatrixXd ca = covariance(a, ma);
  Eigen::MatrixXd cb = covariance(b, mb);
  ca.diagonal().array() += shrinkage;
  cb.diagonal().array() += shrinkage;
  // tr((Ca Cb)^1/2) == tr((Ca^1/2 Cb Ca^1/2)^1/2), and the latter is symmetric PSD.
  const Eigen::MatrixXd root_a = psd_sqrt(ca);
  const Eigen::MatrixXd inner = root_a * cb * root_a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  const double cross = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (ma - mb).squaredNorm() + ca.trace() + cb.trace() - 2.0 * cross;
  return std::max(0.0, value);
}

double cfid(std::span<const TimeSeries> real, std::span<const TimeSeries> generated,
            const Embedder& embed, double shrinkage) {
  require(real.size() >= 2 && generated.size() >= 2, ErrorCode::invalid_argument,
          "C-FID needs at least two series per set");
  auto embed_all = [&](std::span<const TimeSeries> set) {
    Eigen::MatrixXd rows;
    for (std::size_t i = 0; i < set.size(); ++i) {
      const Eigen::VectorXd e = embed(set[i]);
      if (i == 0) rows.resize(static_cast<Eigen::Index>(set.size()), e.size());
      rows.row(static_cast<Eigen::Index>(i)) = e.transpose();
    }
    return rows;
  };
  return frechet_distance(embed_all(real), embed_all(generated), shrinkage);
}

double accuracy(std::span<const std::size_t> labels, std::span<const std::size_t> preds) {
  require(labels.size() == preds.size() && !labels.empty(), ErrorCode::shape_mismatch,
          "accuracy needs equal-length nonempty label lists");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += labels[i] == preds[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

double weighted_f1(std::span<const std::size_t> labels, std::span<const std::size_t> preds) {
  require(labels.size() == preds.size() && !labels.empty(), ErrorCode::shape_mismatch,
          "weighted_f1 needs equal-length nonempty label lists");
  std::map<std::size_t, std::size_t> support, tp, fp, fn;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++support[labels[i]];
    if (labels[i] == preds[i]) {
      ++tp[labels[i]];
    } else {
      ++fn[labels[i]];
      ++fp[preds[i]];
    }
  }
  double total = 0.0;
  for (const auto& [cls, s] : support) {
    const double t = static_cast<double>(tp[cls]);
    const double denom = 2.0 * t + static_cast<double>(fp[cls] + fn[cls]);
    const double f1 = denom > 0.0 ? 2.0 * t / denom : 0.0;
    total += f1 * static_cast<double>(s);
  }
  return total / static_cast<double>(labels.size());
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double auc(std::span<const int> labels, std::span<const double> scores) {
  require(labels.size() == scores.size(), ErrorCode::shape_mismatch,
          "auc needs one score per label");
  double pos = 0.0, neg = 0.0;
  for (int l : labels) {
    require(l == 0 || l == 1, ErrorCode::invalid_argument, "auc labels must be 0 or 1");
    (l == 1 ? pos : neg) += 1.0;
  }
  require(pos > 0.0 && neg > 0.0, ErrorCode::invalid_argument,
          "auc needs at least one positive and one negative");
  for (double s : scores) require(std::isfinite(s), ErrorCode::non_finite, "auc score is non-finite");
  const auto ranks = average_ranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == 1) rank_sum += ranks[i];
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::shape_mismatch,
          "spearman needs two equal-length lists of at least two values");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double peak_to_peak(const TimeSeries& x) { return x.values().maxCoeff() - x.values().minCoeff(); }

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double quantile(std::vector<double> values, double q) {
  require(!values.empty(), ErrorCode::empty_input, "quantile of an empty list");
  require(q >= 0.0 && q <= 1.0, ErrorCode::invalid_argument, "quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace cts::eval
