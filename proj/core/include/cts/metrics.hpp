#pragma once

#include "cts/time_series.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace cts::eval {

/// Frobenius distance between two equally shaped series.
double ed(const TimeSeries& x, const TimeSeries& y);

/// Unconstrained DTW with squared-Euclidean frame cost; returns the square
/// root of the minimal accumulated cost so it is comparable to ed().
double dtw(const TimeSeries& x, const TimeSeries& y);

/// Sample autocorrelation at lags 1..max_lag. A constant channel has
/// autocorrelation 0 at every lag.
std::vector<double> autocorrelation(const Eigen::VectorXd& channel, std::size_t max_lag);

/// min(floor(T / 2), 20)
std::size_t default_acd_lag(std::size_t length) noexcept;

/// Mean over channels and lags 1..max_lag of |rho_x - rho_y|.
double acd(const TimeSeries& x, const TimeSeries& y, std::size_t max_lag);
double acd(const TimeSeries& x, const TimeSeries& y);

inline constexpr double kCfidShrinkage = 1e-6;

/// Frechet distance between Gaussian fits of two embedded sets (rows are
/// samples). Each covariance gets `shrinkage * I` added.
double frechet_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                        double shrinkage = kCfidShrinkage);

using Embedder = std::function<Eigen::VectorXd(const TimeSeries&)>;

/// Contextual FID: embeds both sets, then frechet_distance.
double cfid(std::span<const TimeSeries> real, std::span<const TimeSeries> generated,
            const Embedder& embed, double shrinkage = kCfidShrinkage);

double accuracy(std::span<const std::size_t> labels, std::span<const std::size_t> preds);

/// Per-class F1 averaged with class support (true-label counts) as weights.
double weighted_f1(std::span<const std::size_t> labels, std::span<const std::size_t> preds);

/// Mann-Whitney statistic: P(score of a positive > score of a negative),
/// ties counting one half. labels are 0/1.
double auc(std::span<const int> labels, std::span<const double> scores);

/// Ranks with ties sharing their average rank (1-based).
std::vector<double> average_ranks(std::span<const double> values);

double spearman(std::span<const double> x, std::span<const double> y);

/// Maximum minus minimum over every value of the series.
double peak_to_peak(const TimeSeries& x);

double median(std::vector<double> values);
double quantile(std::vector<double> values, double q);

}  // namespace cts::eval
