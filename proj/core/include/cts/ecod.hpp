#pragma once

#include "cts/time_series.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace cts::eval {

/// Empirical-CDF outlier detector over flattened series.
struct EcodModel {
  std::vector<std::vector<double>> support;  // sorted training values per dimension
  std::vector<double> skewness;
  std::size_t dims = 0;
  double threshold = 0.0;
  double threshold_quantile = 0.95;
  std::vector<double> training_scores;
};

EcodModel ecod_fit(const Eigen::MatrixXd& rows, double threshold_quantile = 0.95);
EcodModel ecod_fit(std::span<const TimeSeries> train, double threshold_quantile = 0.95);

/// Sum over dimensions of max(-log F_left, -log F_right, skew-selected tail),
/// with F smoothed as (count + 1) / (n + 1).
double ecod_score(const EcodModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);
double ecod_score(const EcodModel& model, const TimeSeries& x);

/// score > threshold
bool ecod_flag(const EcodModel& model, const TimeSeries& x);
bool ecod_flag(const EcodModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

}  // namespace cts::eval
