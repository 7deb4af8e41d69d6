#pragma once

#include "cts/time_series.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cts::eval {

/// Random dilated convolution kernel.
struct RocketKernel {
  std::vector<double> weights;  // length 7, 9 or 11, mean-centred
  double bias = 0.0;
  std::size_t dilation = 1;
  std::size_t padding = 0;
  std::size_t channel = 0;
};

struct RocketModel {
  std::vector<RocketKernel> kernels;
  std::size_t length = 0;
  std::size_t channels = 0;
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;
  Eigen::MatrixXd weights;  // features x classes
  Eigen::VectorXd intercept;
  double ridge_lambda = 0.0;
  std::size_t classes = 0;

  std::size_t feature_count() const noexcept { return 2 * kernels.size(); }
};

inline constexpr std::size_t kRocketMinLength = 7;

/// Draws `count` kernels for series of the given length.
std::vector<RocketKernel> rocket_kernels(std::size_t count, std::size_t length, std::size_t channels,
                                         std::uint64_t seed);

/// Two features per kernel: proportion of positive values and maximum.
Eigen::VectorXd rocket_features(std::span<const RocketKernel> kernels, const TimeSeries& x);

/// Ridge one-vs-rest classifier on standardised kernel features; lambda is
/// picked from {0.01, 0.1, 1, 10} by leave-one-out error on the training set.
RocketModel rocket_fit(std::span<const TimeSeries> train, std::span<const std::size_t> labels,
                       std::size_t num_kernels, std::uint64_t seed);

struct RocketPrediction {
  std::size_t label = 0;
  Eigen::VectorXd scores;
};

RocketPrediction rocket_predict(const RocketModel& model, const TimeSeries& x);

}  // namespace cts::eval
