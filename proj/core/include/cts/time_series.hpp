#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace cts {

/// A T x d_r real-valued series, one row per time step.
///
/// Flattened form is time-major, channel-minor: element (t, c) lives at
/// index t * channels + c. This is the layout the VAE consumes and the
/// CSV series format stores.
class TimeSeries {
 public:
  TimeSeries() = default;
  TimeSeries(std::size_t length, std::size_t channels);
  explicit TimeSeries(Eigen::MatrixXd values);

  static TimeSeries from_flat(std::span<const double> flat, std::size_t length,
                              std::size_t channels);
  static TimeSeries from_flat(const Eigen::VectorXd& flat, std::size_t length,
                              std::size_t channels);

  std::size_t length() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t channels() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  std::size_t size() const noexcept { return length() * channels(); }

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  double operator()(std::size_t t, std::size_t c) const { return values_(t, c); }
  double& operator()(std::size_t t, std::size_t c) { return values_(t, c); }

  Eigen::VectorXd flatten() const;
  Eigen::VectorXd channel(std::size_t c) const { return values_.col(static_cast<Eigen::Index>(c)); }

  bool same_shape(const TimeSeries& other) const noexcept {
    return length() == other.length() && channels() == other.channels();
  }
  bool all_finite() const { return values_.allFinite(); }

  friend bool operator==(const TimeSeries& a, const TimeSeries& b) {
    return a.same_shape(b) && a.values_ == b.values_;
  }

 private:
  Eigen::MatrixXd values_;
};

/// Stacks flattened series as columns of a (T*d_r) x n matrix.
Eigen::MatrixXd stack_flat(std::span<const TimeSeries> series);

}  // namespace cts
