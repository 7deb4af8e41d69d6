#include "cts/time_series.hpp"

#include "cts/error.hpp"

#include <string>

namespace cts {

TimeSeries::TimeSeries(std::size_t length, std::size_t channels)
    : values_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(length),
                                    static_cast<Eigen::Index>(channels))) {
  require(length > 0 && channels > 0, ErrorCode::shape_mismatch,
          "time series needs positive length and channel count");
}

TimeSeries::TimeSeries(Eigen::MatrixXd values) : values_(std::move(values)) {
  require(values_.rows() > 0 && values_.cols() > 0, ErrorCode::shape_mismatch,
          "time series needs positive length and channel count");
  require(values_.allFinite(), ErrorCode::non_finite, "time series contains non-finite values");
}

TimeSeries TimeSeries::from_flat(std::span<const double> flat, std::size_t length,
                                 std::size_t channels) {
  require(flat.size() == length * channels, ErrorCode::shape_mismatch,
          "flat series has " + std::to_string(flat.size()) + " values, expected " +
              std::to_string(length * channels));
  Eigen::MatrixXd values(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(channels));
  for (std::size_t t = 0; t < length; ++t)
    for (std::size_t c = 0; c < channels; ++c)
      values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = flat[t * channels + c];
  return TimeSeries(std::move(values));
}

TimeSeries TimeSeries::from_flat(const Eigen::VectorXd& flat, std::size_t length,
                                 std::size_t channels) {
  return from_flat(std::span<const double>(flat.data(), static_cast<std::size_t>(flat.size())),
                   length, channels);
}

Eigen::VectorXd TimeSeries::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(size()));
  const auto d = static_cast<Eigen::Index>(channels());
  for (Eigen::Index t = 0; t < values_.rows(); ++t)
    for (Eigen::Index c = 0; c < d; ++c) flat(t * d + c) = values_(t, c);
  return flat;
}

Eigen::MatrixXd stack_flat(std::span<const TimeSeries> series) {
  require(!series.empty(), ErrorCode::empty_input, "cannot stack an empty series list");
  const auto dim = static_cast<Eigen::Index>(series.front().size());
  Eigen::MatrixXd out(dim, static_cast<Eigen::Index>(series.size()));
  for (std::size_t i = 0; i < series.size(); ++i) {
    require(series[i].same_shape(series.front()), ErrorCode::shape_mismatch,
            "series " + std::to_string(i) + " has a different shape");
    out.col(static_cast<Eigen::Index>(i)) = series[i].flatten();
  }
  return out;
}

}  // namespace cts
