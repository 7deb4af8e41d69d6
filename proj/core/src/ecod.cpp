#include "cts/ecod.hpp"

#include "cts/error.hpp"
#include "cts/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace cts::eval {

EcodModel ecod_fit(const Eigen::MatrixXd& rows, double threshold_quantile) {
  require(rows.rows() > 0 && rows.cols() > 0, ErrorCode::empty_input, "ECOD needs training data");
  require(rows.allFinite(), ErrorCode::non_finite, "ECOD training data is non-finite");
  require(threshold_quantile >= 0.0 && threshold_quantile <= 1.0, ErrorCode::invalid_argument,
          "threshold quantile must lie in [0, 1]");
  EcodModel m;
  m.dims = static_cast<std::size_t>(rows.cols());
  m.threshold_quantile = threshold_quantile;
  const double n = static_cast<double>(rows.rows());
  for (Eigen::Index d = 0; d < rows.cols(); ++d) {
    std::vector<double> col(rows.col(d).data(), rows.col(d).data() + rows.rows());
    const double mean = rows.col(d).mean();
    double m2 = 0.0, m3 = 0.0;
    for (double v : col) {
      m2 += (v - mean) * (v - mean);
      m3 += (v - mean) * (v - mean) * (v - mean);
    }
    m2 /= n;
    m3 /= n;
    m.skewness.push_back(m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0);
    std::sort(col.begin(), col.end());
    m.support.push_back(std::move(col));
  }
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    m.training_scores.push_back(ecod_score(m, rows.row(i).transpose()));
  m.threshold = quantile(m.training_scores, threshold_quantile);
  return m;
}

EcodModel ecod_fit(std::span<const TimeSeries> train, double threshold_quantile) {
  require(!train.empty(), ErrorCode::empty_input, "ECOD needs training data");
  return ecod_fit(Eigen::MatrixXd(stack_flat(train).transpose()), threshold_quantile);
}

double ecod_score(const EcodModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  require(model.dims > 0, ErrorCode::missing_component, "ECOD model is empty");
  require(static_cast<std::size_t>(x.size()) == model.dims, ErrorCode::shape_mismatch,
          "scored vector has the wrong dimension");
  double score = 0.0;
  for (std::size_t d = 0; d < model.dims; ++d) {
    const auto& s = model.support[d];
    const double v = x(static_cast<Eigen::Index>(d));
    const double n = static_cast<double>(s.size());
    const double below = static_cast<double>(std::upper_bound(s.begin(), s.end(), v) - s.begin());
    const double above = static_cast<double>(s.end() - std::lower_bound(s.begin(), s.end(), v));
    const double left = -std::log((below + 1.0) / (n + 1.0));
    const double right = -std::log((above + 1.0) / (n + 1.0));
    const double skew_tail = model.skewness[d] < 0.0 ? left : right;
    score += std::max({left, right, skew_tail});
  }
  return score;
}

double ecod_score(const EcodModel& model, const TimeSeries& x) {
  return ecod_score(model, x.flatten());
}

bool ecod_flag(const EcodModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return ecod_score(model, x) > model.threshold;
}

bool ecod_flag(const EcodModel& model, const TimeSeries& x) {
  return ecod_flag(model, x.flatten());
}

}  // namespace cts::eval
