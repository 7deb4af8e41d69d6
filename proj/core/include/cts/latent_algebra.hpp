#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cts::latent {

enum class BlendMode { exact, interp, extrap_above, extrap_below };

const char* to_string(BlendMode m) noexcept;

/// (condition value, mean latent) pairs, strictly increasing in the
/// condition. Duplicate condition values collapse to their mean latent.
class ConditionLatentPairs {
 public:
  ConditionLatentPairs() = default;
  explicit ConditionLatentPairs(std::vector<std::pair<double, Eigen::VectorXd>> pairs);

  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<Eigen::VectorXd>& latents() const noexcept { return latents_; }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }

 private:
  std::vector<double> values_;
  std::vector<Eigen::VectorXd> latents_;
};

/// Which stored pairs a query blends and with what weight.
///   interp:        mu = mu(left) + coefficient * (mu(right) - mu(left)), coefficient in [0, 1]
///   extrap_above:  left = second largest, right = largest, coefficient >= 1
///   extrap_below:  left = smallest, right = second smallest; mu = mu(right) +
///                  coefficient * (mu(left) - mu(right)), coefficient >= 1
///   exact:         left = right = the stored value, coefficient 0
struct BlendWitness {
  BlendMode mode = BlendMode::exact;
  double left = 0.0;
  double right = 0.0;
  double coefficient = 0.0;
  std::size_t left_index = 0;
  std::size_t right_index = 0;
};

nlohmann::json to_json(const BlendWitness& w);

/// Binary search for the tightest stored bracket around c.
BlendWitness bracket(const ConditionLatentPairs& pairs, double c);

struct BlendResult {
  Eigen::VectorXd mu;
  BlendWitness witness;
};

/// Linear interpolation between the bracketing pairs; c must lie in
/// [min, max].
BlendResult interpolate(const ConditionLatentPairs& pairs, double c);

/// Linear extrapolation from the two extreme pairs on c's side; c must not
/// lie strictly inside (min, max).
BlendResult extrapolate(const ConditionLatentPairs& pairs, double c);

/// Dispatches to exact / interpolate / extrapolate.
BlendResult blend(const ConditionLatentPairs& pairs, double c);

}  // namespace cts::latent
