#include "cts/latent_algebra.hpp"

#include "cts/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace cts::latent {

const char* to_string(BlendMode m) noexcept {
  switch (m) {
    case BlendMode::exact: return "exact";
    case BlendMode::interp: return "interp";
    case BlendMode::extrap_above: return "extrap_above";
    case BlendMode::extrap_below: return "extrap_below";
  }
  return "exact";
}

ConditionLatentPairs::ConditionLatentPairs(std::vector<std::pair<double, Eigen::VectorXd>> pairs) {
  require(!pairs.empty(), ErrorCode::empty_input, "no condition/latent pairs");
  const auto d = pairs.front().second.size();
  std::map<double, std::pair<Eigen::VectorXd, std::size_t>> grouped;
  for (auto& [c, mu] : pairs) {
    require(std::isfinite(c), ErrorCode::non_finite, "condition value is non-finite");
    require(mu.size() == d, ErrorCode::shape_mismatch, "pair latents differ in length");
    require(mu.allFinite(), ErrorCode::non_finite, "pair latent is non-finite");
    auto it = grouped.find(c);
    if (it == grouped.end())
      grouped.emplace(c, std::make_pair(mu, std::size_t{1}));
    else {
      it->second.first += mu;
      ++it->second.second;
    }
  }
  for (auto& [c, acc] : grouped) {
    values_.push_back(c);
    latents_.push_back(acc.second == 1 ? acc.first : Eigen::VectorXd(acc.first / static_cast<double>(acc.second)));
  }
}

nlohmann::json to_json(const BlendWitness& w) {
  return nlohmann::json{{"mode", to_string(w.mode)},
                        {"left", w.left},
                        {"right", w.right},
                        {"coefficient", w.coefficient}};
}

BlendWitness bracket(const ConditionLatentPairs& pairs, double c) {
  require(pairs.size() >= 2, ErrorCode::invalid_argument, "bracketing needs at least two pairs");
  require(std::isfinite(c), ErrorCode::non_finite, "query condition is non-finite");
  const auto& v = pairs.values();
  const auto it = std::lower_bound(v.begin(), v.end(), c);
  BlendWitness w;
  if (it != v.end() && *it == c) {
    const auto i = static_cast<std::size_t>(it - v.begin());
    w.mode = BlendMode::exact;
    w.left = w.right = c;
    w.left_index = w.right_index = i;
    w.coefficient = 0.0;
    return w;
  }
  const std::size_t n = v.size();
  if (it == v.end()) {
    w.mode = BlendMode::extrap_above;
    w.left_index = n - 2;
    w.right_index = n - 1;
    w.left = v[n - 2];
    w.right = v[n - 1];
    w.coefficient = (c - w.left) / (w.right - w.left);
    return w;
  }
  if (it == v.begin()) {
    w.mode = BlendMode::extrap_below;
    w.left_index = 0;
    w.right_index = 1;
    w.left = v[0];
    w.right = v[1];
    w.coefficient = (c - w.right) / (w.left - w.right);
    return w;
  }
  const auto hi = static_cast<std::size_t>(it - v.begin());
  w.mode = BlendMode::interp;
  w.left_index = hi - 1;
  w.right_index = hi;
  w.left = v[hi - 1];
  w.right = v[hi];
  w.coefficient = (c - w.left) / (w.right - w.left);
  return w;
}

BlendResult interpolate(const ConditionLatentPairs& pairs, double c) {
  require(pairs.size() >= 2, ErrorCode::invalid_argument, "interpolation needs at least two pairs");
  require(c >= pairs.min() && c <= pairs.max(), ErrorCode::invalid_argument,
          "condition lies outside the stored range; use extrapolate");
  BlendResult r;
  r.witness = bracket(pairs, c);
  const auto& mu = pairs.latents();
  if (r.witness.mode == BlendMode::exact) {
    r.mu = mu[r.witness.left_index];
    return r;
  }
  const auto& lo = mu[r.witness.left_index];
  const auto& hi = mu[r.witness.right_index];
  r.mu = lo + r.witness.coefficient * (hi - lo);
  return r;
}

BlendResult extrapolate(const ConditionLatentPairs& pairs, double c) {
  require(pairs.size() >= 2, ErrorCode::invalid_argument, "extrapolation needs at least two pairs");
  require(!(c > pairs.min() && c < pairs.max()), ErrorCode::invalid_argument,
          "condition lies inside the stored range; use interpolate");
  const auto& v = pairs.values();
  const auto& mu = pairs.latents();
  const std::size_t n = v.size();
  BlendResult r;
  auto& w = r.witness;
  if (c >= pairs.max()) {
    w.mode = BlendMode::extrap_above;
    w.left_index = n - 2;
    w.right_index = n - 1;
    w.left = v[n - 2];
    w.right = v[n - 1];
    require(w.right != w.left, ErrorCode::invalid_argument, "degenerate extrapolation bracket");
    w.coefficient = (c - w.left) / (w.right - w.left);
    r.mu = w.coefficient == 1.0 ? mu[n - 1]
                                : Eigen::VectorXd(mu[n - 2] + w.coefficient * (mu[n - 1] - mu[n - 2]));
  } else {
    w.mode = BlendMode::extrap_below;
    w.left_index = 0;
    w.right_index = 1;
    w.left = v[0];
    w.right = v[1];
    require(w.right != w.left, ErrorCode::invalid_argument, "degenerate extrapolation bracket");
    w.coefficient = (c - w.right) / (w.left - w.right);
    r.mu = w.coefficient == 1.0 ? mu[0]
                                : Eigen::VectorXd(mu[1] + w.coefficient * (mu[0] - mu[1]));
  }
  require(r.mu.allFinite(), ErrorCode::non_finite, "extrapolated latent is non-finite");
  return r;
}

BlendResult blend(const ConditionLatentPairs& pairs, double c) {
  const auto w = bracket(pairs, c);
  switch (w.mode) {
    case BlendMode::exact: return BlendResult{pairs.latents()[w.left_index], w};
    case BlendMode::interp: return interpolate(pairs, c);
    case BlendMode::extrap_above:
    case BlendMode::extrap_below: return extrapolate(pairs, c);
  }
  return interpolate(pairs, c);
}

}  // namespace cts::latent
