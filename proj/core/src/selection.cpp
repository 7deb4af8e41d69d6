#include "cts/selection.hpp"

#include "cts/error.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace cts::select {

const char* to_string(ClusterStrategy s) noexcept {
  switch (s) {
    case ClusterStrategy::dcs: return "dcs";
    case ClusterStrategy::rand: return "rand";
    case ClusterStrategy::all: return "all";
  }
  return "dcs";
}

const char* to_string(NeighborStrategy s) noexcept {
  switch (s) {
    case NeighborStrategy::nns: return "nns";
    case NeighborStrategy::random: return "random";
    case NeighborStrategy::all: return "all";
  }
  return "nns";
}

ClusterStrategy cluster_strategy_from_string(const std::string& s) {
  if (s == "dcs") return ClusterStrategy::dcs;
  if (s == "rand") return ClusterStrategy::rand;
  if (s == "all") return ClusterStrategy::all;
  fail(ErrorCode::parse_error, "unknown cluster strategy '" + s + "'");
}

NeighborStrategy neighbor_strategy_from_string(const std::string& s) {
  if (s == "nns") return NeighborStrategy::nns;
  if (s == "random") return NeighborStrategy::random;
  if (s == "all") return NeighborStrategy::all;
  fail(ErrorCode::parse_error, "unknown neighbor strategy '" + s + "'");
}

void SelectionConfig::validate(std::size_t k) const {
  require(k1 >= 1 && k1 <= k, ErrorCode::invalid_argument,
          "k1 = " + std::to_string(k1) + " must lie in [1, k = " + std::to_string(k) + "]");
  require(k2 >= 1, ErrorCode::invalid_argument, "k2 must be at least 1");
}

std::vector<std::size_t> rank_clusters(const cluster::ClusterModel& model, const ConditionVector& c0) {
  validate(c0, model.schema());
  std::vector<std::pair<double, std::size_t>> scored(model.k());
  for (std::size_t j = 0; j < model.k(); ++j)
    scored[j] = {cluster::dissimilarity(c0, model.center(j), model.schema(), model.gamma()), j};
  std::sort(scored.begin(), scored.end());
  std::vector<std::size_t> ids(scored.size());
  for (std::size_t j = 0; j < scored.size(); ++j) ids[j] = scored[j].second;
  return ids;
}

std::vector<std::size_t> dcs(const cluster::ClusterModel& model, const ConditionVector& c0,
                             std::size_t k1) {
  require(k1 >= 1 && k1 <= model.k(), ErrorCode::invalid_argument,
          "k1 = " + std::to_string(k1) + " must lie in [1, k = " + std::to_string(model.k()) + "]");
  const auto ranked = rank_clusters(model, c0);
  const std::size_t near = (k1 + 1) / 2;
  const std::size_t far = k1 / 2;
  std::vector<bool> take(ranked.size(), false);
  for (std::size_t i = 0; i < near; ++i) take[i] = true;
  for (std::size_t i = 0; i < far; ++i) take[ranked.size() - 1 - i] = true;
  std::vector<std::size_t> out;
  out.reserve(k1);
  for (std::size_t i = 0; i < ranked.size(); ++i)
    if (take[i]) out.push_back(ranked[i]);
  return out;
}

std::vector<std::size_t> rand_select(const cluster::ClusterModel& model, std::size_t k1,
                                     std::uint64_t seed) {
  require(k1 >= 1 && k1 <= model.k(), ErrorCode::invalid_argument,
          "k1 = " + std::to_string(k1) + " must lie in [1, k = " + std::to_string(model.k()) + "]");
  std::vector<std::size_t> ids(model.k());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first k1 slots are a uniform k1-subset.
  for (std::size_t i = 0; i < k1; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, ids.size() - 1);
    std::swap(ids[i], ids[pick(rng)]);
  }
  ids.resize(k1);
  return ids;
}

std::vector<std::vector<std::size_t>> nns(const Eigen::VectorXd& z0_mu,
                                          std::span<const std::size_t> clusters,
                                          const cluster::ClusterModel& model,
                                          std::span<const Eigen::VectorXd> latents, std::size_t k2) {
  require(k2 >= 1, ErrorCode::invalid_argument, "k2 must be at least 1");
  require(latents.size() == model.assignment().size(), ErrorCode::missing_component,
          "a latent mean is required for every clustered series");
  std::vector<std::vector<std::size_t>> out;
  out.reserve(clusters.size());
  std::vector<std::pair<double, std::size_t>> scored;
  for (auto j : clusters) {
    const auto& members = model.members(j);
    scored.clear();
    scored.reserve(members.size());
    for (auto i : members) {
      require(latents[i].size() == z0_mu.size(), ErrorCode::shape_mismatch,
              "latent " + std::to_string(i) + " has the wrong length");
      scored.emplace_back((latents[i] - z0_mu).squaredNorm(), i);
    }
    const std::size_t take = std::min(k2, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end());
    std::vector<std::size_t> picked(take);
    for (std::size_t t = 0; t < take; ++t) picked[t] = scored[t].second;
    out.push_back(std::move(picked));
  }
  return out;
}

SelectionResult select(const Eigen::VectorXd& z0_mu, const ConditionVector& c0,
                       const cluster::ClusterModel& model,
                       std::span<const ConditionVector> conditions,
                       std::span<const Eigen::VectorXd> latents, const SelectionConfig& cfg) {
  cfg.validate(model.k());
  require(conditions.size() == model.assignment().size(), ErrorCode::missing_component,
          "conditions must cover every clustered series");

  SelectionResult r;
  switch (cfg.strategy) {
    case ClusterStrategy::dcs: r.clusters = dcs(model, c0, cfg.k1); break;
    case ClusterStrategy::rand: r.clusters = rand_select(model, cfg.k1, cfg.seed); break;
    case ClusterStrategy::all:
      r.clusters.resize(model.k());
      std::iota(r.clusters.begin(), r.clusters.end(), std::size_t{0});
      break;
  }

  std::vector<std::vector<std::size_t>> picked;
  switch (cfg.neighbors) {
    case NeighborStrategy::nns: picked = nns(z0_mu, r.clusters, model, latents, cfg.k2); break;
    case NeighborStrategy::random: {
      std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
      for (auto j : r.clusters) {
        auto members = model.members(j);
        const std::size_t take = std::min(cfg.k2, members.size());
        for (std::size_t i = 0; i < take; ++i) {
          std::uniform_int_distribution<std::size_t> pick(i, members.size() - 1);
          std::swap(members[i], members[pick(rng)]);
        }
        members.resize(take);
        picked.push_back(std::move(members));
      }
      break;
    }
    case NeighborStrategy::all:
      for (auto j : r.clusters) picked.push_back(model.members(j));
      break;
  }

  for (std::size_t c = 0; c < r.clusters.size(); ++c) {
    for (auto i : picked[c]) {
      r.indices.push_back(i);
      r.source_cluster.push_back(r.clusters[c]);
      r.conditions.push_back(conditions[i]);
      r.latents.push_back(latents[i]);
    }
  }
  require(!r.indices.empty(), ErrorCode::empty_input, "selection produced no series");
  return r;
}

}  // namespace cts::select
