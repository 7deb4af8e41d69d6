#pragma once

#include "cts/clustering.hpp"
#include "cts/conditions.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cts::select {

/// How clusters are chosen: diverse (nearest half + furthest half),
/// uniformly at random, or every cluster.
enum class ClusterStrategy { dcs, rand, all };

/// How members are taken from each chosen cluster: latent nearest
/// neighbours, a seeded random draw, or every member.
enum class NeighborStrategy { nns, random, all };

const char* to_string(ClusterStrategy s) noexcept;
const char* to_string(NeighborStrategy s) noexcept;
ClusterStrategy cluster_strategy_from_string(const std::string& s);
NeighborStrategy neighbor_strategy_from_string(const std::string& s);

struct SelectionConfig {
  std::size_t k1 = 2;
  std::size_t k2 = 3;
  ClusterStrategy strategy = ClusterStrategy::dcs;
  NeighborStrategy neighbors = NeighborStrategy::nns;
  std::uint64_t seed = 0;

  void validate(std::size_t k) const;
};

/// Cluster ids ranked by (dissimilarity of center to c0, id), nearest first.
std::vector<std::size_t> rank_clusters(const cluster::ClusterModel& model, const ConditionVector& c0);

/// ceil(k1/2) nearest plus floor(k1/2) furthest clusters, returned in
/// ascending order of center dissimilarity to c0.
std::vector<std::size_t> dcs(const cluster::ClusterModel& model, const ConditionVector& c0,
                             std::size_t k1);

/// k1 distinct clusters drawn uniformly at random.
std::vector<std::size_t> rand_select(const cluster::ClusterModel& model, std::size_t k1,
                                     std::uint64_t seed);

/// For every selected cluster, its k2 members whose mean latent is closest
/// (Euclidean) to z0_mu; ties go to the lower index. Smaller clusters
/// contribute every member.
std::vector<std::vector<std::size_t>> nns(const Eigen::VectorXd& z0_mu,
                                          std::span<const std::size_t> clusters,
                                          const cluster::ClusterModel& model,
                                          std::span<const Eigen::VectorXd> latents, std::size_t k2);

struct SelectionResult {
  std::vector<std::size_t> clusters;        // chosen cluster ids
  std::vector<std::size_t> indices;         // training-set rows, X_s
  std::vector<std::size_t> source_cluster;  // parallel to indices
  std::vector<ConditionVector> conditions;  // C_s
  std::vector<Eigen::VectorXd> latents;     // M_s (mean latents)
};

/// Cluster choice + member choice per `cfg`. `conditions` and `latents` are
/// indexed like the cluster model's assignment.
SelectionResult select(const Eigen::VectorXd& z0_mu, const ConditionVector& c0,
                       const cluster::ClusterModel& model,
                       std::span<const ConditionVector> conditions,
                       std::span<const Eigen::VectorXd> latents, const SelectionConfig& cfg);

}  // namespace cts::select
