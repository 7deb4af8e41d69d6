#pragma once

#include "cts/conditions.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cts::cluster {

/// k-means for all-numeric schemas, k-modes for all-categorical ones,
/// k-prototypes for a mix.
enum class Method { kmeans, kmodes, kprototypes };

const char* to_string(Method m) noexcept;
Method method_for(const ConditionSchema& schema) noexcept;

/// Squared Euclidean distance over numeric slots plus gamma times the
/// number of mismatching categorical slots.
double dissimilarity(const ConditionVector& a, const ConditionVector& b,
                     const ConditionSchema& schema, double gamma);

/// Half the mean per-slot standard deviation of the numeric slots, or 1
/// when the schema has no numeric slot.
double default_gamma(std::span<const ConditionVector> conditions, const ConditionSchema& schema);

/// Number of distinct condition vectors.
std::size_t count_distinct(std::span<const ConditionVector> conditions);

struct FitOptions {
  std::size_t k = 0;
  std::size_t max_iterations = 100;
  std::uint64_t seed = 0;
  std::optional<double> gamma;
};

class ClusterModel {
 public:
  ClusterModel() = default;
  ClusterModel(ConditionSchema schema, double gamma, std::vector<ConditionVector> centers,
               std::vector<std::size_t> assignment, std::size_t iterations_run,
               std::vector<double> objective_trace);

  std::size_t k() const noexcept { return centers_.size(); }
  Method method() const noexcept { return method_for(schema_); }
  const ConditionSchema& schema() const noexcept { return schema_; }
  double gamma() const noexcept { return gamma_; }
  const std::vector<ConditionVector>& centers() const noexcept { return centers_; }
  const ConditionVector& center(std::size_t j) const { return centers_.at(j); }
  const std::vector<std::size_t>& assignment() const noexcept { return assignment_; }
  std::size_t cluster_of(std::size_t index) const { return assignment_.at(index); }
  const std::vector<std::size_t>& members(std::size_t j) const { return members_.at(j); }
  std::size_t iterations_run() const noexcept { return iterations_run_; }

  /// Objective after each assignment step; non-increasing.
  const std::vector<double>& objective_trace() const noexcept { return objective_trace_; }

 private:
  ConditionSchema schema_;
  double gamma_ = 0.0;
  std::vector<ConditionVector> centers_;
  std::vector<std::size_t> assignment_;
  std::vector<std::vector<std::size_t>> members_;
  std::size_t iterations_run_ = 0;
  std::vector<double> objective_trace_;
};

/// Lloyd iterations from k-means++-style seeding under the mixed
/// dissimilarity. Requires 1 <= k <= number of distinct condition vectors.
ClusterModel fit(std::span<const ConditionVector> conditions, const ConditionSchema& schema,
                 const FitOptions& options);

/// Nearest center; ties go to the lowest cluster index.
std::size_t assign(const ClusterModel& model, const ConditionVector& c);

/// Center of a member set: slot-wise mean for numeric slots, mode for
/// categorical ones (ties to the lexicographically smallest token).
ConditionVector center_of(std::span<const ConditionVector> conditions,
                          std::span<const std::size_t> members, const ConditionSchema& schema);

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

nlohmann::json to_json(const ClusterModel& model);
ClusterModel cluster_model_from_json(const nlohmann::json& j);

}  // namespace cts::cluster
