#include "cts/clustering.hpp"

#include "cts/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>

namespace cts::cluster {

const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::kmeans: return "kmeans";
    case Method::kmodes: return "kmodes";
    case Method::kprototypes: return "kprototypes";
  }
  return "kprototypes";
}

Method method_for(const ConditionSchema& schema) noexcept {
  if (schema.categorical_count() == 0) return Method::kmeans;
  if (schema.numeric_count() == 0) return Method::kmodes;
  return Method::kprototypes;
}

double dissimilarity(const ConditionVector& a, const ConditionVector& b,
                     const ConditionSchema& schema, double gamma) {
  require(a.size() == schema.size() && b.size() == schema.size(), ErrorCode::schema_violation,
          "dissimilarity operands do not match the schema");
  double numeric = 0.0;
  double mismatches = 0.0;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema.slot(i).kind == SlotKind::numeric) {
      const double d = a.number(i) - b.number(i);
      numeric += d * d;
    } else {
      mismatches += a.category(i) != b.category(i) ? 1.0 : 0.0;
    }
  }
  return numeric + gamma * mismatches;
}

double default_gamma(std::span<const ConditionVector> conditions, const ConditionSchema& schema) {
  if (schema.numeric_count() == 0 || conditions.empty()) return 1.0;
  double total_sd = 0.0;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema.slot(i).kind != SlotKind::numeric) continue;
    double mean = 0.0;
    for (const auto& c : conditions) mean += c.number(i);
    mean /= static_cast<double>(conditions.size());
    double var = 0.0;
    for (const auto& c : conditions) var += (c.number(i) - mean) * (c.number(i) - mean);
    total_sd += std::sqrt(var / static_cast<double>(conditions.size()));
  }
  return 0.5 * total_sd / static_cast<double>(schema.numeric_count());
}

ClusterModel::ClusterModel(ConditionSchema schema, double gamma, std::vector<ConditionVector> centers,
                           std::vector<std::size_t> assignment, std::size_t iterations_run,
                           std::vector<double> objective_trace)
    : schema_(std::move(schema)),
      gamma_(gamma),
      centers_(std::move(centers)),
      assignment_(std::move(assignment)),
      iterations_run_(iterations_run),
      objective_trace_(std::move(objective_trace)) {
  require(!centers_.empty(), ErrorCode::invalid_argument, "cluster model needs at least one center");
  require(gamma_ >= 0.0 && std::isfinite(gamma_), ErrorCode::invalid_argument,
          "gamma must be finite and nonnegative");
  for (const auto& c : centers_) validate(c, schema_);
  members_.assign(centers_.size(), {});
  for (std::size_t i = 0; i < assignment_.size(); ++i) {
    require(assignment_[i] < centers_.size(), ErrorCode::invalid_argument,
            "assignment refers to a cluster that does not exist");
    members_[assignment_[i]].push_back(i);
  }
}

ConditionVector center_of(std::span<const ConditionVector> conditions,
                          std::span<const std::size_t> members, const ConditionSchema& schema) {
  require(!members.empty(), ErrorCode::empty_input, "center of an empty member set");
  std::vector<ConditionSlot> slots;
  slots.reserve(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema.slot(i).kind == SlotKind::numeric) {
      double sum = 0.0;
      for (auto m : members) sum += conditions[m].number(i);
      slots.emplace_back(sum / static_cast<double>(members.size()));
    } else {
      std::vector<std::size_t> counts(schema.slot(i).vocabulary.size(), 0);
      for (auto m : members) ++counts[conditions[m].category(i).value];
      std::size_t best = 0;
      for (std::size_t v = 1; v < counts.size(); ++v) {
        if (counts[v] > counts[best] ||
            (counts[v] == counts[best] && schema.slot(i).vocabulary[v] < schema.slot(i).vocabulary[best]))
          best = v;
      }
      slots.emplace_back(CategoryCode{static_cast<std::uint32_t>(best)});
    }
  }
  return ConditionVector(std::move(slots));
}

namespace {

std::size_t nearest(const std::vector<ConditionVector>& centers, const ConditionVector& c,
                    const ConditionSchema& schema, double gamma, double* best_out = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < centers.size(); ++j) {
    const double d = dissimilarity(c, centers[j], schema, gamma);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  if (best_out) *best_out = best_d;
  return best;
}


std::vector<ConditionVector> seed_centers(std::span<const ConditionVector> conditions,
                                          const ConditionSchema& schema, double gamma,
                                          std::size_t k, std::mt19937_64& rng) {
  const auto n = conditions.size();
  std::vector<ConditionVector> centers;
  centers.reserve(k);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  centers.push_back(conditions[pick(rng)]);
  std::vector<double> weight(n);
  for (std::size_t i = 0; i < n; ++i)
    weight[i] = dissimilarity(conditions[i], centers.back(), schema, gamma);
  while (centers.size() < k) {
    double total = 0.0;
    for (double w : weight) total += w;
    std::size_t chosen = n;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      const double r = u(rng);
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (weight[i] <= 0.0) continue;
        acc += weight[i];
        chosen = i;
        if (acc >= r) break;
      }
    }
    if (chosen == n) {
      // Zero-weight everywhere: points coincide with centers under the
      // dissimilarity (gamma = 0 corner). Take the first unseen vector.
      for (std::size_t i = 0; i < n && chosen == n; ++i)
        if (std::find(centers.begin(), centers.end(), conditions[i]) == centers.end()) chosen = i;
      require(chosen != n, ErrorCode::invalid_argument, "not enough distinct condition vectors");
    }
    centers.push_back(conditions[chosen]);
    for (std::size_t i = 0; i < n; ++i)
      weight[i] = std::min(weight[i], dissimilarity(conditions[i], centers.back(), schema, gamma));
  }
  return centers;
}

}  // namespace

std::size_t count_distinct(std::span<const ConditionVector> conditions) {
  std::vector<const ConditionVector*> ptrs;
  ptrs.reserve(conditions.size());
  for (const auto& c : conditions) ptrs.push_back(&c);
  auto less = [](const ConditionVector* a, const ConditionVector* b) {
    return a->slots() < b->slots();
  };
  std::sort(ptrs.begin(), ptrs.end(), less);
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < ptrs.size(); ++i)
    if (i == 0 || *ptrs[i] != *ptrs[i - 1]) ++distinct;
  return distinct;
}

ClusterModel fit(std::span<const ConditionVector> conditions, const ConditionSchema& schema,
                 const FitOptions& options) {
  require(!conditions.empty(), ErrorCode::empty_input, "cannot cluster an empty condition set");
  require(options.k >= 1, ErrorCode::invalid_argument, "k must be at least 1");
  require(options.max_iterations >= 1, ErrorCode::invalid_argument, "max_iterations must be at least 1");
  for (const auto& c : conditions) validate(c, schema);
  const auto distinct = count_distinct(conditions);
  require(options.k <= distinct, ErrorCode::invalid_argument,
          "k = " + std::to_string(options.k) + " exceeds the " + std::to_string(distinct) +
              " distinct condition vectors");

  const double gamma = options.gamma.value_or(default_gamma(conditions, schema));
  require(gamma >= 0.0 && std::isfinite(gamma), ErrorCode::invalid_argument,
          "gamma must be finite and nonnegative");
  std::mt19937_64 rng(options.seed);
  auto centers = seed_centers(conditions, schema, gamma, options.k, rng);

  const auto n = conditions.size();
  std::vector<std::size_t> assignment(n, 0);
  std::vector<double> trace;
  std::size_t iterations = 0;
  for (; iterations < options.max_iterations; ++iterations) {
    bool changed = iterations == 0;
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = 0.0;
      const auto j = nearest(centers, conditions[i], schema, gamma, &d);
      if (j != assignment[i]) changed = true;
      assignment[i] = j;
      objective += d;
    }
    trace.push_back(objective);
    if (!changed) break;

    std::vector<std::vector<std::size_t>> members(centers.size());
    for (std::size_t i = 0; i < n; ++i) members[assignment[i]].push_back(i);
    for (std::size_t j = 0; j < centers.size(); ++j) {
      if (!members[j].empty()) {
        centers[j] = center_of(conditions, members[j], schema);
        continue;
      }
      // Empty cluster: move its center to the point farthest from it.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = dissimilarity(conditions[i], centers[j], schema, gamma);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      centers[j] = conditions[far];
    }
  }
  if (iterations == options.max_iterations) {
    // Capped: make the stored assignment consistent with the final centers.
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = 0.0;
      assignment[i] = nearest(centers, conditions[i], schema, gamma, &d);
      objective += d;
    }
    trace.push_back(objective);
  } else {
    ++iterations;
  }
  return ClusterModel(schema, gamma, std::move(centers), std::move(assignment), iterations,
                      std::move(trace));
}

std::size_t assign(const ClusterModel& model, const ConditionVector& c) {
  validate(c, model.schema());
  return nearest(model.centers(), c, model.schema(), model.gamma());
}

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  require(a.size() == b.size() && !a.empty(), ErrorCode::shape_mismatch,
          "adjusted Rand index needs two equal-length nonempty labelings");
  std::map<std::pair<std::size_t, std::size_t>, double> table;
  std::map<std::size_t, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [key, v] : table) index += choose2(v);
  for (const auto& [key, v] : rows) sum_rows += choose2(v);
  for (const auto& [key, v] : cols) sum_cols += choose2(v);
  const double total = choose2(static_cast<double>(a.size()));
  const double expected = total > 0.0 ? sum_rows * sum_cols / total : 0.0;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

nlohmann::json to_json(const ClusterModel& model) {
  auto centers = nlohmann::json::array();
  for (const auto& c : model.centers()) centers.push_back(to_json(c, model.schema()));
  return nlohmann::json{
      {"method", to_string(model.method())},
      {"k", model.k()},
      {"gamma", model.gamma()},
      {"schema_hash", std::to_string(model.schema().hash())},
      {"schema", to_json(model.schema())},
      {"centers", std::move(centers)},
      {"assignment", model.assignment()},
      {"iterations_run", model.iterations_run()},
      {"objective_trace", model.objective_trace()},
  };
}

ClusterModel cluster_model_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("schema") && j.contains("centers") && j.contains("assignment"),
          ErrorCode::parse_error, "cluster JSON needs schema, centers and assignment");
  auto schema = schema_from_json(j["schema"]);
  if (j.contains("schema_hash"))
    require(j["schema_hash"].get<std::string>() == std::to_string(schema.hash()),
            ErrorCode::version_mismatch, "cluster model schema hash does not match its schema");
  std::vector<ConditionVector> centers;
  for (const auto& c : j["centers"]) centers.push_back(condition_from_json(c, schema));
  return ClusterModel(std::move(schema), j.at("gamma").get<double>(), std::move(centers),
                      j["assignment"].get<std::vector<std::size_t>>(),
                      j.value("iterations_run", std::size_t{0}),
                      j.value("objective_trace", std::vector<double>{}));
}

}  // namespace cts::cluster
