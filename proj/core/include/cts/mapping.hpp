#pragma once

#include "cts/conditions.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace cts::mapping {

enum class Variant { linear, tree, forest };

const char* to_string(Variant v) noexcept;
Variant variant_from_string(const std::string& s);

inline constexpr std::size_t kUnboundedDepth = std::numeric_limits<std::size_t>::max();

struct TreeConfig {
  std::size_t max_depth = 8;
  std::size_t min_samples_leaf = 1;
  std::uint64_t seed = 0;
  // forest only
  std::size_t trees = 20;
  bool bootstrap = true;
  std::optional<std::size_t> feature_subset;  // default ceil(sqrt(features))

  void validate() const;
};

struct MappingConfig {
  Variant variant = Variant::tree;
  TreeConfig tree;
  double ridge_lambda = 1e-6;
};

/// Design-matrix column for one condition slot value.
struct FeatureColumn {
  std::size_t slot = 0;
  std::optional<std::uint32_t> category;  // set for one-hot columns
  std::string name;                       // "slot" or "slot=token"
};

/// Numeric slots pass through; categorical slots expand one-hot in
/// vocabulary order. Columns follow schema order.
std::vector<FeatureColumn> feature_columns(const ConditionSchema& schema);
Eigen::MatrixXd encode_conditions(std::span<const ConditionVector> conditions,
                                  const ConditionSchema& schema);
Eigen::VectorXd encode_condition(const ConditionVector& c, const ConditionSchema& schema);

/// Node of a multi-output CART tree. Internal nodes send x[feature] <=
/// threshold left; leaves hold the mean target of their samples.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  Eigen::VectorXd value;
  std::size_t samples = 0;
  double impurity = 0.0;  // summed squared error around the node mean
  double gain = 0.0;      // impurity decrease of this node's split

  bool is_leaf() const noexcept { return feature < 0; }
};

class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes);

  /// Exhaustive split search over midpoints of sorted distinct values,
  /// minimising summed per-output squared error. When `feature_subset` is
  /// set, each node scans only that many randomly chosen features.
  static RegressionTree fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                            std::span<const std::size_t> rows, const TreeConfig& cfg,
                            std::optional<std::size_t> feature_subset, std::mt19937_64& rng);

  const Eigen::VectorXd& predict(const Eigen::Ref<const Eigen::VectorXd>& row) const;
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t leaf_count() const noexcept;
  std::size_t depth() const noexcept;

 private:
  std::vector<TreeNode> nodes_;
};

class MappingModel {
 public:
  Variant variant() const noexcept { return variant_; }
  const ConditionSchema& schema() const noexcept { return schema_; }
  std::size_t output_dim() const noexcept { return output_dim_; }
  const std::vector<FeatureColumn>& columns() const noexcept { return columns_; }

  /// Mean squared l2 error of predictions on the fitting rows.
  double training_loss() const noexcept { return training_loss_; }

  const Eigen::MatrixXd& coefficients() const noexcept { return coefficients_; }  // features x d_l
  const Eigen::VectorXd& intercept() const noexcept { return intercept_; }
  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }

  Eigen::VectorXd predict_encoded(const Eigen::Ref<const Eigen::VectorXd>& row) const;

 private:
  friend MappingModel fit(std::span<const ConditionVector>, std::span<const Eigen::VectorXd>,
                          const ConditionSchema&, const MappingConfig&);
  friend MappingModel mapping_model_from_json(const nlohmann::json&);

  Variant variant_ = Variant::tree;
  ConditionSchema schema_;
  std::vector<FeatureColumn> columns_;
  std::size_t output_dim_ = 0;
  double training_loss_ = 0.0;
  Eigen::MatrixXd coefficients_;
  Eigen::VectorXd intercept_;
  std::vector<RegressionTree> trees_;
};

/// Fits f: condition -> mean latent by least squares. Linear is the ridge
/// normal-equations solution with an unpenalised intercept.
MappingModel fit(std::span<const ConditionVector> conditions,
                 std::span<const Eigen::VectorXd> targets, const ConditionSchema& schema,
                 const MappingConfig& cfg);

Eigen::VectorXd predict(const MappingModel& model, const ConditionVector& c);

/// z' = mu' + exp(log_var / 2) * noise
Eigen::VectorXd sample_latent(const Eigen::VectorXd& mu_prime, const Eigen::VectorXd& log_var,
                              const Eigen::VectorXd& noise);

struct Explanation {
  bool linear = false;                 // coefficients are reported instead of rules
  std::string rules;                   // indented depth-first listing
  nlohmann::json tree = nullptr;       // nested JSON tree (first tree for forests)
  std::vector<std::string> conditions; // slot names, schema order
  std::vector<double> importance;      // per slot, sums to 1 when any split exists
};

Explanation explain(const MappingModel& model);

nlohmann::json to_json(const MappingModel& model);
MappingModel mapping_model_from_json(const nlohmann::json& j);

}  // namespace cts::mapping
