#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <map>
#include <optional>
#include <string>

namespace cts::eval {

inline constexpr int kReportSchemaVersion = 1;

/// Classifier or detector outcome on one evaluation set.
struct Controllability {
  double accuracy = 0.0;
  std::optional<double> weighted_f1;  // interpolation
  std::optional<double> auc;          // extrapolation
};

/// One evaluation run. JSON layout:
///   schema_version, scenario,
///   fidelity {ed_mean, dtw_mean}, coherence {cfid, acd_mean},
///   controllability {accuracy, weighted_f1 | auc}, baseline {same keys},
///   counts {train, validation, generated}, measurements {name: number},
///   config {...}
/// fidelity, coherence and controllability are null for a validation-only
/// run.
struct EvalReport {
  std::string scenario;
  std::optional<double> ed_mean;
  std::optional<double> dtw_mean;
  std::optional<double> cfid;
  std::optional<double> acd_mean;
  std::optional<Controllability> controllability;
  Controllability baseline;
  std::size_t train_count = 0;
  std::size_t validation_count = 0;
  std::size_t generated_count = 0;
  std::map<std::string, double> measurements;
  nlohmann::json config = nlohmann::json::object();
};

nlohmann::json to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);

/// Throws schema_violation naming the first offending key.
void validate_report_json(const nlohmann::json& j);

}  // namespace cts::eval
