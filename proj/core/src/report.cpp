#include "cts/report.hpp"

#include "cts/error.hpp"

#include <set>

namespace cts::eval {

namespace {

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json controllability_json(const Controllability& c) {
  nlohmann::json j{{"accuracy", c.accuracy}};
  if (c.weighted_f1) j["weighted_f1"] = *c.weighted_f1;
  if (c.auc) j["auc"] = *c.auc;
  return j;
}

Controllability controllability_from(const nlohmann::json& j) {
  Controllability c;
  c.accuracy = j.at("accuracy").get<double>();
  if (j.contains("weighted_f1")) c.weighted_f1 = j.at("weighted_f1").get<double>();
  if (j.contains("auc")) c.auc = j.at("auc").get<double>();
  return c;
}

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

void expect(bool ok, const std::string& key, const std::string& what) {
  require(ok, ErrorCode::schema_violation, "report key '" + key + "' " + what);
}

void expect_object_keys(const nlohmann::json& j, const std::string& name,
                        std::initializer_list<const char*> keys, bool nullable) {
  expect(j.contains(name), name, "is missing");
  const auto& v = j.at(name);
  if (nullable && v.is_null()) return;
  expect(v.is_object(), name, "must be an object");
  for (const char* k : keys) {
    const std::string path = name + "." + k;
    expect(v.contains(k), path, "is missing");
    expect(v.at(k).is_number() || v.at(k).is_null(), path, "must be a number or null");
  }
}

void expect_controllability(const nlohmann::json& j, const std::string& name, bool nullable) {
  expect(j.contains(name), name, "is missing");
  const auto& v = j.at(name);
  if (nullable && v.is_null()) return;
  expect(v.is_object(), name, "must be an object");
  expect(v.contains("accuracy") && v.at("accuracy").is_number(), name + ".accuracy",
         "must be a number");
  const bool f1 = v.contains("weighted_f1");
  const bool auc = v.contains("auc");
  expect(f1 != auc, name, "must carry exactly one of weighted_f1 and auc");
  expect(v.at(f1 ? "weighted_f1" : "auc").is_number(), name, "metric must be a number");
  for (auto it = v.begin(); it != v.end(); ++it)
    expect(it.key() == "accuracy" || it.key() == "weighted_f1" || it.key() == "auc",
           name + "." + it.key(), "is not allowed");
}

}  // namespace

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["scenario"] = r.scenario;
  const bool generated = r.controllability.has_value();
  j["fidelity"] = generated ? nlohmann::json{{"ed_mean", opt(r.ed_mean)}, {"dtw_mean", opt(r.dtw_mean)}}
                            : nlohmann::json(nullptr);
  j["coherence"] = generated ? nlohmann::json{{"cfid", opt(r.cfid)}, {"acd_mean", opt(r.acd_mean)}}
                             : nlohmann::json(nullptr);
  j["controllability"] = generated ? controllability_json(*r.controllability) : nlohmann::json(nullptr);
  j["baseline"] = controllability_json(r.baseline);
  j["counts"] = {{"train", r.train_count},
                 {"validation", r.validation_count},
                 {"generated", r.generated_count}};
  j["measurements"] = r.measurements;
  j["config"] = r.config;
  return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
  validate_report_json(j);
  EvalReport r;
  r.scenario = j.at("scenario").get<std::string>();
  if (!j.at("fidelity").is_null()) {
    r.ed_mean = opt_from(j.at("fidelity"), "ed_mean");
    r.dtw_mean = opt_from(j.at("fidelity"), "dtw_mean");
  }
  if (!j.at("coherence").is_null()) {
    r.cfid = opt_from(j.at("coherence"), "cfid");
    r.acd_mean = opt_from(j.at("coherence"), "acd_mean");
  }
  if (!j.at("controllability").is_null())
    r.controllability = controllability_from(j.at("controllability"));
  r.baseline = controllability_from(j.at("baseline"));
  r.train_count = j.at("counts").at("train").get<std::size_t>();
  r.validation_count = j.at("counts").at("validation").get<std::size_t>();
  r.generated_count = j.at("counts").at("generated").get<std::size_t>();
  r.measurements = j.at("measurements").get<std::map<std::string, double>>();
  r.config = j.at("config");
  return r;
}

void validate_report_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorCode::schema_violation, "report must be a JSON object");
  expect(j.contains("schema_version") && j.at("schema_version").is_number_integer(),
         "schema_version", "must be an integer");
  expect(j.at("schema_version").get<int>() == kReportSchemaVersion, "schema_version",
         "is not " + std::to_string(kReportSchemaVersion));
  expect(j.contains("scenario") && j.at("scenario").is_string(), "scenario", "must be a string");
  expect_object_keys(j, "fidelity", {"ed_mean", "dtw_mean"}, true);
  expect_object_keys(j, "coherence", {"cfid", "acd_mean"}, true);
  expect_controllability(j, "controllability", true);
  expect_controllability(j, "baseline", false);
  expect_object_keys(j, "counts", {"train", "validation", "generated"}, false);
  for (const char* k : {"train", "validation", "generated"})
    expect(j.at("counts").at(k).is_number_unsigned(), std::string("counts.") + k,
           "must be a nonnegative integer");
  expect(j.contains("measurements") && j.at("measurements").is_object(), "measurements",
         "must be an object");
  for (auto it = j.at("measurements").begin(); it != j.at("measurements").end(); ++it)
    expect(it.value().is_number(), "measurements." + it.key(), "must be a number");
  expect(j.contains("config") && j.at("config").is_object(), "config", "must be an object");
  const bool generated = !j.at("controllability").is_null();
  expect(generated == !j.at("fidelity").is_null() && generated == !j.at("coherence").is_null(),
         "controllability", "must be null exactly when fidelity and coherence are null");
  const std::set<std::string> allowed{"schema_version", "scenario",  "fidelity",     "coherence",
                                      "controllability", "baseline", "counts",       "measurements",
                                      "config"};
  for (auto it = j.begin(); it != j.end(); ++it)
    expect(allowed.count(it.key()) == 1, it.key(), "is not allowed");
}

}  // namespace cts::eval
