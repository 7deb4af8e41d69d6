#include "cts/bundle.hpp"

#include "cts/error.hpp"

#include <fstream>

namespace cts {

const char* to_string(BlendStrategy b) noexcept {
  return b == BlendStrategy::direct ? "direct" : "bracketed-linear";
}

BlendStrategy blend_strategy_from_string(const std::string& s) {
  if (s == "direct") return BlendStrategy::direct;
  if (s == "bracketed-linear" || s == "bracketed_linear") return BlendStrategy::bracketed_linear;
  fail(ErrorCode::invalid_argument, "unknown blend strategy '" + s + "'");
}

nlohmann::json to_json(const select::SelectionConfig& c) {
  return {{"k1", c.k1},
          {"k2", c.k2},
          {"strategy", select::to_string(c.strategy)},
          {"neighbors", select::to_string(c.neighbors)},
          {"seed", c.seed}};
}

nlohmann::json to_json(const mapping::MappingConfig& c) {
  nlohmann::json j{{"variant", mapping::to_string(c.variant)},
                   {"max_depth", c.tree.max_depth == mapping::kUnboundedDepth
                                     ? nlohmann::json(nullptr)
                                     : nlohmann::json(c.tree.max_depth)},
                   {"min_samples_leaf", c.tree.min_samples_leaf},
                   {"seed", c.tree.seed},
                   {"trees", c.tree.trees},
                   {"bootstrap", c.tree.bootstrap},
                   {"ridge_lambda", c.ridge_lambda}};
  j["feature_subset"] = c.tree.feature_subset ? nlohmann::json(*c.tree.feature_subset)
                                              : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const GenerationSettings& g) {
  return {{"selection", to_json(g.selection)},
          {"mapping", to_json(g.mapping)},
          {"blend", to_string(g.blend)},
          {"deterministic", g.deterministic}};
}

select::SelectionConfig selection_config_from_json(const nlohmann::json& j,
                                                   select::SelectionConfig c) {
  try {
    c.k1 = j.value("k1", c.k1);
    c.k2 = j.value("k2", c.k2);
    if (j.contains("strategy"))
      c.strategy = select::cluster_strategy_from_string(j.at("strategy").get<std::string>());
    if (j.contains("neighbors"))
      c.neighbors = select::neighbor_strategy_from_string(j.at("neighbors").get<std::string>());
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("selection config: ") + e.what());
  }
  return c;
}

mapping::MappingConfig mapping_config_from_json(const nlohmann::json& j, mapping::MappingConfig c) {
  try {
    if (j.contains("variant"))
      c.variant = mapping::variant_from_string(j.at("variant").get<std::string>());
    if (j.contains("max_depth"))
      c.tree.max_depth = j.at("max_depth").is_null() ? mapping::kUnboundedDepth
                                                      : j.at("max_depth").get<std::size_t>();
    c.tree.min_samples_leaf = j.value("min_samples_leaf", c.tree.min_samples_leaf);
    c.tree.seed = j.value("seed", c.tree.seed);
    c.tree.trees = j.value("trees", c.tree.trees);
    c.tree.bootstrap = j.value("bootstrap", c.tree.bootstrap);
    if (j.contains("feature_subset")) {
      if (j.at("feature_subset").is_null())
        c.tree.feature_subset.reset();
      else
        c.tree.feature_subset = j.at("feature_subset").get<std::size_t>();
    }
    c.ridge_lambda = j.value("ridge_lambda", c.ridge_lambda);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("mapping config: ") + e.what());
  }
  c.tree.validate();
  require(c.ridge_lambda >= 0.0, ErrorCode::invalid_argument, "ridge_lambda must be nonnegative");
  return c;
}

GenerationSettings generation_settings_from_json(const nlohmann::json& j, GenerationSettings g) {
  if (j.contains("selection")) g.selection = selection_config_from_json(j.at("selection"), g.selection);
  if (j.contains("mapping")) g.mapping = mapping_config_from_json(j.at("mapping"), g.mapping);
  try {
    if (j.contains("blend")) g.blend = blend_strategy_from_string(j.at("blend").get<std::string>());
    g.deterministic = j.value("deterministic", g.deterministic);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("generation settings: ") + e.what());
  }
  return g;
}

void check(const Bundle& b) {
  require(b.vae.latent_dim() > 0, ErrorCode::missing_component, "bundle has no VAE");
  require(b.clusters.k() > 0, ErrorCode::missing_component, "bundle has no cluster model");
  require(!b.normalization.empty(), ErrorCode::missing_component, "bundle has no normalization");
  require(!b.conditions.empty(), ErrorCode::missing_component, "bundle has no training conditions");
  require(b.conditions.size() == b.latents.size() &&
              b.conditions.size() == b.clusters.assignment().size(),
          ErrorCode::shape_mismatch, "bundle conditions, latents and assignment differ in count");
  require(b.clusters.schema() == b.schema, ErrorCode::schema_violation,
          "cluster model schema differs from the bundle schema");
  require(b.normalization.series_min.size() == b.vae.channels() &&
              b.normalization.condition_min.size() == b.schema.size(),
          ErrorCode::shape_mismatch, "normalization does not match the VAE or schema");
  for (const auto& mu : b.latents)
    require(static_cast<std::size_t>(mu.size()) == b.vae.latent_dim(), ErrorCode::shape_mismatch,
            "cached latent has the wrong length");
}

nlohmann::json to_json(const Bundle& b) {
  check(b);
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& c : b.conditions) conds.push_back(to_json(c, b.schema));
  nlohmann::json lat = nlohmann::json::array();
  for (const auto& mu : b.latents) lat.push_back(std::vector<double>(mu.data(), mu.data() + mu.size()));
  return {{"format_version", kBundleFormatVersion},
          {"schema", to_json(b.schema)},
          {"normalization", data::to_json(b.normalization)},
          {"vae", vae::to_json(b.vae)},
          {"clusters", cluster::to_json(b.clusters)},
          {"conditions", conds},
          {"latents", lat},
          {"generation", to_json(b.generation)},
          {"training", b.training}};
}

Bundle bundle_from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorCode::parse_error, "bundle must be a JSON object");
  require(j.contains("format_version"), ErrorCode::missing_component, "bundle has no format_version");
  const auto version = j.at("format_version");
  require(version.is_number_integer() && version.get<int>() == kBundleFormatVersion,
          ErrorCode::version_mismatch,
          "bundle format_version " + version.dump() + " is not supported (expected " +
              std::to_string(kBundleFormatVersion) + ")");
  for (const char* key : {"schema", "normalization", "vae", "clusters", "conditions", "latents"})
    require(j.contains(key) && !j.at(key).is_null(), ErrorCode::missing_component,
            std::string("bundle is missing '") + key + "'");
  Bundle b;
  b.schema = schema_from_json(j.at("schema"));
  b.normalization = data::normalization_from_json(j.at("normalization"));
  b.vae = vae::vae_from_json(j.at("vae"));
  b.clusters = cluster::cluster_model_from_json(j.at("clusters"));
  try {
    for (const auto& c : j.at("conditions")) b.conditions.push_back(condition_from_json(c, b.schema));
    for (const auto& l : j.at("latents")) {
      const auto v = l.get<std::vector<double>>();
      b.latents.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("bundle: ") + e.what());
  }
  if (j.contains("generation")) b.generation = generation_settings_from_json(j.at("generation"));
  if (j.contains("training")) b.training = j.at("training");
  check(b);
  return b;
}

void save_bundle(const Bundle& b, const std::filesystem::path& path) {
  const std::string text = to_json(b).dump();
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::io_error, "cannot write " + path.string());
  out << text << '\n';
  require(out.good(), ErrorCode::io_error, "write to " + path.string() + " failed");
}

Bundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io_error, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, path.filename().string() + ": " + e.what());
  }
  return bundle_from_json(j);
}

std::uint64_t bundle_digest(const Bundle& b) {
  const std::string text = to_json(b).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace cts
