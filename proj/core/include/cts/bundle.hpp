#pragma once

#include "cts/clustering.hpp"
#include "cts/conditions.hpp"
#include "cts/dataset.hpp"
#include "cts/mapping.hpp"
#include "cts/selection.hpp"
#include "cts/vae.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cts {

/// direct: mu' = f(c0'). bracketed_linear: when exactly one numeric or
/// ordinal slot changes, mu' blends f evaluated at the selected set's values
/// of that slot (interpolating inside their range, extrapolating outside).
enum class BlendStrategy { direct, bracketed_linear };

const char* to_string(BlendStrategy b) noexcept;
BlendStrategy blend_strategy_from_string(const std::string& s);

struct GenerationSettings {
  select::SelectionConfig selection;
  mapping::MappingConfig mapping;
  BlendStrategy blend = BlendStrategy::direct;
  bool deterministic = true;
};

nlohmann::json to_json(const select::SelectionConfig& c);
nlohmann::json to_json(const mapping::MappingConfig& c);
nlohmann::json to_json(const GenerationSettings& g);
/// Missing keys keep the values already in `base`.
select::SelectionConfig selection_config_from_json(const nlohmann::json& j,
                                                   select::SelectionConfig base = {});
mapping::MappingConfig mapping_config_from_json(const nlohmann::json& j,
                                                mapping::MappingConfig base = {});
GenerationSettings generation_settings_from_json(const nlohmann::json& j,
                                                 GenerationSettings base = {});

inline constexpr int kBundleFormatVersion = 1;

/// Everything generation needs: the trained VAE, the condition clustering,
/// normalized training conditions and the cached encoder means.
struct Bundle {
  ConditionSchema schema;
  data::NormalizationMeta normalization;
  vae::VaeModel vae;
  cluster::ClusterModel clusters;
  std::vector<ConditionVector> conditions;
  std::vector<Eigen::VectorXd> latents;
  GenerationSettings generation;
  nlohmann::json training = nlohmann::json::object();

  std::size_t size() const noexcept { return conditions.size(); }
};

/// Throws missing_component / shape_mismatch when the parts disagree.
void check(const Bundle& b);

nlohmann::json to_json(const Bundle& b);
Bundle bundle_from_json(const nlohmann::json& j);

void save_bundle(const Bundle& b, const std::filesystem::path& path);
Bundle load_bundle(const std::filesystem::path& path);

/// FNV-1a over the serialized bundle.
std::uint64_t bundle_digest(const Bundle& b);

}  // namespace cts
