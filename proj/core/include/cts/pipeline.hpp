#pragma once

#include "cts/bundle.hpp"
#include "cts/dataset.hpp"
#include "cts/latent_algebra.hpp"
#include "cts/nn.hpp"
#include "cts/report.hpp"
#include "cts/vae.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cts::pipeline {

struct PipelineConfig {
  vae::VaeConfig vae;  // length and channels come from the data
  nn::TrainConfig train;
  std::optional<std::size_t> k;   // default min(50, distinct conditions)
  std::optional<std::size_t> k1;  // default ceil(k / 2) rounded up to even, at most k
  std::optional<std::size_t> k2;  // default ceil(n / (2 k))
  std::size_t cluster_iterations = 100;
  GenerationSettings generation;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const PipelineConfig& c);
/// Missing keys keep their defaults.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

/// Deterministic 64-bit stream seed derived from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept;

struct Sizes {
  std::size_t k = 0;
  std::size_t k1 = 0;
  std::size_t k2 = 0;
};

Sizes resolve_sizes(const PipelineConfig& cfg, std::size_t n, std::size_t distinct);

/// Normalizes the data, trains the VAE, clusters the conditions and caches
/// every training series' encoder mean.
Bundle train_phase(const data::Dataset& raw, const PipelineConfig& cfg,
                   const vae::EpochCallback& on_epoch = {});

/// Re-clusters an existing bundle; the VAE and latent cache are reused.
Bundle recluster(const Bundle& b, const Sizes& sizes, std::uint64_t seed,
                 std::size_t max_iterations = 100);

struct GenerationRequest {
  TimeSeries x0;                   // data units
  ConditionVector c0;              // data units
  ConditionVector c0_prime;        // data units
  std::optional<GenerationSettings> overrides;
  std::uint64_t noise_seed = 0;    // used when generation is not deterministic
};

struct Provenance {
  std::vector<std::size_t> clusters;
  std::vector<std::size_t> indices;
  double mapping_loss = 0.0;
  std::string blend;                         // strategy actually applied
  std::optional<std::string> blend_slot;
  std::optional<latent::BlendWitness> witness;
  Eigen::VectorXd mu_prime;
  GenerationSettings settings;
  std::uint64_t noise_seed = 0;
};

nlohmann::json to_json(const Provenance& p);

struct Generation {
  TimeSeries series;  // data units
  Provenance provenance;
  mapping::MappingModel mapping;  // f as fitted for this request
};

/// select -> fit the mapping on the selected set -> predict or blend mu'
/// -> sample z' -> decode. The bundle is never modified.
Generation generate(const Bundle& b, const GenerationRequest& req);

/// Encoder mean of a series given in data units.
Eigen::VectorXd embed(const Bundle& b, const TimeSeries& raw);

struct Protocol {
  std::string slot;              // numeric slot that is moved
  std::vector<double> targets;   // requested values, data units
  std::size_t samples = 64;      // generated series per target
  std::size_t rocket_kernels = 1000;
  double ecod_quantile = 0.95;
  std::array<double, 3> fractions{0.6, 0.2, 0.2};  // fit / validation / input pool
  std::optional<double> input_value;  // only draw inputs whose slot equals this
  std::size_t dtw_pairs = 500;        // within-class pairs sampled for the DTW reference
  std::uint64_t seed = 0;
  bool validation_only = false;
  std::optional<GenerationSettings> overrides;
};

nlohmann::json to_json(const Protocol& p);
Protocol protocol_from_json(const nlohmann::json& j);

/// ROCKET trained on the fit split, scored on the validation split
/// (baseline) and on series generated at every target.
eval::EvalReport evaluate_interpolation(const Bundle& b, const data::Dataset& raw,
                                        const Protocol& p);

/// ECOD trained on the fit split of normal data; generated series at the
/// targets are the positive class, validation normals the negative class.
eval::EvalReport evaluate_extrapolation(const Bundle& b, const data::Dataset& raw,
                                        const Protocol& p);

enum class Scenario { interpolation, extrapolation };

struct Variant {
  std::string name;
  select::ClusterStrategy strategy = select::ClusterStrategy::dcs;
  select::NeighborStrategy neighbors = select::NeighborStrategy::nns;
  std::optional<mapping::Variant> mapping;  // keep the bundle's when unset
};

/// CTS, CTS-NNS, CTS-DCS, CTS-NNS-DCS
std::vector<Variant> ablation_variants();
/// Rand-LR, Rand-RF, Rand-DT, DCS-LR, DCS-RF, DCS-DT
std::vector<Variant> benchmark_grid();
Variant variant_from_name(const std::string& name);

struct VariantReport {
  std::string name;
  eval::EvalReport report;
};

std::vector<VariantReport> ablate(const Bundle& b, const data::Dataset& raw, const Protocol& p,
                                  const std::vector<Variant>& variants, Scenario scenario);

struct SweepGrid {
  std::vector<std::size_t> k{5, 10, 20, 50, 100, 150};
  std::vector<double> k1_ratio{0.5};
  std::vector<double> k2_ratio{0.5};
};

struct SweepCell {
  std::size_t k = 0;
  double k1_ratio = 0.0;
  double k2_ratio = 0.0;
  Sizes sizes;
  std::uint64_t seed = 0;
  eval::EvalReport report;
};

/// One evaluation per grid cell. k values above the distinct condition
/// count are skipped.
std::vector<SweepCell> sweep(const Bundle& b, const data::Dataset& raw, const Protocol& p,
                             const SweepGrid& grid, Scenario scenario);

/// k,k1_ratio,k2_ratio,k1,k2,seed,accuracy,<weighted_f1|auc>,ed_mean,dtw_mean,cfid,acd_mean
std::string sweep_csv(const std::vector<SweepCell>& cells);

/// Median DTW over seeded same-class pairs; the class is the slot value.
double within_class_dtw_median(const data::Dataset& raw, std::size_t slot, std::size_t pairs,
                               std::uint64_t seed);

}  // namespace cts::pipeline
