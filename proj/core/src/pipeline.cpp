#include "cts/pipeline.hpp"

#include "cts/ecod.hpp"
#include "cts/error.hpp"
#include "cts/metrics.hpp"
#include "cts/rocket.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace cts::pipeline {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

nlohmann::json to_json(const PipelineConfig& c) {
  auto opt = [](const std::optional<std::size_t>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"seed", c.seed},
          {"vae",
           {{"latent_dim", c.vae.latent_dim},
            {"hidden_width", c.vae.hidden_width},
            {"hidden_layers", c.vae.hidden_layers},
            {"kl_weight", c.vae.kl_weight}}},
          {"train",
           {{"learning_rate", c.train.learning_rate},
            {"beta1", c.train.beta1},
            {"beta2", c.train.beta2},
            {"epsilon", c.train.epsilon_hat},
            {"epochs", c.train.epochs},
            {"batch_size", c.train.batch_size}}},
          {"clustering", {{"k", opt(c.k)}, {"max_iterations", c.cluster_iterations}}},
          {"selection", {{"k1", opt(c.k1)},
                         {"k2", opt(c.k2)},
                         {"strategy", select::to_string(c.generation.selection.strategy)},
                         {"neighbors", select::to_string(c.generation.selection.neighbors)}}},
          {"mapping", cts::to_json(c.generation.mapping)},
          {"blend", to_string(c.generation.blend)},
          {"deterministic", c.generation.deterministic}};
}

namespace {

void known_keys(const nlohmann::json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  require(obj.is_object(), ErrorCode::parse_error, where + " must be a JSON object");
  for (const auto& item : obj.items()) {
    bool found = false;
    for (const char* k : keys) found |= item.key() == k;
    require(found, ErrorCode::schema_violation, "unknown key '" + item.key() + "' in " + where);
  }
}

}  // namespace

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  require(j.is_object(), ErrorCode::parse_error, "pipeline config must be a JSON object");
  known_keys(j, "pipeline config",
             {"seed", "vae", "train", "clustering", "selection", "mapping", "blend", "deterministic"});
  if (j.contains("vae")) known_keys(j.at("vae"), "vae", {"latent_dim", "hidden_width", "hidden_layers", "kl_weight"});
  if (j.contains("train"))
    known_keys(j.at("train"), "train", {"learning_rate", "beta1", "beta2", "epsilon", "epochs", "batch_size"});
  if (j.contains("clustering")) known_keys(j.at("clustering"), "clustering", {"k", "max_iterations"});
  if (j.contains("selection")) known_keys(j.at("selection"), "selection", {"k1", "k2", "strategy", "neighbors"});
  auto opt = [](const nlohmann::json& obj, const char* key, std::optional<std::size_t>& out) {
    if (obj.contains(key)) {
      if (obj.at(key).is_null())
        out.reset();
      else
        out = obj.at(key).get<std::size_t>();
    }
  };
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("vae")) {
      const auto& v = j.at("vae");
      c.vae.latent_dim = v.value("latent_dim", c.vae.latent_dim);
      c.vae.hidden_width = v.value("hidden_width", c.vae.hidden_width);
      c.vae.hidden_layers = v.value("hidden_layers", c.vae.hidden_layers);
      c.vae.kl_weight = v.value("kl_weight", c.vae.kl_weight);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
      c.train.beta1 = t.value("beta1", c.train.beta1);
      c.train.beta2 = t.value("beta2", c.train.beta2);
      c.train.epsilon_hat = t.value("epsilon", c.train.epsilon_hat);
      c.train.epochs = t.value("epochs", c.train.epochs);
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
    }
    if (j.contains("clustering")) {
      opt(j.at("clustering"), "k", c.k);
      c.cluster_iterations = j.at("clustering").value("max_iterations", c.cluster_iterations);
    }
    if (j.contains("selection")) {
      const auto& s = j.at("selection");
      opt(s, "k1", c.k1);
      opt(s, "k2", c.k2);
      if (s.contains("strategy"))
        c.generation.selection.strategy =
            select::cluster_strategy_from_string(s.at("strategy").get<std::string>());
      if (s.contains("neighbors"))
        c.generation.selection.neighbors =
            select::neighbor_strategy_from_string(s.at("neighbors").get<std::string>());
    }
    if (j.contains("mapping"))
      c.generation.mapping = mapping_config_from_json(j.at("mapping"), c.generation.mapping);
    if (j.contains("blend"))
      c.generation.blend = blend_strategy_from_string(j.at("blend").get<std::string>());
    c.generation.deterministic = j.value("deterministic", c.generation.deterministic);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("pipeline config: ") + e.what());
  }
  c.train.validate();
  return c;
}

Sizes resolve_sizes(const PipelineConfig& cfg, std::size_t n, std::size_t distinct) {
  require(n > 0 && distinct > 0, ErrorCode::empty_input, "no training data to size clusters for");
  Sizes s;
  s.k = cfg.k.value_or(std::min<std::size_t>(50, distinct));
  require(s.k >= 1, ErrorCode::invalid_argument, "k must be at least 1");
  if (cfg.k1) {
    s.k1 = *cfg.k1;
  } else {
    s.k1 = (s.k + 1) / 2;
    if (s.k1 % 2 == 1) ++s.k1;
    s.k1 = std::min(s.k1, s.k);
  }
  s.k2 = cfg.k2.value_or(std::max<std::size_t>(1, (n + 2 * s.k - 1) / (2 * s.k)));
  require(s.k1 >= 1 && s.k1 <= s.k, ErrorCode::invalid_argument,
          "k1 = " + std::to_string(s.k1) + " must lie in [1, k = " + std::to_string(s.k) + "]");
  require(s.k2 >= 1, ErrorCode::invalid_argument, "k2 must be at least 1");
  return s;
}

Bundle train_phase(const data::Dataset& raw, const PipelineConfig& cfg,
                   const vae::EpochCallback& on_epoch) {
  require(!raw.empty(), ErrorCode::empty_input, "cannot train on an empty dataset");
  const data::Dataset norm = data::normalize(raw);

  vae::VaeConfig vc = cfg.vae;
  vc.length = raw.length();
  vc.channels = raw.channels();
  nn::TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, 2);
  auto trained = vae::train(vae::VaeModel::create(vc, derive_seed(cfg.seed, 1)), norm.series(), tc,
                            on_epoch);

  Bundle b;
  b.schema = raw.schema();
  b.normalization = *norm.normalization();
  b.vae = std::move(trained.model);
  b.conditions = norm.conditions();
  const auto post = vae::encode_batch(b.vae, norm.series());
  b.latents.reserve(raw.size());
  for (Eigen::Index i = 0; i < post.mu.cols(); ++i) b.latents.emplace_back(post.mu.col(i));

  b.generation = cfg.generation;
  b.generation.selection.seed = derive_seed(cfg.seed, 4);
  b.generation.mapping.tree.seed = derive_seed(cfg.seed, 5);
  const Sizes sizes = resolve_sizes(cfg, raw.size(), cluster::count_distinct(b.conditions));
  b = recluster(b, sizes, derive_seed(cfg.seed, 3), cfg.cluster_iterations);

  nlohmann::json trace = nlohmann::json::object();
  if (!trained.trace.empty()) {
    const auto& last = trained.trace.back();
    trace = {{"epochs_run", trained.trace.size()},
             {"recon", last.recon},
             {"kl", last.kl},
             {"total", last.total},
             {"initial_total", trained.trace.front().total}};
  }
  b.training = {{"config", to_json(cfg)},
                {"n", raw.size()},
                {"k", sizes.k},
                {"k1", sizes.k1},
                {"k2", sizes.k2},
                {"loss", trace}};
  return b;
}

Bundle recluster(const Bundle& b, const Sizes& sizes, std::uint64_t seed,
                 std::size_t max_iterations) {
  Bundle out = b;
  cluster::FitOptions opts;
  opts.k = sizes.k;
  opts.seed = seed;
  opts.max_iterations = max_iterations;
  out.clusters = cluster::fit(out.conditions, out.schema, opts);
  out.generation.selection.k1 = sizes.k1;
  out.generation.selection.k2 = sizes.k2;
  out.generation.selection.validate(sizes.k);
  if (out.training.is_object()) {
    out.training["k"] = sizes.k;
    out.training["k1"] = sizes.k1;
    out.training["k2"] = sizes.k2;
    out.training["cluster_seed"] = seed;
  }
  return out;
}

nlohmann::json to_json(const Provenance& p) {
  nlohmann::json j{{"clusters", p.clusters},
                   {"indices", p.indices},
                   {"selected", p.indices.size()},
                   {"mapping_loss", p.mapping_loss},
                   {"blend", p.blend},
                   {"mu_prime", std::vector<double>(p.mu_prime.data(),
                                                    p.mu_prime.data() + p.mu_prime.size())},
                   {"settings", to_json(p.settings)},
                   {"noise_seed", p.noise_seed}};
  j["blend_slot"] = p.blend_slot ? nlohmann::json(*p.blend_slot) : nlohmann::json(nullptr);
  j["witness"] = p.witness ? latent::to_json(*p.witness) : nlohmann::json(nullptr);
  return j;
}

namespace {

void reject_unseen_nominal(const Bundle& b, const ConditionVector& c) {
  for (std::size_t s = 0; s < b.schema.size(); ++s) {
    const auto& spec = b.schema.slot(s);
    if (spec.kind != SlotKind::categorical || spec.ordered) continue;
    const auto code = c.category(s);
    const bool seen = std::any_of(b.conditions.begin(), b.conditions.end(),
                                  [&](const ConditionVector& t) { return t.category(s) == code; });
    require(seen, ErrorCode::unsupported,
            "nominal slot '" + spec.name + "' value '" + b.schema.token_of(s, code) +
                "' never occurs in training; nominal values cannot be extrapolated");
  }
}

std::vector<std::size_t> changed_slots(const ConditionVector& a, const ConditionVector& b) {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < a.size(); ++s)
    if (a[s] != b[s]) out.push_back(s);
  return out;
}

}  // namespace

Eigen::VectorXd embed(const Bundle& b, const TimeSeries& raw) {
  return vae::encode(b.vae, data::normalize(raw, b.normalization)).mu;
}

Generation generate(const Bundle& b, const GenerationRequest& req) {
  const GenerationSettings s = req.overrides.value_or(b.generation);
  validate(req.c0, b.schema);
  validate(req.c0_prime, b.schema);
  require(req.x0.length() == b.vae.length() && req.x0.channels() == b.vae.channels(),
          ErrorCode::shape_mismatch, "x0 shape does not match the trained model");
  reject_unseen_nominal(b, req.c0_prime);

  const TimeSeries x0 = data::normalize(req.x0, b.normalization);
  const ConditionVector c0 = data::normalize(req.c0, b.schema, b.normalization);
  const ConditionVector c0p = data::normalize(req.c0_prime, b.schema, b.normalization);
  const auto post = vae::encode(b.vae, x0);

  select::SelectionConfig sel_cfg = s.selection;
  sel_cfg.seed = derive_seed(sel_cfg.seed, req.noise_seed);
  const auto sel = select::select(post.mu, c0, b.clusters, b.conditions, b.latents, sel_cfg);
  const auto f = mapping::fit(sel.conditions, sel.latents, b.schema, s.mapping);

  Generation g;
  Provenance& p = g.provenance;
  p.clusters = sel.clusters;
  p.indices = sel.indices;
  p.mapping_loss = f.training_loss();
  p.settings = s;
  p.noise_seed = req.noise_seed;
  p.blend = to_string(BlendStrategy::direct);

  bool blended = false;
  if (s.blend == BlendStrategy::bracketed_linear) {
    const auto changed = changed_slots(c0, c0p);
    if (changed.size() == 1) {
      const std::size_t slot = changed.front();
      const auto& spec = b.schema.slot(slot);
      if (spec.kind == SlotKind::numeric || spec.ordered) {
        std::set<ConditionSlot> values;
        for (const auto& c : sel.conditions) values.insert(c[slot]);
        if (values.size() >= 2) {
          std::vector<std::pair<double, Eigen::VectorXd>> pairs;
          for (const auto& v : values) {
            ConditionVector probe = c0p;
            probe[slot] = v;
            pairs.emplace_back(ordinal_value(b.schema, slot, v), mapping::predict(f, probe));
          }
          const auto r = latent::blend(latent::ConditionLatentPairs(std::move(pairs)),
                                       ordinal_value(b.schema, slot, c0p[slot]));
          p.mu_prime = r.mu;
          p.witness = r.witness;
          p.blend_slot = spec.name;
          p.blend = to_string(BlendStrategy::bracketed_linear);
          blended = true;
        }
      }
    }
  }
  if (!blended) p.mu_prime = mapping::predict(f, c0p);
  g.mapping = f;

  Eigen::VectorXd noise = Eigen::VectorXd::Zero(p.mu_prime.size());
  if (!s.deterministic) {
    std::mt19937_64 rng(req.noise_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = normal(rng);
  }
  const Eigen::VectorXd z = mapping::sample_latent(p.mu_prime, post.log_var, noise);
  g.series = data::denormalize(vae::decode(b.vae, z), b.normalization);
  return g;
}

nlohmann::json to_json(const Protocol& p) {
  nlohmann::json j{{"slot", p.slot},
                   {"targets", p.targets},
                   {"samples", p.samples},
                   {"rocket_kernels", p.rocket_kernels},
                   {"ecod_quantile", p.ecod_quantile},
                   {"fractions", p.fractions},
                   {"dtw_pairs", p.dtw_pairs},
                   {"seed", p.seed},
                   {"validation_only", p.validation_only}};
  j["input_value"] = p.input_value ? nlohmann::json(*p.input_value) : nlohmann::json(nullptr);
  if (p.overrides) j["overrides"] = to_json(*p.overrides);
  return j;
}

Protocol protocol_from_json(const nlohmann::json& j) {
  Protocol p;
  try {
    p.slot = j.at("slot").get<std::string>();
    p.targets = j.value("targets", p.targets);
    p.samples = j.value("samples", p.samples);
    p.rocket_kernels = j.value("rocket_kernels", p.rocket_kernels);
    p.ecod_quantile = j.value("ecod_quantile", p.ecod_quantile);
    if (j.contains("fractions")) p.fractions = j.at("fractions").get<std::array<double, 3>>();
    p.dtw_pairs = j.value("dtw_pairs", p.dtw_pairs);
    p.seed = j.value("seed", p.seed);
    p.validation_only = j.value("validation_only", p.validation_only);
    if (j.contains("input_value") && !j.at("input_value").is_null())
      p.input_value = j.at("input_value").get<double>();
    if (j.contains("overrides")) p.overrides = generation_settings_from_json(j.at("overrides"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("protocol: ") + e.what());
  }
  return p;
}

namespace {

std::string num_key(const std::string& name, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s@%g", name.c_str(), v);
  return buf;
}

struct Prepared {
  std::size_t slot = 0;
  data::Split split;
  std::vector<double> levels;  // sorted distinct slot values
};

Prepared prepare(const Bundle& b, const data::Dataset& raw, const Protocol& p) {
  require(raw.schema() == b.schema, ErrorCode::schema_violation,
          "evaluation data schema differs from the bundle schema");
  require(!raw.normalization().has_value(), ErrorCode::invalid_argument,
          "evaluation data must be in data units");
  Prepared out;
  out.slot = b.schema.require_index(p.slot);
  require(b.schema.slot(out.slot).kind == SlotKind::numeric, ErrorCode::unsupported,
          "protocol slot '" + p.slot + "' must be numeric");
  require(p.samples > 0, ErrorCode::invalid_argument, "protocol needs samples > 0");
  std::set<double> levels;
  for (const auto& c : raw.conditions()) levels.insert(c.number(out.slot));
  out.levels.assign(levels.begin(), levels.end());
  out.split = data::split(raw, p.fractions, derive_seed(p.seed, 11));
  require(!out.split.train.empty() && !out.split.validation.empty(), ErrorCode::empty_input,
          "protocol split left the fit or validation part empty");
  return out;
}

std::vector<TimeSeries> normalized_series(const Bundle& b, const data::Dataset& d) {
  std::vector<TimeSeries> out;
  out.reserve(d.size());
  for (const auto& x : d.series()) out.push_back(data::normalize(x, b.normalization));
  return out;
}

struct Drawn {
  std::vector<std::size_t> rows;  // rows of the input pool
};

const data::Dataset& input_pool(const Prepared& prep) {
  return prep.split.test.empty() ? prep.split.validation : prep.split.test;
}

std::vector<std::size_t> draw_inputs(const data::Dataset& pool, std::size_t slot, double target,
                                     const Protocol& p, std::uint64_t seed, bool exclude_target) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double v = pool.condition(i).number(slot);
    if (exclude_target && v == target) continue;
    if (p.input_value && v != *p.input_value) continue;
    candidates.push_back(i);
  }
  require(!candidates.empty(), ErrorCode::empty_input,
          "no input series available for target " + std::to_string(target));
  std::mt19937_64 rng(seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  std::vector<std::size_t> rows(p.samples);
  for (std::size_t j = 0; j < p.samples; ++j) rows[j] = candidates[j % candidates.size()];
  return rows;
}

struct GeneratedSet {
  std::vector<TimeSeries> inputs;
  std::vector<TimeSeries> outputs;
  std::vector<double> targets;
  std::vector<double> mapping_loss;
  std::vector<double> selected;
};

GeneratedSet generate_for_targets(const Bundle& b, const Prepared& prep, const Protocol& p,
                                  bool exclude_target) {
  const auto& pool = input_pool(prep);
  GeneratedSet out;
  for (std::size_t ti = 0; ti < p.targets.size(); ++ti) {
    const double t = p.targets[ti];
    const auto rows = draw_inputs(pool, prep.slot, t, p, derive_seed(p.seed, 100 + ti), exclude_target);
    for (std::size_t j = 0; j < rows.size(); ++j) {
      GenerationRequest req;
      req.x0 = pool.series(rows[j]);
      req.c0 = pool.condition(rows[j]);
      req.c0_prime = req.c0;
      req.c0_prime[prep.slot] = t;
      req.overrides = p.overrides;
      req.noise_seed = derive_seed(p.seed, 1000 + ti * p.samples + j);
      auto g = generate(b, req);
      out.inputs.push_back(req.x0);
      out.outputs.push_back(std::move(g.series));
      out.targets.push_back(t);
      out.mapping_loss.push_back(g.provenance.mapping_loss);
      out.selected.push_back(static_cast<double>(g.provenance.indices.size()));
    }
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void fill_fidelity(eval::EvalReport& r, const GeneratedSet& g) {
  std::vector<double> eds, dtws, acds;
  for (std::size_t i = 0; i < g.outputs.size(); ++i) {
    eds.push_back(eval::ed(g.outputs[i], g.inputs[i]));
    dtws.push_back(eval::dtw(g.outputs[i], g.inputs[i]));
    acds.push_back(eval::acd(g.outputs[i], g.inputs[i]));
  }
  r.ed_mean = mean_of(eds);
  r.dtw_mean = mean_of(dtws);
  r.acd_mean = mean_of(acds);
  r.generated_count = g.outputs.size();
  r.measurements["mapping_loss_mean"] = mean_of(g.mapping_loss);
  r.measurements["selected_mean"] = mean_of(g.selected);
}

nlohmann::json report_config(const Bundle& b, const Protocol& p) {
  return {{"protocol", to_json(p)},
          {"generation", to_json(p.overrides.value_or(b.generation))},
          {"bundle_training", b.training}};
}

}  // namespace

eval::EvalReport evaluate_interpolation(const Bundle& b, const data::Dataset& raw,
                                        const Protocol& p) {
  const Prepared prep = prepare(b, raw, p);
  require(prep.levels.size() >= 2, ErrorCode::invalid_argument,
          "interpolation needs at least two classes of '" + p.slot + "'");
  auto label_of = [&](double v) {
    const auto it = std::find(prep.levels.begin(), prep.levels.end(), v);
    require(it != prep.levels.end(), ErrorCode::invalid_argument,
            "target " + std::to_string(v) + " is not a class present in the evaluation data");
    return static_cast<std::size_t>(it - prep.levels.begin());
  };
  auto labels_for = [&](const data::Dataset& d) {
    std::vector<std::size_t> l;
    for (const auto& c : d.conditions()) l.push_back(label_of(c.number(prep.slot)));
    return l;
  };

  const auto fit_series = normalized_series(b, prep.split.train);
  const auto classifier =
      eval::rocket_fit(fit_series, labels_for(prep.split.train), p.rocket_kernels, derive_seed(p.seed, 12));

  eval::EvalReport r;
  r.scenario = "interpolation";
  r.train_count = prep.split.train.size();
  r.validation_count = prep.split.validation.size();
  r.config = report_config(b, p);
  {
    const auto truth = labels_for(prep.split.validation);
    std::vector<std::size_t> pred;
    for (const auto& x : normalized_series(b, prep.split.validation))
      pred.push_back(eval::rocket_predict(classifier, x).label);
    r.baseline.accuracy = eval::accuracy(truth, pred);
    r.baseline.weighted_f1 = eval::weighted_f1(truth, pred);
  }
  r.measurements["classes"] = static_cast<double>(prep.levels.size());
  if (p.validation_only) return r;
  require(!p.targets.empty(), ErrorCode::invalid_argument, "protocol has no targets");
  for (double t : p.targets) label_of(t);

  const GeneratedSet g = generate_for_targets(b, prep, p, true);
  fill_fidelity(r, g);

  std::vector<std::size_t> truth, pred;
  std::map<double, std::vector<double>> hits, p2p;
  for (std::size_t i = 0; i < g.outputs.size(); ++i) {
    truth.push_back(label_of(g.targets[i]));
    pred.push_back(eval::rocket_predict(classifier, data::normalize(g.outputs[i], b.normalization)).label);
    hits[g.targets[i]].push_back(truth.back() == pred.back() ? 1.0 : 0.0);
    p2p[g.targets[i]].push_back(eval::peak_to_peak(g.outputs[i]));
  }
  eval::Controllability c;
  c.accuracy = eval::accuracy(truth, pred);
  c.weighted_f1 = eval::weighted_f1(truth, pred);
  r.controllability = c;
  for (const auto& [t, h] : hits) r.measurements[num_key("accuracy", t)] = mean_of(h);
  for (const auto& [t, v] : p2p) r.measurements[num_key("peak_to_peak_mean", t)] = mean_of(v);

  const eval::Embedder embedder = [&](const TimeSeries& x) { return embed(b, x); };
  std::vector<double> cfids;
  for (double t : p.targets) {
    std::vector<TimeSeries> real, gen;
    for (std::size_t i = 0; i < raw.size(); ++i)
      if (raw.condition(i).number(prep.slot) == t) real.push_back(raw.series(i));
    for (std::size_t i = 0; i < g.outputs.size(); ++i)
      if (g.targets[i] == t) gen.push_back(g.outputs[i]);
    if (real.size() >= 2 && gen.size() >= 2) cfids.push_back(eval::cfid(real, gen, embedder));
  }
  if (!cfids.empty()) r.cfid = mean_of(cfids);
  return r;
}

eval::EvalReport evaluate_extrapolation(const Bundle& b, const data::Dataset& raw,
                                        const Protocol& p) {
  const Prepared prep = prepare(b, raw, p);
  const auto fit_series = normalized_series(b, prep.split.train);
  const auto val_series = normalized_series(b, prep.split.validation);
  const auto detector = eval::ecod_fit(std::span<const TimeSeries>(fit_series), p.ecod_quantile);

  eval::EvalReport r;
  r.scenario = "extrapolation";
  r.train_count = prep.split.train.size();
  r.validation_count = prep.split.validation.size();
  r.config = report_config(b, p);

  std::vector<double> val_scores;
  std::size_t val_flags = 0;
  for (const auto& x : val_series) {
    val_scores.push_back(eval::ecod_score(detector, x));
    val_flags += val_scores.back() > detector.threshold;
  }
  const double normal_rate = static_cast<double>(val_flags) / static_cast<double>(val_series.size());
  {
    std::vector<int> labels(val_scores.size(), 1);
    std::vector<double> scores = val_scores;
    for (double s : detector.training_scores) {
      labels.push_back(0);
      scores.push_back(s);
    }
    r.baseline.accuracy = 1.0 - normal_rate;
    r.baseline.auc = eval::auc(labels, scores);
  }
  r.measurements["normal_flag_rate"] = normal_rate;
  r.measurements["ecod_threshold"] = detector.threshold;
  r.measurements["dtw_within_class_median"] =
      within_class_dtw_median(raw, prep.slot, p.dtw_pairs, derive_seed(p.seed, 13));
  if (p.validation_only) return r;
  require(!p.targets.empty(), ErrorCode::invalid_argument, "protocol has no targets");

  const GeneratedSet g = generate_for_targets(b, prep, p, false);
  fill_fidelity(r, g);

  std::vector<int> labels(val_scores.size(), 0);
  std::vector<double> scores = val_scores;
  std::size_t gen_flags = 0;
  for (const auto& x : g.outputs) {
    const double s = eval::ecod_score(detector, data::normalize(x, b.normalization));
    gen_flags += s > detector.threshold;
    labels.push_back(1);
    scores.push_back(s);
  }
  const double gen_rate = static_cast<double>(gen_flags) / static_cast<double>(g.outputs.size());
  eval::Controllability c;
  c.accuracy = static_cast<double>(gen_flags + (val_series.size() - val_flags)) /
               static_cast<double>(g.outputs.size() + val_series.size());
  c.auc = eval::auc(labels, scores);
  r.controllability = c;
  r.measurements["generated_flag_rate"] = gen_rate;
  if (normal_rate > 0.0) r.measurements["flag_rate_ratio"] = gen_rate / normal_rate;
  const double median_dtw = r.measurements["dtw_within_class_median"];
  if (median_dtw > 0.0) r.measurements["dtw_ratio"] = *r.dtw_mean / median_dtw;
  std::vector<double> p2p;
  for (const auto& x : g.outputs) p2p.push_back(eval::peak_to_peak(x));
  r.measurements["peak_to_peak_mean"] = mean_of(p2p);

  std::vector<TimeSeries> real(prep.split.validation.series().begin(),
                               prep.split.validation.series().end());
  const eval::Embedder embedder = [&](const TimeSeries& x) { return embed(b, x); };
  if (real.size() >= 2 && g.outputs.size() >= 2) r.cfid = eval::cfid(real, g.outputs, embedder);
  return r;
}

std::vector<Variant> ablation_variants() {
  using select::ClusterStrategy;
  using select::NeighborStrategy;
  return {{"CTS", ClusterStrategy::dcs, NeighborStrategy::nns, std::nullopt},
          {"CTS-NNS", ClusterStrategy::dcs, NeighborStrategy::random, std::nullopt},
          {"CTS-DCS", ClusterStrategy::rand, NeighborStrategy::nns, std::nullopt},
          {"CTS-NNS-DCS", ClusterStrategy::all, NeighborStrategy::all, std::nullopt}};
}

std::vector<Variant> benchmark_grid() {
  using select::ClusterStrategy;
  using select::NeighborStrategy;
  std::vector<Variant> out;
  for (auto [prefix, strategy] : {std::pair{"Rand", ClusterStrategy::rand},
                                  std::pair{"DCS", ClusterStrategy::dcs}})
    for (auto [suffix, m] : {std::pair{"LR", mapping::Variant::linear},
                             std::pair{"RF", mapping::Variant::forest},
                             std::pair{"DT", mapping::Variant::tree}})
      out.push_back({std::string(prefix) + "-" + suffix, strategy, NeighborStrategy::nns, m});
  return out;
}

Variant variant_from_name(const std::string& name) {
  for (const auto& v : ablation_variants())
    if (v.name == name) return v;
  for (const auto& v : benchmark_grid())
    if (v.name == name) return v;
  fail(ErrorCode::invalid_argument, "unknown variant '" + name + "'");
}

std::vector<VariantReport> ablate(const Bundle& b, const data::Dataset& raw, const Protocol& p,
                                  const std::vector<Variant>& variants, Scenario scenario) {
  require(!variants.empty(), ErrorCode::invalid_argument, "no variants requested");
  std::vector<VariantReport> out;
  for (const auto& v : variants) {
    Protocol vp = p;
    GenerationSettings g = p.overrides.value_or(b.generation);
    g.selection.strategy = v.strategy;
    g.selection.neighbors = v.neighbors;
    if (v.mapping) g.mapping.variant = *v.mapping;
    vp.overrides = g;
    auto report = scenario == Scenario::interpolation ? evaluate_interpolation(b, raw, vp)
                                                      : evaluate_extrapolation(b, raw, vp);
    report.scenario += ":" + v.name;
    report.config["variant"] = v.name;
    out.push_back({v.name, std::move(report)});
  }
  return out;
}

std::vector<SweepCell> sweep(const Bundle& b, const data::Dataset& raw, const Protocol& p,
                             const SweepGrid& grid, Scenario scenario) {
  const std::size_t distinct = cluster::count_distinct(b.conditions);
  const std::size_t n = b.size();
  std::vector<SweepCell> cells;
  std::size_t cell_index = 0;
  for (std::size_t k : grid.k) {
    if (k == 0 || k > distinct) continue;
    const std::uint64_t seed = derive_seed(p.seed, 5000 + k);
    const Bundle rb = recluster(b, Sizes{k, 1, 1}, seed);
    for (double r1 : grid.k1_ratio) {
      for (double r2 : grid.k2_ratio) {
        SweepCell cell;
        cell.k = k;
        cell.k1_ratio = r1;
        cell.k2_ratio = r2;
        cell.seed = seed;
        cell.sizes.k = k;
        cell.sizes.k1 = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(r1 * k)), 1, k);
        cell.sizes.k2 = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(r2 * static_cast<double>(n) / static_cast<double>(k))));
        Protocol cp = p;
        GenerationSettings g = p.overrides.value_or(rb.generation);
        g.selection.k1 = cell.sizes.k1;
        g.selection.k2 = cell.sizes.k2;
        cp.overrides = g;
        cell.report = scenario == Scenario::interpolation ? evaluate_interpolation(rb, raw, cp)
                                                          : evaluate_extrapolation(rb, raw, cp);
        cell.report.config["cell"] = {{"index", cell_index},
                                      {"k", k},
                                      {"k1", cell.sizes.k1},
                                      {"k2", cell.sizes.k2},
                                      {"cluster_seed", seed}};
        ++cell_index;
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::ostringstream out;
  out.precision(17);
  const bool auc = !cells.empty() && cells.front().report.controllability &&
                   cells.front().report.controllability->auc.has_value();
  out << "k,k1_ratio,k2_ratio,k1,k2,seed,accuracy," << (auc ? "auc" : "weighted_f1")
      << ",ed_mean,dtw_mean,cfid,acd_mean\n";
  auto opt = [](const std::optional<double>& v) {
    std::ostringstream s;
    s.precision(17);
    if (v) s << *v;
    return s.str();
  };
  for (const auto& c : cells) {
    const auto& r = c.report;
    const auto ctl = r.controllability.value_or(r.baseline);
    out << c.k << ',' << c.k1_ratio << ',' << c.k2_ratio << ',' << c.sizes.k1 << ','
        << c.sizes.k2 << ',' << c.seed << ',' << ctl.accuracy << ','
        << opt(auc ? ctl.auc : ctl.weighted_f1) << ',' << opt(r.ed_mean) << ','
        << opt(r.dtw_mean) << ',' << opt(r.cfid) << ',' << opt(r.acd_mean) << '\n';
  }
  return out.str();
}

double within_class_dtw_median(const data::Dataset& raw, std::size_t slot, std::size_t pairs,
                               std::uint64_t seed) {
  std::map<ConditionSlot, std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < raw.size(); ++i) classes[raw.condition(i)[slot]].push_back(i);
  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  std::vector<const std::vector<std::size_t>*> groups;
  std::size_t total = 0;
  for (const auto& [key, rows] : classes)
    if (rows.size() >= 2) {
      groups.push_back(&rows);
      total += rows.size() * (rows.size() - 1) / 2;
    }
  require(total > 0, ErrorCode::empty_input, "no class has two series to compare");
  if (total <= pairs) {
    for (const auto* g : groups)
      for (std::size_t a = 0; a < g->size(); ++a)
        for (std::size_t c = a + 1; c < g->size(); ++c) candidates.emplace_back((*g)[a], (*g)[c]);
  } else {
    std::vector<std::size_t> eligible;
    for (const auto* g : groups) eligible.insert(eligible.end(), g->begin(), g->end());
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    while (candidates.size() < pairs) {
      const std::size_t i = eligible[pick(rng)];
      const auto& rows = classes.at(raw.condition(i)[slot]);
      std::uniform_int_distribution<std::size_t> other(0, rows.size() - 1);
      const std::size_t j = rows[other(rng)];
      if (i != j) candidates.emplace_back(i, j);
    }
  }
  std::vector<double> d;
  d.reserve(candidates.size());
  for (auto [i, j] : candidates) d.push_back(eval::dtw(raw.series(i), raw.series(j)));
  return eval::median(std::move(d));
}

}  // namespace cts::pipeline
