#include "cts/bundle.hpp"
#include "cts/dataset.hpp"
#include "cts/error.hpp"
#include "cts/mapping.hpp"
#include "cts/pipeline.hpp"
#include "cts/report.hpp"
#include "cts/synth.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cts;

namespace {

struct Common {
  std::string config;
  std::string slot;
  std::vector<double> targets;
  std::optional<std::uint64_t> seed;
  std::string bundle;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool bundle) {
  cmd->add_option("--config", c.config, "JSON configuration file");
  cmd->add_option("--seed", c.seed, "Master seed, overrides the configuration");
  if (bundle) cmd->add_option("--bundle", c.bundle, "Bundle file")->required();
  cmd->add_option("--out", c.out, "Output directory (stdout when omitted)");
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io_error, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, path + ": " + e.what());
  }
}

json config_or_empty(const Common& c) { return c.config.empty() ? json::object() : read_json(c.config); }

fs::path out_dir(const Common& c) {
  fs::path d(c.out);
  fs::create_directories(d);
  return d;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io_error, "cannot write " + path.string());
  out << text;
}

void emit(const Common& c, const std::string& file, const json& j) {
  if (c.out.empty())
    std::cout << j.dump(2) << '\n';
  else
    write_text(out_dir(c) / file, j.dump(2) + "\n");
}

data::Dataset load_dir(const std::string& dir, bool drop_incomplete) {
  const fs::path d(dir);
  return data::load_csv(d / "series.csv", d / "conditions.csv", d / "schema.json",
                        drop_incomplete ? data::RowFilter(data::complete_rows_only) : data::RowFilter{});
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<pipeline::GenerationRequest> parse_requests(const json& doc, const Bundle& b,
                                                        const std::optional<data::Dataset>& data,
                                                        std::optional<std::uint64_t> seed) {
  std::vector<json> items;
  if (doc.contains("requests"))
    for (const auto& r : doc.at("requests")) items.push_back(r);
  else
    items.push_back(doc);
  std::vector<pipeline::GenerationRequest> out;
  for (const auto& item : items) {
    pipeline::GenerationRequest r;
    if (item.contains("row")) {
      require(data.has_value(), ErrorCode::invalid_argument, "request uses \"row\" but no --data was given");
      const auto row = item.at("row").get<std::size_t>();
      require(row < data->size(), ErrorCode::invalid_argument, "row " + std::to_string(row) + " is out of range");
      r.x0 = data->series(row);
      r.c0 = data->condition(row);
    } else {
      require(item.contains("x0"), ErrorCode::invalid_argument, "request needs \"x0\" or \"row\"");
      const auto flat = item.at("x0").get<std::vector<double>>();
      r.x0 = TimeSeries::from_flat(flat, b.vae.length(), b.vae.channels());
    }
    if (item.contains("c0")) r.c0 = condition_from_json(item.at("c0"), b.schema);
    require(r.c0.size() == b.schema.size(), ErrorCode::invalid_argument, "request needs \"c0\"");
    require(item.contains("c0_prime"), ErrorCode::invalid_argument, "request needs \"c0_prime\"");
    // c0_prime may list only the slots that change
    r.c0_prime = r.c0;
    for (const auto& [name, value] : item.at("c0_prime").items()) {
      const auto s = b.schema.require_index(name);
      r.c0_prime[s] = value.is_string() ? parse_slot(b.schema, s, value.get<std::string>())
                                        : ConditionSlot(value.get<double>());
    }
    if (item.contains("settings")) r.overrides = generation_settings_from_json(item.at("settings"), b.generation);
    r.noise_seed = seed.value_or(item.value("noise_seed", std::uint64_t{0}));
    out.push_back(std::move(r));
  }
  return out;
}

int cmd_synth(const Common& c) {
  auto spec = data::synth_spec_from_json(config_or_empty(c));
  if (c.seed) spec.seed = *c.seed;
  require(!c.out.empty(), ErrorCode::invalid_argument, "synth needs --out");
  const auto r = data::synth_generate_full(spec);
  const auto dir = out_dir(c);
  data::save_csv(r.dataset, dir / "series.csv", dir / "conditions.csv", dir / "schema.json");
  std::ostringstream f;
  f << "id,waveform,amplitude,frequency,phase,slope,noise\n";
  for (std::size_t i = 0; i < r.factors.size(); ++i) {
    const auto& x = r.factors[i];
    f << 's' << i << ',' << data::to_string(x.waveform) << ',' << fmt17(x.amplitude) << ',' << fmt17(x.frequency)
      << ',' << fmt17(x.phase) << ',' << fmt17(x.slope) << ',' << fmt17(x.noise) << '\n';
  }
  write_text(dir / "factors.csv", f.str());
  write_text(dir / "synth.json", data::to_json(spec).dump(2) + "\n");
  std::cout << json{{"series", r.dataset.size()}, {"length", r.dataset.length()}, {"out", dir.string()}}.dump()
            << '\n';
  return 0;
}

int cmd_train(const Common& c, const std::string& data_dir, bool drop, bool progress) {
  auto cfg = pipeline::pipeline_config_from_json(config_or_empty(c));
  if (c.seed) cfg.seed = *c.seed;
  const auto d = load_dir(data_dir, drop);
  const auto t0 = std::chrono::steady_clock::now();
  vae::EpochCallback cb;
  if (progress)
    cb = [](const vae::EpochLoss& e, const vae::VaeModel&) {
      std::cerr << json{{"epoch", e.epoch}, {"recon", e.recon}, {"kl", e.kl}, {"total", e.total}}.dump() << '\n';
      return true;
    };
  const auto b = pipeline::train_phase(d, cfg, cb);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  save_bundle(b, c.bundle);
  json summary = b.training;
  summary["bundle"] = c.bundle;
  summary["seconds"] = secs;
  emit(c, "train.json", summary);
  return 0;
}

int cmd_generate(const Common& c, const std::string& request, const std::string& data_dir) {
  const auto b = load_bundle(c.bundle);
  std::optional<data::Dataset> d;
  if (!data_dir.empty()) d = load_dir(data_dir, true);
  const auto reqs = parse_requests(read_json(request), b, d, c.seed);
  json provenance = json::array();
  std::ostringstream series, pairs;
  series << "id";
  for (std::size_t i = 0; i < b.vae.input_dim(); ++i) series << ",v_" << i + 1;
  series << '\n';
  pairs << "request,t,channel,input,generated\n";
  json results = json::array();
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    const auto g = pipeline::generate(b, reqs[i]);
    provenance.push_back(pipeline::to_json(g.provenance));
    const auto flat = g.series.flatten();
    series << 'g' << i;
    for (Eigen::Index k = 0; k < flat.size(); ++k) series << ',' << fmt17(flat[k]);
    series << '\n';
    for (std::size_t t = 0; t < g.series.length(); ++t)
      for (std::size_t ch = 0; ch < g.series.channels(); ++ch)
        pairs << i << ',' << t << ',' << ch << ',' << fmt17(reqs[i].x0(t, ch)) << ',' << fmt17(g.series(t, ch)) << '\n';
    results.push_back({{"series", std::vector<double>(flat.data(), flat.data() + flat.size())},
                       {"provenance", provenance.back()}});
  }
  if (c.out.empty()) {
    std::cout << results.dump(2) << '\n';
  } else {
    const auto dir = out_dir(c);
    write_text(dir / "generated.csv", series.str());
    write_text(dir / "pairs.csv", pairs.str());
    write_text(dir / "provenance.json", provenance.dump(2) + "\n");
  }
  return 0;
}

pipeline::Protocol protocol(const Common& c, const Bundle& b) {
  auto j = config_or_empty(c);
  if (!c.slot.empty()) j["slot"] = c.slot;
  if (!c.targets.empty()) j["targets"] = c.targets;
  if (!j.contains("slot")) {
    std::vector<std::string> numeric;
    for (std::size_t s = 0; s < b.schema.size(); ++s)
      if (b.schema.slot(s).kind == SlotKind::numeric) numeric.push_back(b.schema.slot(s).name);
    require(numeric.size() == 1, ErrorCode::invalid_argument, "name the evaluated slot with --slot");
    j["slot"] = numeric.front();
  }
  auto p = pipeline::protocol_from_json(j);
  if (c.seed) p.seed = *c.seed;
  return p;
}

int cmd_eval(const Common& c, const std::string& data_dir, bool drop, pipeline::Scenario s) {
  const auto b = load_bundle(c.bundle);
  const auto d = load_dir(data_dir, drop);
  const auto p = protocol(c, b);
  const auto r = s == pipeline::Scenario::interpolation ? pipeline::evaluate_interpolation(b, d, p)
                                                        : pipeline::evaluate_extrapolation(b, d, p);
  emit(c, "report.json", eval::to_json(r));
  return 0;
}

pipeline::Scenario scenario_from(const std::string& s) {
  if (s == "interpolation" || s == "interp") return pipeline::Scenario::interpolation;
  if (s == "extrapolation" || s == "extrap") return pipeline::Scenario::extrapolation;
  fail(ErrorCode::invalid_argument, "unknown scenario '" + s + "'");
}

std::string opt_text(const std::optional<double>& v) { return v ? fmt17(*v) : ""; }

int cmd_ablate(const Common& c, const std::string& data_dir, bool drop, const std::string& scenario,
               const std::vector<std::string>& names) {
  const auto b = load_bundle(c.bundle);
  const auto d = load_dir(data_dir, drop);
  std::vector<pipeline::Variant> variants;
  for (const auto& n : names) {
    if (n == "ablation") {
      for (auto& v : pipeline::ablation_variants()) variants.push_back(v);
    } else if (n == "grid") {
      for (auto& v : pipeline::benchmark_grid()) variants.push_back(v);
    } else {
      variants.push_back(pipeline::variant_from_name(n));
    }
  }
  const auto scen = scenario_from(scenario);
  const auto reps = pipeline::ablate(b, d, protocol(c, b), variants, scen);
  json all = json::array();
  std::ostringstream csv;
  const bool auc = scen == pipeline::Scenario::extrapolation;
  csv << "variant,accuracy," << (auc ? "auc" : "weighted_f1") << ",ed_mean,dtw_mean,cfid,acd_mean\n";
  for (const auto& v : reps) {
    all.push_back({{"variant", v.name}, {"report", eval::to_json(v.report)}});
    const auto ctl = v.report.controllability.value_or(v.report.baseline);
    csv << v.name << ',' << fmt17(ctl.accuracy) << ',' << opt_text(auc ? ctl.auc : ctl.weighted_f1) << ','
        << opt_text(v.report.ed_mean) << ',' << opt_text(v.report.dtw_mean) << ',' << opt_text(v.report.cfid) << ','
        << opt_text(v.report.acd_mean) << '\n';
  }
  if (c.out.empty()) {
    std::cout << csv.str();
  } else {
    const auto dir = out_dir(c);
    write_text(dir / "ablation.json", all.dump(2) + "\n");
    write_text(dir / "ablation.csv", csv.str());
  }
  return 0;
}

int cmd_sweep(const Common& c, const std::string& data_dir, bool drop, const std::string& scenario,
              const pipeline::SweepGrid& grid) {
  const auto b = load_bundle(c.bundle);
  const auto d = load_dir(data_dir, drop);
  const auto cells = pipeline::sweep(b, d, protocol(c, b), grid, scenario_from(scenario));
  const auto csv = pipeline::sweep_csv(cells);
  if (c.out.empty()) {
    std::cout << csv;
  } else {
    json all = json::array();
    for (const auto& cell : cells) all.push_back(eval::to_json(cell.report));
    const auto dir = out_dir(c);
    write_text(dir / "sweep.csv", csv);
    write_text(dir / "sweep.json", all.dump(2) + "\n");
  }
  return 0;
}

int cmd_explain(const Common& c, const std::string& request, const std::string& data_dir) {
  const auto b = load_bundle(c.bundle);
  std::optional<data::Dataset> d;
  if (!data_dir.empty()) d = load_dir(data_dir, true);
  const auto reqs = parse_requests(read_json(request), b, d, c.seed);
  const auto g = pipeline::generate(b, reqs.front());
  const auto e = mapping::explain(g.mapping);
  json imp = json::object();
  for (std::size_t i = 0; i < e.conditions.size(); ++i) imp[e.conditions[i]] = e.importance[i];
  json doc{{"variant", mapping::to_string(g.mapping.variant())},
           {"linear", e.linear},
           {"importance", imp},
           {"selected", g.provenance.indices.size()},
           {"mapping_loss", g.provenance.mapping_loss}};
  if (c.out.empty()) {
    std::cout << e.rules << doc.dump(2) << '\n';
  } else {
    const auto dir = out_dir(c);
    write_text(dir / "rules.txt", e.rules);
    doc["tree"] = e.tree;
    write_text(dir / "explain.json", doc.dump(2) + "\n");
  }
  return 0;
}

void report_error(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

void add_protocol(CLI::App* cmd, Common& c) {
  cmd->add_option("--slot", c.slot, "Numeric condition that is moved");
  cmd->add_option("--targets", c.targets, "Target values in data units")->delimiter(',');
}

int main(int argc, char** argv) {
  CLI::App app{"Controllable time series generation"};
  app.require_subcommand(1);

  Common common;
  std::string data_dir, request, scenario = "interpolation";
  bool drop = false, progress = false;
  std::vector<std::string> variants{"ablation"};
  pipeline::SweepGrid grid;

  auto* synth = app.add_subcommand("synth", "Write a synthetic waveform dataset");
  add_common(synth, common, false);

  auto* train = app.add_subcommand("train", "Train the VAE and cluster the conditions");
  add_common(train, common, true);
  train->add_option("--data", data_dir, "Directory with series.csv, conditions.csv, schema.json")->required();
  train->add_flag("--drop-incomplete", drop, "Skip rows with a missing condition");
  train->add_flag("--progress", progress, "Print per-epoch losses to stderr");

  auto* gen = app.add_subcommand("generate", "Generate series under altered conditions");
  add_common(gen, common, true);
  gen->add_option("--request", request, "Request JSON")->required();
  gen->add_option("--data", data_dir, "Dataset directory for requests that name a row");

  auto* interp = app.add_subcommand("eval-interp", "Interpolation evaluation");
  auto* extrap = app.add_subcommand("eval-extrap", "Extrapolation evaluation");
  for (auto* cmd : {interp, extrap}) {
    add_common(cmd, common, true);
    cmd->add_option("--data", data_dir, "Evaluation dataset directory")->required();
    cmd->add_flag("--drop-incomplete", drop, "Skip rows with a missing condition");
    add_protocol(cmd, common);
  }

  auto* ablate = app.add_subcommand("ablate", "Evaluate selection and mapping variants");
  add_common(ablate, common, true);
  ablate->add_option("--data", data_dir, "Evaluation dataset directory")->required();
  ablate->add_option("--scenario", scenario, "interpolation or extrapolation");
  ablate->add_option("--variants", variants, "Variant names, 'ablation' or 'grid'")->delimiter(',');
  ablate->add_flag("--drop-incomplete", drop, "Skip rows with a missing condition");
  add_protocol(ablate, common);

  auto* sweep = app.add_subcommand("sweep", "Sensitivity sweep over k, k1 and k2");
  add_common(sweep, common, true);
  sweep->add_option("--data", data_dir, "Evaluation dataset directory")->required();
  sweep->add_option("--scenario", scenario, "interpolation or extrapolation");
  sweep->add_option("--k", grid.k, "Cluster counts")->delimiter(',');
  sweep->add_option("--k1-ratio", grid.k1_ratio, "k1 / k ratios")->delimiter(',');
  sweep->add_option("--k2-ratio", grid.k2_ratio, "k2 / cluster size ratios")->delimiter(',');
  sweep->add_flag("--drop-incomplete", drop, "Skip rows with a missing condition");
  add_protocol(sweep, common);

  auto* explain = app.add_subcommand("explain", "Dump the mapping tree fitted for a request");
  add_common(explain, common, true);
  explain->add_option("--request", request, "Request JSON")->required();
  explain->add_option("--data", data_dir, "Dataset directory for requests that name a row");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return 2;
  }

  try {
    if (*synth) return cmd_synth(common);
    if (*train) return cmd_train(common, data_dir, drop, progress);
    if (*gen) return cmd_generate(common, request, data_dir);
    if (*interp) return cmd_eval(common, data_dir, drop, pipeline::Scenario::interpolation);
    if (*extrap) return cmd_eval(common, data_dir, drop, pipeline::Scenario::extrapolation);
    if (*ablate) return cmd_ablate(common, data_dir, drop, scenario, variants);
    if (*sweep) return cmd_sweep(common, data_dir, drop, scenario, grid);
    if (*explain) return cmd_explain(common, request, data_dir);
  } catch (const Error& e) {
    report_error(to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return 1;
  }
  return 0;
}
