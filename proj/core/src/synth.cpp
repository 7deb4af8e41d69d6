#include "cts/synth.hpp"

#include "cts/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace cts::data {

const char* to_string(Waveform w) noexcept {
  switch (w) {
    case Waveform::sine: return "sine";
    case Waveform::square: return "square";
    case Waveform::sawtooth: return "sawtooth";
  }
  return "?";
}

Waveform waveform_from_string(const std::string& s) {
  if (s == "sine") return Waveform::sine;
  if (s == "square") return Waveform::square;
  if (s == "sawtooth") return Waveform::sawtooth;
  fail(ErrorCode::invalid_argument, "unknown waveform '" + s + "'");
}

const std::vector<std::string>& synth_factor_names() {
  static const std::vector<std::string> names{"waveform", "amplitude", "frequency",
                                              "phase",    "slope",     "noise"};
  return names;
}

namespace {

void check_range(const FactorRange& r, const std::string& name) {
  if (!r.levels.empty()) {
    for (double v : r.levels)
      require(std::isfinite(v), ErrorCode::invalid_argument, name + " level is not finite");
    return;
  }
  require(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi, ErrorCode::invalid_argument,
          name + " range is empty");
}

double draw(const FactorRange& r, std::mt19937_64& rng) {
  if (!r.levels.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, r.levels.size() - 1);
    return r.levels[pick(rng)];
  }
  if (r.lo == r.hi) return r.lo;
  std::uniform_real_distribution<double> u(r.lo, r.hi);
  return u(rng);
}

double min_of(const FactorRange& r) {
  return r.levels.empty() ? r.lo : *std::min_element(r.levels.begin(), r.levels.end());
}

}  // namespace

void SynthSpec::validate() const {
  require(length >= 2, ErrorCode::invalid_argument, "synthetic series need length >= 2");
  require(count > 0, ErrorCode::invalid_argument, "synthetic dataset needs count > 0");
  require(!waveforms.empty(), ErrorCode::invalid_argument, "no waveform to draw from");
  check_range(amplitude, "amplitude");
  check_range(frequency, "frequency");
  check_range(phase, "phase");
  check_range(slope, "slope");
  check_range(noise, "noise");
  require(min_of(frequency) >= 1.0, ErrorCode::invalid_argument,
          "frequency must be at least one cycle per window");
  require(min_of(noise) >= 0.0, ErrorCode::invalid_argument, "noise level must be nonnegative");
  require(!observed.empty(), ErrorCode::invalid_argument, "at least one factor must be observed");
  for (const auto& name : observed) {
    const auto& all = synth_factor_names();
    require(std::find(all.begin(), all.end(), name) != all.end(), ErrorCode::invalid_argument,
            "unknown synthetic factor '" + name + "'");
    require(std::count(observed.begin(), observed.end(), name) == 1, ErrorCode::invalid_argument,
            "factor '" + name + "' observed twice");
  }
}

ConditionSchema synth_schema(const SynthSpec& spec) {
  std::vector<SlotSpec> slots;
  for (const auto& name : spec.observed) {
    if (name == "waveform") {
      SlotSpec s{name, SlotKind::categorical, {}, false};
      for (auto w : {Waveform::sine, Waveform::square, Waveform::sawtooth})
        s.vocabulary.emplace_back(to_string(w));
      slots.push_back(std::move(s));
    } else {
      slots.push_back(SlotSpec{name, SlotKind::numeric, {}, false});
    }
  }
  return ConditionSchema(std::move(slots));
}

double wave(Waveform w, double theta) noexcept {
  switch (w) {
    case Waveform::sine: return std::sin(theta);
    case Waveform::square: return std::sin(theta) >= 0.0 ? 1.0 : -1.0;
    case Waveform::sawtooth: {
      const double u = theta / (2.0 * std::numbers::pi);
      return 2.0 * (u - std::floor(u)) - 1.0;
    }
  }
  return 0.0;
}

SynthResult synth_generate_full(const SynthSpec& spec) {
  spec.validate();
  const ConditionSchema schema = synth_schema(spec);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> eps(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_wave(0, spec.waveforms.size() - 1);

  SynthResult r;
  std::vector<TimeSeries> series;
  std::vector<ConditionVector> conditions;
  series.reserve(spec.count);
  conditions.reserve(spec.count);
  const double t_len = static_cast<double>(spec.length);
  for (std::size_t i = 0; i < spec.count; ++i) {
    SynthFactors f;
    f.waveform = spec.waveforms[pick_wave(rng)];
    f.amplitude = draw(spec.amplitude, rng);
    f.frequency = draw(spec.frequency, rng);
    f.phase = draw(spec.phase, rng);
    f.slope = draw(spec.slope, rng);
    f.noise = draw(spec.noise, rng);

    TimeSeries x(spec.length, 1);
    for (std::size_t t = 0; t < spec.length; ++t) {
      const double u = static_cast<double>(t) / t_len;
      double v = f.amplitude * wave(f.waveform, 2.0 * std::numbers::pi * f.frequency * u + f.phase) +
                 f.slope * u;
      if (f.noise > 0.0) v += f.noise * eps(rng);
      x(t, 0) = v;
    }

    std::vector<ConditionSlot> slots;
    for (const auto& name : spec.observed) {
      if (name == "waveform")
        slots.emplace_back(CategoryCode{static_cast<std::uint32_t>(f.waveform)});
      else if (name == "amplitude")
        slots.emplace_back(f.amplitude);
      else if (name == "frequency")
        slots.emplace_back(f.frequency);
      else if (name == "phase")
        slots.emplace_back(f.phase);
      else if (name == "slope")
        slots.emplace_back(f.slope);
      else
        slots.emplace_back(f.noise);
    }
    series.push_back(std::move(x));
    conditions.emplace_back(std::move(slots));
    r.factors.push_back(f);
  }
  r.dataset = Dataset(schema, std::move(series), std::move(conditions));
  return r;
}

Dataset synth_generate(const SynthSpec& spec) { return synth_generate_full(spec).dataset; }

namespace {

nlohmann::json range_json(const FactorRange& r) {
  if (!r.levels.empty()) return {{"levels", r.levels}};
  return {{"min", r.lo}, {"max", r.hi}};
}

FactorRange range_from(const nlohmann::json& j) {
  if (j.is_number()) return FactorRange::fixed(j.get<double>());
  if (j.is_array()) return FactorRange::choice(j.get<std::vector<double>>());
  if (j.contains("levels")) return FactorRange::choice(j.at("levels").get<std::vector<double>>());
  return FactorRange::uniform(j.at("min").get<double>(), j.at("max").get<double>());
}

}  // namespace

nlohmann::json to_json(const SynthSpec& spec) {
  nlohmann::json waves = nlohmann::json::array();
  for (auto w : spec.waveforms) waves.push_back(to_string(w));
  return {{"length", spec.length},       {"count", spec.count},
          {"seed", spec.seed},           {"waveforms", waves},
          {"amplitude", range_json(spec.amplitude)},
          {"frequency", range_json(spec.frequency)},
          {"phase", range_json(spec.phase)},
          {"slope", range_json(spec.slope)},
          {"noise", range_json(spec.noise)},
          {"observed", spec.observed}};
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  try {
    s.length = j.value("length", s.length);
    s.count = j.value("count", s.count);
    s.seed = j.value("seed", s.seed);
    if (j.contains("waveforms")) {
      s.waveforms.clear();
      for (const auto& w : j.at("waveforms")) s.waveforms.push_back(waveform_from_string(w.get<std::string>()));
    }
    if (j.contains("amplitude")) s.amplitude = range_from(j.at("amplitude"));
    if (j.contains("frequency")) s.frequency = range_from(j.at("frequency"));
    if (j.contains("phase")) s.phase = range_from(j.at("phase"));
    if (j.contains("slope")) s.slope = range_from(j.at("slope"));
    if (j.contains("noise")) s.noise = range_from(j.at("noise"));
    if (j.contains("observed")) s.observed = j.at("observed").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("synthetic spec: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace cts::data
