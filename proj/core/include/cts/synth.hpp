#pragma once

#include "cts/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace cts::data {

enum class Waveform { sine, square, sawtooth };

const char* to_string(Waveform w) noexcept;
Waveform waveform_from_string(const std::string& s);

/// A factor is drawn uniformly from `levels` when any are given, otherwise
/// uniformly from [lo, hi].
struct FactorRange {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> levels;

  static FactorRange fixed(double v) { return {v, v, {}}; }
  static FactorRange uniform(double lo, double hi) { return {lo, hi, {}}; }
  static FactorRange choice(std::vector<double> levels) { return {0.0, 0.0, std::move(levels)}; }
};

/// Synthetic waveform lab. Each series is
///   amplitude * wave(2 pi frequency t / T + phase) + slope * t / T + noise * eps_t
/// with eps_t standard normal. Factors listed in `observed` become condition
/// slots (in the order given); the others stay hidden.
struct SynthSpec {
  std::size_t length = 64;
  std::size_t count = 200;
  std::uint64_t seed = 0;
  std::vector<Waveform> waveforms{Waveform::sine};
  FactorRange amplitude = FactorRange::uniform(0.5, 2.0);
  FactorRange frequency = FactorRange::fixed(2.0);  // cycles per window
  FactorRange phase = FactorRange::fixed(0.0);      // radians
  FactorRange slope = FactorRange::fixed(0.0);
  FactorRange noise = FactorRange::fixed(0.0);
  std::vector<std::string> observed{"amplitude"};

  void validate() const;
};

/// Names accepted in SynthSpec::observed.
const std::vector<std::string>& synth_factor_names();

ConditionSchema synth_schema(const SynthSpec& spec);

/// Clean waveform sample in [-1, 1] at angle theta.
double wave(Waveform w, double theta) noexcept;

struct SynthFactors {
  Waveform waveform = Waveform::sine;
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
  double slope = 0.0;
  double noise = 0.0;
};

/// Generates the series and keeps every drawn factor, hidden ones included.
struct SynthResult {
  Dataset dataset;
  std::vector<SynthFactors> factors;
};

SynthResult synth_generate_full(const SynthSpec& spec);
Dataset synth_generate(const SynthSpec& spec);

nlohmann::json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

}  // namespace cts::data
