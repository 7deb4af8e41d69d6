#pragma once

#include "cts/conditions.hpp"
#include "cts/time_series.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace cts::data {

/// Per-channel series bounds and per-slot numeric condition bounds, kept so
/// generated output can be mapped back to data units.
struct NormalizationMeta {
  std::vector<double> series_min;
  std::vector<double> series_max;
  std::vector<double> condition_min;  // one entry per slot; unused for categoricals
  std::vector<double> condition_max;

  bool empty() const noexcept { return series_min.empty(); }
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(ConditionSchema schema, std::vector<TimeSeries> series,
          std::vector<ConditionVector> conditions);

  std::size_t size() const noexcept { return series_.size(); }
  bool empty() const noexcept { return series_.empty(); }
  std::size_t length() const noexcept { return empty() ? 0 : series_.front().length(); }
  std::size_t channels() const noexcept { return empty() ? 0 : series_.front().channels(); }

  const ConditionSchema& schema() const noexcept { return schema_; }
  const std::vector<TimeSeries>& series() const noexcept { return series_; }
  const std::vector<ConditionVector>& conditions() const noexcept { return conditions_; }
  const TimeSeries& series(std::size_t i) const { return series_.at(i); }
  const ConditionVector& condition(std::size_t i) const { return conditions_.at(i); }

  /// Set once the dataset holds normalized values.
  const std::optional<NormalizationMeta>& normalization() const noexcept { return normalization_; }
  void set_normalization(NormalizationMeta meta) { normalization_ = std::move(meta); }

  Dataset subset(std::span<const std::size_t> rows) const;

 private:
  ConditionSchema schema_;
  std::vector<TimeSeries> series_;
  std::vector<ConditionVector> conditions_;
  std::optional<NormalizationMeta> normalization_;
};

/// Min-max bounds of a raw dataset.
NormalizationMeta fit_normalization(const Dataset& raw);

/// Per-channel and per-numeric-slot min-max scaling to [0, 1]; a constant
/// channel or slot maps to 0.
Dataset normalize(const Dataset& raw);
Dataset normalize(const Dataset& raw, const NormalizationMeta& meta);

TimeSeries normalize(const TimeSeries& x, const NormalizationMeta& meta);
TimeSeries denormalize(const TimeSeries& x, const NormalizationMeta& meta);
ConditionVector normalize(const ConditionVector& c, const ConditionSchema& schema,
                          const NormalizationMeta& meta);
ConditionVector denormalize(const ConditionVector& c, const ConditionSchema& schema,
                            const NormalizationMeta& meta);
double normalize_value(double v, double lo, double hi) noexcept;
double denormalize_value(double v, double lo, double hi) noexcept;

nlohmann::json to_json(const NormalizationMeta& meta);
NormalizationMeta normalization_from_json(const nlohmann::json& j);

/// Return false to drop a row. Rows with an empty condition cell are passed
/// with `complete` = false and dropped unless kept here, which is an error.
using RowFilter = std::function<bool(std::size_t row, bool complete)>;

/// Drops rows with a missing condition cell.
bool complete_rows_only(std::size_t row, bool complete);

/// Series CSV: header `id,v_1,...,v_{T*d_r}`, one row per series, values
/// time-major. Conditions CSV: header `id,<slot names>`. The schema file is
/// a JSON object {"conditions": [...], "length": T, "channels": d_r}; length
/// and channels are optional and default to (columns, 1).
Dataset load_csv(const std::filesystem::path& series_path,
                 const std::filesystem::path& conditions_path,
                 const std::filesystem::path& schema_path, const RowFilter& filter = {});

void save_csv(const Dataset& dataset, const std::filesystem::path& series_path,
              const std::filesystem::path& conditions_path,
              const std::filesystem::path& schema_path);

struct Split {
  Dataset train;
  Dataset validation;
  Dataset test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> validation_rows;
  std::vector<std::size_t> test_rows;
};

/// Seeded permutation cut into parts of round(fraction * n) rows; the test
/// part takes the remainder.
Split split(const Dataset& dataset, std::array<double, 3> fractions, std::uint64_t seed);

/// Rows whose condition satisfies `keep`.
std::vector<std::size_t> rows_where(const Dataset& dataset,
                                    const std::function<bool(const ConditionVector&)>& keep);

}  // namespace cts::data
