#include "cts/dataset.hpp"

#include "cts/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace cts::data {

Dataset::Dataset(ConditionSchema schema, std::vector<TimeSeries> series,
                 std::vector<ConditionVector> conditions)
    : schema_(std::move(schema)), series_(std::move(series)), conditions_(std::move(conditions)) {
  require(series_.size() == conditions_.size(), ErrorCode::shape_mismatch,
          "dataset has " + std::to_string(series_.size()) + " series but " +
              std::to_string(conditions_.size()) + " condition rows");
  for (std::size_t i = 0; i < series_.size(); ++i) {
    require(series_[i].same_shape(series_.front()), ErrorCode::shape_mismatch,
            "series " + std::to_string(i) + " differs in shape from series 0");
    require(series_[i].all_finite(), ErrorCode::non_finite,
            "series " + std::to_string(i) + " has a non-finite value");
    validate(conditions_[i], schema_);
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<TimeSeries> s;
  std::vector<ConditionVector> c;
  s.reserve(rows.size());
  c.reserve(rows.size());
  for (auto r : rows) {
    s.push_back(series_.at(r));
    c.push_back(conditions_.at(r));
  }
  Dataset out(schema_, std::move(s), std::move(c));
  out.normalization_ = normalization_;
  return out;
}

double normalize_value(double v, double lo, double hi) noexcept {
  return hi > lo ? (v - lo) / (hi - lo) : 0.0;
}

double denormalize_value(double v, double lo, double hi) noexcept {
  return hi > lo ? lo + v * (hi - lo) : lo;
}

NormalizationMeta fit_normalization(const Dataset& raw) {
  require(!raw.empty(), ErrorCode::empty_input, "cannot normalize an empty dataset");
  require(!raw.normalization().has_value(), ErrorCode::invalid_argument,
          "dataset is already normalized");
  NormalizationMeta m;
  const std::size_t d = raw.channels();
  m.series_min.assign(d, std::numeric_limits<double>::infinity());
  m.series_max.assign(d, -std::numeric_limits<double>::infinity());
  for (const auto& x : raw.series())
    for (std::size_t c = 0; c < d; ++c) {
      const auto col = x.values().col(static_cast<Eigen::Index>(c));
      m.series_min[c] = std::min(m.series_min[c], col.minCoeff());
      m.series_max[c] = std::max(m.series_max[c], col.maxCoeff());
    }
  const auto& schema = raw.schema();
  m.condition_min.assign(schema.size(), 0.0);
  m.condition_max.assign(schema.size(), 0.0);
  for (std::size_t s = 0; s < schema.size(); ++s) {
    if (schema.slot(s).kind != SlotKind::numeric) continue;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& c : raw.conditions()) {
      lo = std::min(lo, c.number(s));
      hi = std::max(hi, c.number(s));
    }
    m.condition_min[s] = lo;
    m.condition_max[s] = hi;
  }
  return m;
}

TimeSeries normalize(const TimeSeries& x, const NormalizationMeta& meta) {
  require(x.channels() == meta.series_min.size(), ErrorCode::shape_mismatch,
          "series channel count does not match the normalization");
  TimeSeries out(x.length(), x.channels());
  for (std::size_t t = 0; t < x.length(); ++t)
    for (std::size_t c = 0; c < x.channels(); ++c)
      out(t, c) = normalize_value(x(t, c), meta.series_min[c], meta.series_max[c]);
  return out;
}

TimeSeries denormalize(const TimeSeries& x, const NormalizationMeta& meta) {
  require(x.channels() == meta.series_min.size(), ErrorCode::shape_mismatch,
          "series channel count does not match the normalization");
  TimeSeries out(x.length(), x.channels());
  for (std::size_t t = 0; t < x.length(); ++t)
    for (std::size_t c = 0; c < x.channels(); ++c)
      out(t, c) = denormalize_value(x(t, c), meta.series_min[c], meta.series_max[c]);
  return out;
}

ConditionVector normalize(const ConditionVector& c, const ConditionSchema& schema,
                          const NormalizationMeta& meta) {
  validate(c, schema);
  ConditionVector out = c;
  for (std::size_t s = 0; s < schema.size(); ++s)
    if (schema.slot(s).kind == SlotKind::numeric)
      out[s] = normalize_value(c.number(s), meta.condition_min.at(s), meta.condition_max.at(s));
  return out;
}

ConditionVector denormalize(const ConditionVector& c, const ConditionSchema& schema,
                            const NormalizationMeta& meta) {
  ConditionVector out = c;
  for (std::size_t s = 0; s < schema.size(); ++s)
    if (schema.slot(s).kind == SlotKind::numeric)
      out[s] = denormalize_value(c.number(s), meta.condition_min.at(s), meta.condition_max.at(s));
  return out;
}

Dataset normalize(const Dataset& raw) { return normalize(raw, fit_normalization(raw)); }

Dataset normalize(const Dataset& raw, const NormalizationMeta& meta) {
  std::vector<TimeSeries> s;
  std::vector<ConditionVector> c;
  s.reserve(raw.size());
  c.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    s.push_back(normalize(raw.series(i), meta));
    c.push_back(normalize(raw.condition(i), raw.schema(), meta));
  }
  Dataset out(raw.schema(), std::move(s), std::move(c));
  out.set_normalization(meta);
  return out;
}

nlohmann::json to_json(const NormalizationMeta& meta) {
  return {{"series_min", meta.series_min},
          {"series_max", meta.series_max},
          {"condition_min", meta.condition_min},
          {"condition_max", meta.condition_max}};
}

NormalizationMeta normalization_from_json(const nlohmann::json& j) {
  NormalizationMeta m;
  try {
    m.series_min = j.at("series_min").get<std::vector<double>>();
    m.series_max = j.at("series_max").get<std::vector<double>>();
    m.condition_min = j.at("condition_min").get<std::vector<double>>();
    m.condition_max = j.at("condition_max").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("normalization: ") + e.what());
  }
  require(m.series_min.size() == m.series_max.size() &&
              m.condition_min.size() == m.condition_max.size(),
          ErrorCode::parse_error, "normalization bounds differ in length");
  return m;
}

bool complete_rows_only(std::size_t, bool complete) { return complete; }

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io_error, "cannot open " + path.string());
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    require(cells.size() == t.header.size(), ErrorCode::parse_error,
            path.filename().string() + " line " + std::to_string(line_no) + ": expected " +
                std::to_string(t.header.size()) + " cells, found " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  require(!t.header.empty(), ErrorCode::parse_error, path.filename().string() + " has no header");
  return t;
}

double parse_cell(const std::string& cell, const std::string& where) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  require(ec == std::errc() && ptr == cell.data() + cell.size() && !cell.empty(),
          ErrorCode::parse_error, where + ": '" + cell + "' is not a number");
  require(std::isfinite(v), ErrorCode::parse_error, where + ": non-finite value '" + cell + "'");
  return v;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& series_path,
                 const std::filesystem::path& conditions_path,
                 const std::filesystem::path& schema_path, const RowFilter& filter) {
  nlohmann::json schema_json;
  {
    std::ifstream in(schema_path);
    require(in.good(), ErrorCode::io_error, "cannot open " + schema_path.string());
    try {
      in >> schema_json;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::parse_error, schema_path.filename().string() + ": " + e.what());
    }
  }
  const ConditionSchema schema = schema_from_json(schema_json);

  const Table st = read_table(series_path);
  const Table ct = read_table(conditions_path);
  require(st.rows.size() == ct.rows.size(), ErrorCode::shape_mismatch,
          series_path.filename().string() + " has " + std::to_string(st.rows.size()) +
              " rows but " + conditions_path.filename().string() + " has " +
              std::to_string(ct.rows.size()));
  require(st.header.size() >= 2 && st.header.front() == "id", ErrorCode::parse_error,
          series_path.filename().string() + ": header must be id,v_1,...");
  require(ct.header.size() == schema.size() + 1 && ct.header.front() == "id",
          ErrorCode::parse_error,
          conditions_path.filename().string() + ": header must be id followed by " +
              std::to_string(schema.size()) + " condition names");

  const std::size_t width = st.header.size() - 1;
  const std::size_t channels = schema_json.value("channels", std::size_t{1});
  const std::size_t length = schema_json.value("length", width / std::max<std::size_t>(channels, 1));
  require(channels > 0 && length * channels == width, ErrorCode::schema_violation,
          "series width " + std::to_string(width) + " does not equal length " +
              std::to_string(length) + " x channels " + std::to_string(channels));

  std::vector<std::size_t> slot_of_column(schema.size());
  for (std::size_t col = 1; col < ct.header.size(); ++col)
    slot_of_column[col - 1] = schema.require_index(ct.header[col]);

  std::vector<TimeSeries> series;
  std::vector<ConditionVector> conditions;
  for (std::size_t r = 0; r < st.rows.size(); ++r) {
    const auto& srow = st.rows[r];
    const auto& crow = ct.rows[r];
    require(srow.front() == crow.front(), ErrorCode::parse_error,
            "row " + std::to_string(r + 1) + ": series id '" + srow.front() +
                "' does not match condition id '" + crow.front() + "'");
    bool complete = true;
    for (std::size_t col = 1; col < crow.size(); ++col) complete = complete && !crow[col].empty();
    if (filter) {
      if (!filter(r, complete)) continue;
    }
    require(complete, ErrorCode::schema_violation,
            conditions_path.filename().string() + " row " + std::to_string(r + 1) +
                ": missing condition value");

    std::vector<ConditionSlot> slots(schema.size());
    for (std::size_t col = 1; col < crow.size(); ++col) {
      const std::size_t s = slot_of_column[col - 1];
      try {
        slots[s] = parse_slot(schema, s, crow[col]);
      } catch (const Error& e) {
        fail(e.code(), conditions_path.filename().string() + " row " + std::to_string(r + 1) +
                           ", column " + std::to_string(col + 1) + ": " + e.what());
      }
    }
    std::vector<double> flat(width);
    for (std::size_t col = 1; col < srow.size(); ++col)
      flat[col - 1] = parse_cell(srow[col], series_path.filename().string() + " row " +
                                                std::to_string(r + 1) + ", column " +
                                                std::to_string(col + 1));
    series.push_back(TimeSeries::from_flat(std::span<const double>(flat), length, channels));
    conditions.emplace_back(std::move(slots));
  }
  return Dataset(schema, std::move(series), std::move(conditions));
}

void save_csv(const Dataset& dataset, const std::filesystem::path& series_path,
              const std::filesystem::path& conditions_path,
              const std::filesystem::path& schema_path) {
  const auto& schema = dataset.schema();
  {
    std::ofstream out(series_path);
    require(out.good(), ErrorCode::io_error, "cannot write " + series_path.string());
    out << "id";
    const std::size_t width = dataset.length() * dataset.channels();
    for (std::size_t i = 1; i <= width; ++i) out << ",v_" << i;
    out << '\n';
    for (std::size_t r = 0; r < dataset.size(); ++r) {
      out << r;
      const Eigen::VectorXd flat = dataset.series(r).flatten();
      for (Eigen::Index i = 0; i < flat.size(); ++i) out << ',' << fmt17(flat(i));
      out << '\n';
    }
  }
  {
    std::ofstream out(conditions_path);
    require(out.good(), ErrorCode::io_error, "cannot write " + conditions_path.string());
    out << "id";
    for (const auto& s : schema.slots()) out << ',' << s.name;
    out << '\n';
    for (std::size_t r = 0; r < dataset.size(); ++r) {
      out << r;
      for (std::size_t s = 0; s < schema.size(); ++s)
        out << ',' << format_slot(schema, s, dataset.condition(r)[s]);
      out << '\n';
    }
  }
  {
    std::ofstream out(schema_path);
    require(out.good(), ErrorCode::io_error, "cannot write " + schema_path.string());
    auto j = to_json(schema);
    j["length"] = dataset.length();
    j["channels"] = dataset.channels();
    out << j.dump(2) << '\n';
  }
}

Split split(const Dataset& dataset, std::array<double, 3> fractions, std::uint64_t seed) {
  for (double f : fractions)
    require(f >= 0.0 && std::isfinite(f), ErrorCode::invalid_argument,
            "split fractions must be nonnegative");
  const double total = fractions[0] + fractions[1] + fractions[2];
  require(std::abs(total - 1.0) < 1e-9, ErrorCode::invalid_argument,
          "split fractions must sum to 1");
  const std::size_t n = dataset.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train = std::min(n, static_cast<std::size_t>(std::llround(fractions[0] * n)));
  const auto n_val =
      std::min(n - n_train, static_cast<std::size_t>(std::llround(fractions[1] * n)));
  Split s;
  s.train_rows.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.validation_rows.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                           perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test_rows.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
  s.train = dataset.subset(s.train_rows);
  s.validation = dataset.subset(s.validation_rows);
  s.test = dataset.subset(s.test_rows);
  return s;
}

std::vector<std::size_t> rows_where(const Dataset& dataset,
                                    const std::function<bool(const ConditionVector&)>& keep) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    if (keep(dataset.condition(i))) rows.push_back(i);
  return rows;
}

}  // namespace cts::data
