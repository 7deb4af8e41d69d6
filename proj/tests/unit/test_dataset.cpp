#include "cts/dataset.hpp"
#include "cts/error.hpp"
#include "cts/metrics.hpp"
#include "cts/synth.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

using namespace cts;
using namespace cts::data;

namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cts_data_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  fs::path dir_;
};

const char* kSchema = R"({"conditions":[{"name":"temp","kind":"numeric"},
                           {"name":"site","kind":"categorical","vocabulary":["a","b"]}]})";

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

using Csv = TempDir;

TEST_F(Csv, LoadsShapes) {
  auto s = write("s.csv", "id,v_1,v_2,v_3\nr1,1,2,3\nr2,4,5,6\n");
  auto c = write("c.csv", "id,temp,site\nr1,0.5,a\nr2,1.5,b\n");
  auto sc = write("schema.json", kSchema);
  auto d = load_csv(s, c, sc);
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.length(), 3u);
  EXPECT_EQ(d.channels(), 1u);
  EXPECT_EQ(d.series(1)(2, 0), 6.0);
  EXPECT_EQ(d.condition(1).category(1).value, 1u);
}

TEST_F(Csv, ColumnOrderFollowsHeader) {
  auto s = write("s.csv", "id,v_1,v_2\nr1,1,2\n");
  auto c = write("c.csv", "id,site,temp\nr1,b,7\n");
  auto d = load_csv(s, c, write("schema.json", kSchema));
  EXPECT_EQ(d.condition(0).number(0), 7.0);
}

TEST_F(Csv, MultichannelLayoutIsTimeMajor) {
  auto s = write("s.csv", "id,v_1,v_2,v_3,v_4\nr1,1,2,3,4\n");
  auto c = write("c.csv", "id,temp,site\nr1,0,a\n");
  auto sc = write("schema.json", R"({"conditions":[{"name":"temp","kind":"numeric"},
      {"name":"site","kind":"categorical","vocabulary":["a","b"]}],"length":2,"channels":2})");
  auto d = load_csv(s, c, sc);
  EXPECT_EQ(d.series(0)(0, 1), 2.0);
  EXPECT_EQ(d.series(0)(1, 0), 3.0);
}

TEST_F(Csv, RowCountMismatchNamesBothCounts) {
  auto s = write("s.csv", "id,v_1\nr1,1\nr2,2\nr3,3\n");
  auto c = write("c.csv", "id,temp,site\nr1,0,a\nr2,1,b\n");
  auto sc = write("schema.json", kSchema);
  const auto msg = error_of([&] { load_csv(s, c, sc); });
  EXPECT_NE(msg.find('3'), std::string::npos);
  EXPECT_NE(msg.find('2'), std::string::npos);
}

TEST_F(Csv, MalformedCellsNameRowAndColumn) {
  auto sc = write("schema.json", kSchema);
  auto c = write("c.csv", "id,temp,site\nr1,0,a\nr2,1,b\n");
  auto bad_num = write("s.csv", "id,v_1,v_2\nr1,1,2\nr2,4,x\n");
  auto msg = error_of([&] { load_csv(bad_num, c, sc); });
  EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column 3"), std::string::npos) << msg;

  auto good = write("s2.csv", "id,v_1,v_2\nr1,1,2\nr2,4,5\n");
  auto bad_cat = write("c2.csv", "id,temp,site\nr1,0,a\nr2,1,zz\n");
  msg = error_of([&] { load_csv(good, bad_cat, sc); });
  EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column 3"), std::string::npos) << msg;

  auto ids = write("c3.csv", "id,temp,site\nr1,0,a\nq2,1,b\n");
  EXPECT_THROW(load_csv(good, ids, sc), Error);
}

TEST_F(Csv, MissingValuesAreErrorsUnlessFiltered) {
  auto sc = write("schema.json", kSchema);
  auto s = write("s.csv", "id,v_1\nr1,1\nr2,2\n");
  auto c = write("c.csv", "id,temp,site\nr1,,a\nr2,1,b\n");
  try {
    load_csv(s, c, sc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::schema_violation);
  }
  EXPECT_EQ(load_csv(s, c, sc, complete_rows_only).size(), 1u);
}

TEST_F(Csv, RoundTripIsBitExact) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  ConditionSchema schema({{"temp", SlotKind::numeric, {}, false},
                          {"site", SlotKind::categorical, {"a", "b"}, false}});
  std::vector<TimeSeries> series;
  std::vector<ConditionVector> conds;
  for (int i = 0; i < 20; ++i) {
    series.emplace_back(Eigen::MatrixXd::NullaryExpr(8, 2, [&] { return g(rng) * 1e3; }));
    conds.emplace_back(std::vector<ConditionSlot>{g(rng) / 3.0, CategoryCode{static_cast<std::uint32_t>(i % 2)}});
  }
  Dataset d(schema, series, conds);
  save_csv(d, dir_ / "s.csv", dir_ / "c.csv", dir_ / "schema.json");
  auto back = load_csv(dir_ / "s.csv", dir_ / "c.csv", dir_ / "schema.json");
  ASSERT_EQ(back.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back.series(i), d.series(i));
    EXPECT_EQ(back.condition(i), d.condition(i));
  }
}

TEST(Normalize, BoundsAndRoundTrip) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  ConditionSchema schema({{"x", SlotKind::numeric, {}, false}});
  std::vector<TimeSeries> series;
  std::vector<ConditionVector> conds;
  for (int i = 0; i < 10; ++i) {
    Eigen::MatrixXd m(16, 2);
    m.col(0) = Eigen::VectorXd::NullaryExpr(16, [&] { return 5 + 3 * g(rng); });
    m.col(1).setConstant(2.5);
    series.emplace_back(m);
    conds.emplace_back(std::vector<ConditionSlot>{10.0 * i});
  }
  Dataset raw(schema, series, conds);
  auto meta = fit_normalization(raw);
  auto n = normalize(raw, meta);
  double lo = 1, hi = 0;
  for (const auto& s : n.series()) {
    lo = std::min(lo, s.values().col(0).minCoeff());
    hi = std::max(hi, s.values().col(0).maxCoeff());
    EXPECT_TRUE((s.values().col(1).array() == 0.0).all());
  }
  EXPECT_EQ(lo, 0.0);
  EXPECT_EQ(hi, 1.0);
  EXPECT_EQ(n.condition(0).number(0), 0.0);
  EXPECT_EQ(n.condition(9).number(0), 1.0);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    EXPECT_LT((denormalize(n.series(i), meta).values() - raw.series(i).values()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(denormalize(n.condition(i), schema, meta).number(0), raw.condition(i).number(0), 1e-12);
  }
  EXPECT_THROW(normalize(n), Error);
  auto back = normalization_from_json(nlohmann::json::parse(to_json(meta).dump()));
  EXPECT_EQ(back.series_min, meta.series_min);
  EXPECT_EQ(back.condition_max, meta.condition_max);
}

TEST(Split, PartitionsAndIsSeeded) {
  auto d = synth_generate(SynthSpec{});
  auto a = split(d, {0.6, 0.2, 0.2}, 5), b = split(d, {0.6, 0.2, 0.2}, 5);
  EXPECT_EQ(a.train_rows, b.train_rows);
  EXPECT_EQ(a.train.size(), 120u);
  EXPECT_EQ(a.validation.size(), 40u);
  EXPECT_EQ(a.test.size(), 40u);
  std::set<std::size_t> all(a.train_rows.begin(), a.train_rows.end());
  all.insert(a.validation_rows.begin(), a.validation_rows.end());
  all.insert(a.test_rows.begin(), a.test_rows.end());
  EXPECT_EQ(all.size(), d.size());
  EXPECT_NE(split(d, {0.6, 0.2, 0.2}, 6).train_rows, a.train_rows);
  EXPECT_THROW(split(d, {0.6, 0.6, 0.2}, 1), Error);
}

TEST(Synth, SineAmplitudeMeasured) {
  SynthSpec spec;
  spec.count = 5;
  spec.amplitude = FactorRange::fixed(2.0);
  auto d = synth_generate(spec);
  for (const auto& s : d.series()) EXPECT_NEAR(eval::peak_to_peak(s), 4.0, 0.2);
}

TEST(Synth, ConditionsEqualFactorsAndSeeded) {
  SynthSpec spec;
  spec.count = 50;
  spec.seed = 3;
  spec.waveforms = {Waveform::sine, Waveform::square};
  spec.frequency = FactorRange::choice({1, 2, 4});
  spec.observed = {"waveform", "frequency", "amplitude"};
  auto r = synth_generate_full(spec);
  for (std::size_t i = 0; i < r.factors.size(); ++i) {
    const auto& c = r.dataset.condition(i);
    EXPECT_EQ(c.category(0).value, static_cast<std::uint32_t>(r.factors[i].waveform));
    EXPECT_EQ(c.number(1), r.factors[i].frequency);
    EXPECT_EQ(c.number(2), r.factors[i].amplitude);
  }
  auto again = synth_generate(spec);
  for (std::size_t i = 0; i < again.size(); ++i) EXPECT_EQ(again.series(i), r.dataset.series(i));
  auto back = synth_spec_from_json(to_json(spec));
  EXPECT_EQ(to_json(back), to_json(spec));
  spec.observed = {"colour"};
  EXPECT_THROW(spec.validate(), Error);
}

TEST(Synth, WaveShapes) {
  EXPECT_NEAR(wave(Waveform::sine, 3.14159265358979 / 2), 1.0, 1e-12);
  EXPECT_EQ(wave(Waveform::square, 0.1), 1.0);
  EXPECT_EQ(wave(Waveform::square, 3.3), -1.0);
  for (double th = 0; th < 6.28; th += 0.1) {
    EXPECT_LE(std::abs(wave(Waveform::sawtooth, th)), 1.0);
  }
}
