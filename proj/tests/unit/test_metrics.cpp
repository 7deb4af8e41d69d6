#include "cts/metrics.hpp"
#include "cts/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>

using namespace cts;
using namespace cts::eval;

namespace {

TimeSeries col(std::initializer_list<double> v) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return TimeSeries(m);
}

TimeSeries random_series(std::mt19937_64& rng, std::size_t t, std::size_t c) {
  std::normal_distribution<double> g;
  return TimeSeries(Eigen::MatrixXd::NullaryExpr(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c),
                                                 [&] { return g(rng); }));
}

// Minimal cost over every monotone warping path, by plain recursion.
double brute_dtw(const TimeSeries& x, const TimeSeries& y) {
  const auto n = x.length(), m = y.length();
  std::function<double(std::size_t, std::size_t)> walk = [&](std::size_t i, std::size_t j) -> double {
    const double here = (x.values().row(static_cast<Eigen::Index>(i)) - y.values().row(static_cast<Eigen::Index>(j))).squaredNorm();
    if (i == n - 1 && j == m - 1) return here;
    double best = std::numeric_limits<double>::infinity();
    if (i + 1 < n) best = std::min(best, walk(i + 1, j));
    if (j + 1 < m) best = std::min(best, walk(i, j + 1));
    if (i + 1 < n && j + 1 < m) best = std::min(best, walk(i + 1, j + 1));
    return here + best;
  };
  return std::sqrt(walk(0, 0));
}

}  // namespace

TEST(Ed, Examples) {
  std::mt19937_64 rng(1);
  auto x = random_series(rng, 10, 2), y = random_series(rng, 10, 2);
  EXPECT_EQ(ed(x, x), 0.0);
  EXPECT_DOUBLE_EQ(ed(col({0, 0}), col({3, 4})), 5.0);
  EXPECT_EQ(ed(x, y), ed(y, x));
  EXPECT_THROW(ed(x, random_series(rng, 9, 2)), Error);
}

TEST(Dtw, Examples) {
  std::mt19937_64 rng(2);
  auto x = random_series(rng, 12, 2);
  EXPECT_EQ(dtw(x, x), 0.0);
  EXPECT_EQ(dtw(col({1, 2, 3}), col({1, 2, 2, 3})), 0.0);
  EXPECT_DOUBLE_EQ(dtw(col({0}), col({5})), 5.0);
  EXPECT_THROW(dtw(x, random_series(rng, 12, 3)), Error);
  EXPECT_THROW(dtw(x, TimeSeries(0, 2)), Error);
}

TEST(Dtw, MatchesExhaustivePathEnumeration) {
  std::mt19937_64 rng(3);
  for (std::size_t n = 1; n <= 6; ++n)
    for (std::size_t m = 1; m <= 6; ++m)
      for (int rep = 0; rep < 3; ++rep) {
        auto x = random_series(rng, n, 2), y = random_series(rng, m, 2);
        EXPECT_NEAR(dtw(x, y), brute_dtw(x, y), 1e-12);
      }
}

TEST(Dtw, NeverExceedsEd) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    auto x = random_series(rng, 20, 1), y = random_series(rng, 20, 1);
    EXPECT_LE(dtw(x, y), ed(x, y) + 1e-12);
  }
}

TEST(Acd, Examples) {
  std::mt19937_64 rng(5);
  auto x = random_series(rng, 64, 2);
  EXPECT_EQ(acd(x, x, 5), 0.0);

  Eigen::MatrixXd alt(64, 1), flat = Eigen::MatrixXd::Constant(64, 1, 3.0);
  for (int t = 0; t < 64; ++t) alt(t, 0) = t % 2 ? -1.0 : 1.0;
  // direct lag-1 autocorrelation
  const double mean = alt.mean();
  double num = 0, den = 0;
  for (int t = 0; t < 64; ++t) den += (alt(t, 0) - mean) * (alt(t, 0) - mean);
  for (int t = 0; t + 1 < 64; ++t) num += (alt(t, 0) - mean) * (alt(t + 1, 0) - mean);
  EXPECT_NEAR(autocorrelation(alt.col(0), 1)[0], num / den, 1e-12);
  EXPECT_NEAR(num / den, -1.0, 0.02);
  EXPECT_NEAR(acd(TimeSeries(alt), TimeSeries(flat), 1), 1.0, 0.02);
  EXPECT_THROW(acd(x, x, 64), Error);

  auto a = random_series(rng, 512, 1), b = random_series(rng, 512, 1);
  EXPECT_LT(acd(a, b, default_acd_lag(512)), 0.15);
  EXPECT_EQ(default_acd_lag(10), 5u);
  EXPECT_EQ(default_acd_lag(512), 20u);
}

TEST(Frechet, IdenticalSetsAndClosedForm) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(200, 3, [&] { return g(rng); });
  EXPECT_LT(frechet_distance(a, a), 1e-6);

  Eigen::MatrixXd p(20000, 1), q(20000, 1);
  for (int i = 0; i < 20000; ++i) {
    p(i, 0) = g(rng);
    q(i, 0) = 2.0 + g(rng);
  }
  const double sp = std::sqrt((p.array() - p.mean()).square().sum() / 19999.0);
  const double sq = std::sqrt((q.array() - q.mean()).square().sum() / 19999.0);
  const double oracle = std::pow(p.mean() - q.mean(), 2) + std::pow(sp - sq, 2);
  EXPECT_NEAR(frechet_distance(p, q), oracle, 0.05 * oracle);
  EXPECT_NEAR(frechet_distance(p, q), 4.0, 0.2);
}

TEST(Frechet, RotationInvariant) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(100, 4, [&] { return g(rng); });
  Eigen::MatrixXd b = Eigen::MatrixXd::NullaryExpr(100, 4, [&] { return 0.5 + 1.5 * g(rng); });
  Eigen::MatrixXd r = Eigen::HouseholderQR<Eigen::MatrixXd>(Eigen::MatrixXd::NullaryExpr(4, 4, [&] { return g(rng); }))
                          .householderQ();
  EXPECT_NEAR(frechet_distance(a * r, b * r), frechet_distance(a, b), 1e-8);
}

TEST(Cfid, UsesEmbedderAndRejectsTinySets) {
  std::mt19937_64 rng(8);
  std::vector<TimeSeries> real, gen;
  for (int i = 0; i < 30; ++i) {
    real.push_back(random_series(rng, 8, 1));
    gen.push_back(random_series(rng, 8, 1));
  }
  Embedder mean_embed = [](const TimeSeries& x) { return Eigen::VectorXd::Constant(1, x.values().mean()); };
  EXPECT_LT(cfid(real, real, mean_embed), 1e-6);
  EXPECT_GE(cfid(real, gen, mean_embed), 0.0);
  std::vector<TimeSeries> one{real[0]};
  EXPECT_THROW(cfid(one, gen, mean_embed), Error);
}

TEST(Classification, AccuracyAndWeightedF1) {
  std::vector<std::size_t> l{0, 1, 2, 1};
  EXPECT_EQ(accuracy(l, l), 1.0);
  EXPECT_EQ(weighted_f1(l, l), 1.0);
  std::vector<std::size_t> bl{0, 0, 1, 1}, bw{1, 1, 0, 0};
  EXPECT_EQ(accuracy(bl, bw), 0.0);
  std::vector<std::size_t> a{0, 0, 1}, p{0, 1, 1};
  EXPECT_NEAR(weighted_f1(a, p), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(accuracy(a, p), 2.0 / 3.0, 1e-12);
}

TEST(Auc, Examples) {
  std::vector<int> l{0, 0, 1, 1};
  std::vector<double> s{0.1, 0.4, 0.35, 0.8}, sep{0.1, 0.2, 0.3, 0.4}, neg{-0.1, -0.4, -0.35, -0.8};
  EXPECT_DOUBLE_EQ(auc(l, s), 0.75);
  EXPECT_DOUBLE_EQ(auc(l, sep), 1.0);
  EXPECT_DOUBLE_EQ(auc(l, neg), 0.25);
  std::vector<double> ties{0.5, 0.5, 0.5, 0.5};
  EXPECT_DOUBLE_EQ(auc(l, ties), 0.5);

  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> lab;
    std::vector<double> sc, ng;
    for (int i = 0; i < 40; ++i) {
      lab.push_back(i < 2 ? i : coin(rng));
      sc.push_back(std::round(g(rng) * 3));
      ng.push_back(-sc.back());
    }
    EXPECT_NEAR(auc(lab, ng), 1.0 - auc(lab, sc), 1e-12);
  }
}

TEST(Ranks, SpearmanAndTies) {
  std::vector<double> v{3, 1, 3, 2};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{3.5, 1, 3.5, 2}));
  std::vector<double> x{1, 2, 3, 4}, y{10, 20, 25, 40}, z{4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(spearman(x, y), 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, z), -1.0);
}

TEST(Stats, PeakMedianQuantile) {
  EXPECT_EQ(peak_to_peak(col({-1, 3, 2})), 4.0);
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_EQ(quantile({0, 1, 2, 3, 4}, 0.5), 2.0);
  EXPECT_EQ(quantile({0, 1, 2, 3, 4}, 1.0), 4.0);
}
