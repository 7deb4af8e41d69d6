#include "cts/latent_algebra.hpp"
#include "cts/error.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace cts;
using namespace cts::latent;

namespace {

Eigen::VectorXd s(double v) { return Eigen::VectorXd::Constant(1, v); }

ConditionLatentPairs scalar(std::initializer_list<std::pair<double, double>> p) {
  std::vector<std::pair<double, Eigen::VectorXd>> v;
  for (auto [c, m] : p) v.emplace_back(c, s(m));
  return ConditionLatentPairs(v);
}

ConditionLatentPairs random_pairs(std::mt19937_64& rng, std::size_t n, Eigen::Index d) {
  std::uniform_real_distribution<double> u(-10, 10);
  std::normal_distribution<double> g;
  std::vector<std::pair<double, Eigen::VectorXd>> v;
  for (std::size_t i = 0; i < n; ++i) v.emplace_back(std::round(u(rng) * 4) / 4, Eigen::VectorXd::NullaryExpr(d, [&] { return g(rng); }));
  return ConditionLatentPairs(v);
}

}  // namespace

TEST(Pairs, SortedAndDuplicatesAveraged) {
  auto p = scalar({{3, 1}, {1, 0}, {3, 5}, {2, 7}});
  EXPECT_EQ(p.values(), (std::vector<double>{1, 2, 3}));
  EXPECT_DOUBLE_EQ(p.latents()[2][0], 3.0);
  EXPECT_THROW(ConditionLatentPairs(std::vector<std::pair<double, Eigen::VectorXd>>{}), Error);
}

TEST(Bracket, Examples) {
  auto p = scalar({{1, 0}, {3, 0}, {5, 0}});
  auto w = bracket(p, 4);
  EXPECT_EQ(w.mode, BlendMode::interp);
  EXPECT_EQ(w.left, 3);
  EXPECT_EQ(w.right, 5);
  EXPECT_EQ(bracket(p, 3).mode, BlendMode::exact);
  EXPECT_EQ(bracket(p, 6).mode, BlendMode::extrap_above);
  EXPECT_EQ(bracket(p, 0).mode, BlendMode::extrap_below);
  EXPECT_THROW(bracket(scalar({{1, 0}}), 1), Error);
}

TEST(Bracket, MatchesLinearScan) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-12, 12);
  for (int trial = 0; trial < 1000; ++trial) {
    auto p = random_pairs(rng, 2 + trial % 15, 1);
    if (p.size() < 2) continue;
    const double c = trial % 3 == 0 ? p.values()[static_cast<std::size_t>(trial) % p.size()] : u(rng);
    const auto& v = p.values();
    auto w = bracket(p, c);
    if (std::find(v.begin(), v.end(), c) != v.end()) {
      EXPECT_EQ(w.mode, BlendMode::exact);
    } else if (c > v.back()) {
      EXPECT_EQ(w.mode, BlendMode::extrap_above);
      EXPECT_EQ(w.left, v[v.size() - 2]);
    } else if (c < v.front()) {
      EXPECT_EQ(w.mode, BlendMode::extrap_below);
      EXPECT_EQ(w.right, v[1]);
    } else {
      double lo = -1e300, hi = 1e300;
      for (double x : v) {
        if (x < c) lo = std::max(lo, x);
        if (x > c) hi = std::min(hi, x);
      }
      EXPECT_EQ(w.mode, BlendMode::interp);
      EXPECT_EQ(w.left, lo);
      EXPECT_EQ(w.right, hi);
      EXPECT_GE(w.coefficient, 0.0);
      EXPECT_LE(w.coefficient, 1.0);
    }
  }
}

TEST(Interpolate, Examples) {
  auto p = scalar({{2, 1}, {4, 5}});
  EXPECT_DOUBLE_EQ(interpolate(p, 3).mu[0], 3.0);
  EXPECT_EQ(interpolate(p, 2).mu[0], 1.0);

  std::vector<std::pair<double, Eigen::VectorXd>> v{{0.0, Eigen::Vector3d(1, 2, 3)}, {2.0, Eigen::Vector3d(3, -2, 5)}};
  ConditionLatentPairs q(v);
  EXPECT_EQ(interpolate(q, 1.0).mu, Eigen::VectorXd(Eigen::Vector3d(2, 0, 4)));
  EXPECT_THROW(interpolate(p, 5), Error);
}

TEST(Extrapolate, Examples) {
  auto above = scalar({{2, 1}, {4, 5}});
  auto r = extrapolate(above, 6);
  EXPECT_DOUBLE_EQ(r.witness.coefficient, 2.0);
  EXPECT_DOUBLE_EQ(r.mu[0], 9.0);
  EXPECT_EQ(extrapolate(above, 4).mu[0], 5.0);
  EXPECT_DOUBLE_EQ(extrapolate(above, 4).witness.coefficient, 1.0);

  auto below = scalar({{1, 2}, {3, 6}});
  auto b = extrapolate(below, 0);
  EXPECT_DOUBLE_EQ(b.witness.coefficient, 1.5);
  EXPECT_DOUBLE_EQ(b.mu[0], 0.0);
  EXPECT_THROW(extrapolate(scalar({{1, 0}, {2, 0}, {3, 0}}), 2), Error);
}

TEST(Blend, EndpointIdentities) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = random_pairs(rng, 8, 4);
    if (p.size() < 2) continue;
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(blend(p, p.values()[i]).mu, p.latents()[i]);
  }
}

TEST(Blend, DirectFormulaOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-15, 15);
  for (int trial = 0; trial < 1000; ++trial) {
    auto p = random_pairs(rng, 6, 3);
    if (p.size() < 2) continue;
    const double c = u(rng);
    const auto& v = p.values();
    const auto& m = p.latents();
    const std::size_t n = v.size();
    Eigen::VectorXd expect;
    auto hit = std::find(v.begin(), v.end(), c);
    if (hit != v.end()) {
      expect = m[static_cast<std::size_t>(hit - v.begin())];
    } else if (c > v.back()) {
      const double beta = (c - v[n - 2]) / (v[n - 1] - v[n - 2]);
      expect = m[n - 2] + beta * (m[n - 1] - m[n - 2]);
    } else if (c < v.front()) {
      const double gamma = (c - v[1]) / (v[0] - v[1]);
      expect = m[1] + gamma * (m[0] - m[1]);
    } else {
      std::size_t hi = 0;
      while (v[hi] < c) ++hi;
      const double alpha = (c - v[hi - 1]) / (v[hi] - v[hi - 1]);
      expect = m[hi - 1] + alpha * (m[hi] - m[hi - 1]);
    }
    EXPECT_LT((blend(p, c).mu - expect).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Blend, PiecewiseLinearAndContinuousAtBoundary) {
  auto p = scalar({{0, 0}, {1, 2}, {3, -2}});
  for (double c = 0.0; c <= 3.0; c += 0.125) {
    const double expect = c <= 1 ? 2 * c : 2 - 2 * (c - 1);
    EXPECT_NEAR(blend(p, c).mu[0], expect, 1e-12);
  }
  const double eps = 1e-9;
  EXPECT_NEAR(blend(p, 3 - eps).mu[0], blend(p, 3 + eps).mu[0], 1e-7);
  EXPECT_NEAR(blend(p, 0 - eps).mu[0], blend(p, 0 + eps).mu[0], 1e-7);
}

TEST(Blend, AffineEquivariance) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-15, 15);
  Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(3, 3, [&] { return g(rng); });
  Eigen::VectorXd b = Eigen::VectorXd::NullaryExpr(3, [&] { return g(rng); });
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<double, Eigen::VectorXd>> raw, mapped;
    for (int i = 0; i < 5; ++i) {
      Eigen::VectorXd mu = Eigen::VectorXd::NullaryExpr(3, [&] { return g(rng); });
      const double c = static_cast<double>(i) * 2.0 - 4.0 + 0.1 * g(rng);
      raw.emplace_back(c, mu);
      mapped.emplace_back(c, a * mu + b);
    }
    const double c = u(rng);
    Eigen::VectorXd lhs = a * blend(ConditionLatentPairs(raw), c).mu + b;
    Eigen::VectorXd rhs = blend(ConditionLatentPairs(mapped), c).mu;
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9 * (1 + lhs.cwiseAbs().maxCoeff()));
  }
}

TEST(Blend, CoefficientMonotone) {
  auto p = scalar({{0, 0}, {1, 0}, {2, 0}});
  double prev = -1;
  for (double c = 1.01; c < 2.0; c += 0.01) {
    const double a = bracket(p, c).coefficient;
    EXPECT_GT(a, prev);
    prev = a;
  }
  prev = 1.0;
  for (double c = 2.01; c < 5.0; c += 0.05) {
    const double b = bracket(p, c).coefficient;
    EXPECT_GT(b, prev);
    prev = b;
  }
}
