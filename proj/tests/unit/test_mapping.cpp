#include "cts/mapping.hpp"
#include "cts/error.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <numeric>
#include <random>

using namespace cts;
using namespace cts::mapping;

namespace {

ConditionSchema numeric(std::size_t m) {
  std::vector<SlotSpec> s;
  for (std::size_t i = 0; i < m; ++i) s.push_back({"x" + std::to_string(i), SlotKind::numeric, {}, false});
  return ConditionSchema(s);
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

MappingConfig tree_cfg(std::size_t depth = kUnboundedDepth) {
  MappingConfig c;
  c.variant = Variant::tree;
  c.tree.max_depth = depth;
  c.tree.min_samples_leaf = 1;
  return c;
}

}  // namespace

TEST(Encode, NumericPassThroughAndOneHot) {
  auto s = numeric(2);
  std::vector<ConditionVector> c{ConditionVector({1.5, -2.0}), ConditionVector({0.0, 3.0})};
  auto m = encode_conditions(c, s);
  EXPECT_EQ(m(0, 0), 1.5);
  EXPECT_EQ(m(1, 1), 3.0);

  ConditionSchema cat({{"c", SlotKind::categorical, {"a", "b", "c"}, false}});
  EXPECT_EQ(encode_condition(ConditionVector({CategoryCode{1}}), cat), vec({0, 1, 0}));

  ConditionSchema mixed({{"x", SlotKind::numeric, {}, false},
                         {"c", SlotKind::categorical, {"a", "b", "c"}, false},
                         {"d", SlotKind::categorical, {"p", "q"}, false}});
  EXPECT_EQ(feature_columns(mixed).size(), 1u + 3u + 2u);
  EXPECT_EQ(feature_columns(mixed)[2].name, "c=b");
  EXPECT_THROW(encode_condition(ConditionVector({CategoryCode{5}}), cat), Error);
}

TEST(Fit, ConstantTargetsGiveSingleLeaf) {
  auto s = numeric(1);
  std::vector<ConditionVector> c{ConditionVector({0.0}), ConditionVector({1.0}), ConditionVector({2.0})};
  std::vector<Eigen::VectorXd> y(3, vec({4.0, -1.0}));
  auto m = fit(c, y, s, tree_cfg());
  EXPECT_EQ(m.trees().at(0).leaf_count(), 1u);
  EXPECT_EQ(predict(m, ConditionVector({7.0})), vec({4.0, -1.0}));
  auto e = explain(m);
  EXPECT_TRUE(e.rules.empty());
  for (double v : e.importance) EXPECT_EQ(v, 0.0);
}

TEST(Fit, UnboundedTreeInterpolatesTraining) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  auto s = numeric(3);
  std::vector<ConditionVector> c;
  std::vector<Eigen::VectorXd> y;
  for (int i = 0; i < 60; ++i) {
    c.push_back(ConditionVector({g(rng), g(rng), g(rng)}));
    y.push_back(vec({g(rng), g(rng), g(rng), g(rng)}));
  }
  auto m = fit(c, y, s, tree_cfg());
  EXPECT_EQ(m.training_loss(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(predict(m, c[i]), y[i]);
}

TEST(Fit, TrainingLossNonIncreasingInDepth) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  auto s = numeric(2);
  std::vector<ConditionVector> c;
  std::vector<Eigen::VectorXd> y;
  for (int i = 0; i < 80; ++i) {
    const double a = u(rng), b = u(rng);
    c.push_back(ConditionVector({a, b}));
    y.push_back(vec({std::sin(6 * a) + b, a * b}));
  }
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t d = 1; d <= 10; ++d) {
    const double loss = fit(c, y, s, tree_cfg(d)).training_loss();
    EXPECT_LE(loss, prev + 1e-12);
    prev = loss;
  }
}

TEST(Fit, LinearRecoversExactLinearTargets) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  auto s = numeric(3);
  Eigen::MatrixXd w(3, 2);
  w << 1.0, -0.5, 2.0, 0.25, -1.5, 3.0;
  Eigen::VectorXd b = vec({0.7, -1.1});
  std::vector<ConditionVector> c;
  std::vector<Eigen::VectorXd> y;
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd x = vec({u(rng), u(rng), u(rng)});
    c.push_back(ConditionVector({x[0], x[1], x[2]}));
    y.push_back(w.transpose() * x + b);
  }
  MappingConfig cfg;
  cfg.variant = Variant::linear;
  cfg.ridge_lambda = 1e-12;
  auto m = fit(c, y, s, cfg);
  for (std::size_t i = 0; i < c.size(); ++i)
    EXPECT_LT((predict(m, c[i]) - y[i]).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((m.coefficients() - w).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Fit, LinearMatchesRidgeNormalEquations) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  auto s = numeric(2);
  std::vector<ConditionVector> c;
  std::vector<Eigen::VectorXd> y;
  for (int i = 0; i < 30; ++i) {
    c.push_back(ConditionVector({g(rng), g(rng)}));
    y.push_back(vec({g(rng), g(rng), g(rng)}));
  }
  MappingConfig cfg;
  cfg.variant = Variant::linear;
  cfg.ridge_lambda = 0.5;
  auto m = fit(c, y, s, cfg);
  // centre, solve (XcT Xc + lambda I) W = XcT Yc, intercept = ybar - W^T xbar
  Eigen::MatrixXd x = encode_conditions(c, s), t(30, 3);
  for (int i = 0; i < 30; ++i) t.row(i) = y[static_cast<std::size_t>(i)].transpose();
  Eigen::RowVectorXd xm = x.colwise().mean(), tm = t.colwise().mean();
  Eigen::MatrixXd xc = x.rowwise() - xm, tc = t.rowwise() - tm;
  Eigen::MatrixXd wexp = (xc.transpose() * xc + 0.5 * Eigen::MatrixXd::Identity(2, 2)).ldlt().solve(xc.transpose() * tc);
  Eigen::VectorXd bexp = tm.transpose() - wexp.transpose() * xm.transpose();
  EXPECT_LT((m.coefficients() - wexp).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((m.intercept() - bexp).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Fit, Errors) {
  auto s = numeric(1);
  std::vector<ConditionVector> none;
  std::vector<Eigen::VectorXd> nolat;
  EXPECT_THROW(fit(none, nolat, s, tree_cfg()), Error);
  std::vector<ConditionVector> one{ConditionVector({1.0})};
  std::vector<Eigen::VectorXd> two(2, vec({1.0}));
  EXPECT_THROW(fit(one, two, s, tree_cfg()), Error);
  TreeConfig bad;
  bad.max_depth = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Fit, IdenticalConditionsPredictMean) {
  auto s = numeric(1);
  std::vector<ConditionVector> c(4, ConditionVector({1.0}));
  std::vector<Eigen::VectorXd> y{vec({0.0}), vec({1.0}), vec({2.0}), vec({3.0})};
  EXPECT_DOUBLE_EQ(predict(fit(c, y, s, tree_cfg()), ConditionVector({1.0}))[0], 1.5);
}

TEST(Predict, SingleSplitRuleTrace) {
  auto s = numeric(1);
  std::vector<ConditionVector> c{ConditionVector({0.0}), ConditionVector({1.0})};
  std::vector<Eigen::VectorXd> y{vec({-1.0}), vec({1.0})};
  auto m = fit(c, y, s, tree_cfg(1));
  const auto& root = m.trees()[0].nodes()[0];
  EXPECT_EQ(root.feature, 0);
  EXPECT_DOUBLE_EQ(root.threshold, 0.5);
  EXPECT_EQ(predict(m, ConditionVector({0.3}))[0], -1.0);
  EXPECT_EQ(predict(m, ConditionVector({0.7}))[0], 1.0);
  auto e = explain(m);
  EXPECT_FALSE(e.rules.empty());
  EXPECT_DOUBLE_EQ(e.importance.at(0), 1.0);
}

TEST(Predict, ForestOfOneTreeEqualsTree) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  auto s = numeric(2);
  std::vector<ConditionVector> c;
  std::vector<Eigen::VectorXd> y;
  for (int i = 0; i < 40; ++i) {
    c.push_back(ConditionVector({g(rng), g(rng)}));
    y.push_back(vec({g(rng)}));
  }
  MappingConfig f;
  f.variant = Variant::forest;
  f.tree.trees = 1;
  f.tree.bootstrap = false;
  f.tree.feature_subset = 2;
  f.tree.max_depth = 4;
  auto fm = fit(c, y, s, f);
  auto tm = fit(c, y, s, tree_cfg(4));
  for (int q = 0; q < 50; ++q) {
    ConditionVector x({g(rng), g(rng)});
    EXPECT_EQ(predict(fm, x), predict(tm, x));
  }
}

TEST(Predict, ForestDeterministicAndMeanOfTrees) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  auto s = numeric(3);
  std::vector<ConditionVector> c;
  std::vector<Eigen::VectorXd> y;
  for (int i = 0; i < 50; ++i) {
    c.push_back(ConditionVector({g(rng), g(rng), g(rng)}));
    y.push_back(vec({g(rng), g(rng)}));
  }
  MappingConfig f;
  f.variant = Variant::forest;
  f.tree.trees = 7;
  f.tree.seed = 3;
  auto a = fit(c, y, s, f), b = fit(c, y, s, f);
  ConditionVector x({0.1, -0.2, 0.3});
  EXPECT_EQ(predict(a, x), predict(b, x));
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd row = encode_condition(x, s);
  for (auto it = a.trees().rbegin(); it != a.trees().rend(); ++it) sum += it->predict(row);
  EXPECT_LT((predict(a, x) - sum / 7.0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SampleLatent, ClosedFormsAndVariance) {
  Eigen::VectorXd mu = vec({1.0, -2.0}), lv = vec({0.0, std::log(4.0)});
  EXPECT_EQ(sample_latent(mu, lv, Eigen::VectorXd::Zero(2)), mu);
  EXPECT_EQ(sample_latent(mu, Eigen::VectorXd::Zero(2), vec({0.5, 0.25})), vec({1.5, -1.75}));
  EXPECT_THROW(sample_latent(mu, vec({0.0}), vec({0.0, 0.0})), Error);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  const int n = 10000;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(2), s2 = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd z = sample_latent(mu, lv, vec({g(rng), g(rng)}));
    s1 += z;
    s2 += z.cwiseProduct(z);
  }
  Eigen::VectorXd mean = s1 / n;
  Eigen::VectorXd var = (s2 / n - mean.cwiseProduct(mean)) * n / (n - 1.0);
  EXPECT_NEAR(var[0], 1.0, 0.1);
  EXPECT_NEAR(var[1], 4.0, 0.4);
}

TEST(Explain, ImportancesNormalisedAndLinearFlagged) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  ConditionSchema mixed({{"x", SlotKind::numeric, {}, false},
                         {"c", SlotKind::categorical, {"a", "b", "c"}, false}});
  std::vector<ConditionVector> c;
  std::vector<Eigen::VectorXd> y;
  std::uniform_int_distribution<std::uint32_t> k(0, 2);
  for (int i = 0; i < 60; ++i) {
    const double x = u(rng);
    const auto cat = k(rng);
    c.push_back(ConditionVector({x, CategoryCode{cat}}));
    y.push_back(vec({x + 2.0 * cat}));
  }
  auto e = explain(fit(c, y, mixed, tree_cfg(5)));
  ASSERT_EQ(e.importance.size(), 2u);
  EXPECT_NEAR(e.importance[0] + e.importance[1], 1.0, 1e-12);
  EXPECT_GT(e.importance[1], e.importance[0]);
  EXPECT_EQ(e.conditions, (std::vector<std::string>{"x", "c"}));

  MappingConfig lin;
  lin.variant = Variant::linear;
  EXPECT_TRUE(explain(fit(c, y, mixed, lin)).linear);
}

TEST(Serialization, RoundTripPredictsIdentically) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  auto s = numeric(2);
  std::vector<ConditionVector> c;
  std::vector<Eigen::VectorXd> y;
  for (int i = 0; i < 40; ++i) {
    c.push_back(ConditionVector({g(rng), g(rng)}));
    y.push_back(vec({g(rng), g(rng)}));
  }
  for (Variant v : {Variant::linear, Variant::tree, Variant::forest}) {
    MappingConfig cfg;
    cfg.variant = v;
    auto m = fit(c, y, s, cfg);
    auto back = mapping_model_from_json(nlohmann::json::parse(to_json(m).dump()));
    for (int q = 0; q < 20; ++q) {
      ConditionVector x({g(rng), g(rng)});
      EXPECT_EQ(predict(back, x), predict(m, x));
    }
  }
}

TEST(Fit, CostIndependentOfDatasetSize) {
  // the regressor only ever sees the selected rows, so fit time tracks their count
  std::mt19937_64 rng(10);
  std::normal_distribution<double> g;
  auto s = numeric(2);
  std::vector<ConditionVector> c;
  std::vector<Eigen::VectorXd> y;
  for (int i = 0; i < 200; ++i) {
    c.push_back(ConditionVector({g(rng), g(rng)}));
    y.push_back(Eigen::VectorXd::NullaryExpr(16, [&] { return g(rng); }));
  }
  auto run = [&] {
    auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < 20; ++r) fit(c, y, s, tree_cfg(8));
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  run();
  const double a = run(), b = run();
  EXPECT_LT(std::max(a, b) / std::min(a, b), 1.5);
}
