#include "cts/selection.hpp"
#include "cts/error.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

using namespace cts;
using namespace cts::select;

namespace {

ConditionSchema binary4() {
  std::vector<SlotSpec> s;
  for (int i = 0; i < 4; ++i) s.push_back({"b" + std::to_string(i), SlotKind::categorical, {"0", "1"}, false});
  return ConditionSchema(s);
}

ConditionVector bits(std::initializer_list<int> v) {
  std::vector<ConditionSlot> s;
  for (int b : v) s.emplace_back(CategoryCode{static_cast<std::uint32_t>(b)});
  return ConditionVector(s);
}

// Five clusters of four members each; cluster ids 0..4 print as 1..5.
struct Fixture {
  cluster::ClusterModel model;
  std::vector<ConditionVector> conditions;
  std::vector<Eigen::VectorXd> latents;
};

Fixture example_fixture() {
  const std::vector<ConditionVector> centers{bits({1, 0, 0, 0}), bits({0, 0, 0, 0}), bits({0, 1, 0, 0}),
                                             bits({1, 1, 1, 0}), bits({0, 0, 1, 1})};
  Fixture f;
  std::vector<std::size_t> assignment;
  for (std::size_t j = 0; j < centers.size(); ++j)
    for (int i = 0; i < 4; ++i) {
      assignment.push_back(j);
      f.conditions.push_back(centers[j]);
      Eigen::VectorXd z(2);
      z << static_cast<double>(j), static_cast<double>(i);
      f.latents.push_back(z);
    }
  f.model = cluster::ClusterModel(binary4(), 1.0, centers, assignment, 1, {0.0});
  return f;
}

Fixture random_fixture(std::mt19937_64& rng, std::size_t n, std::size_t k, std::size_t dim) {
  std::uniform_real_distribution<double> u(0, 1);
  ConditionSchema schema({{"x", SlotKind::numeric, {}, false}, {"y", SlotKind::numeric, {}, false}});
  Fixture f;
  std::vector<ConditionVector> centers;
  for (std::size_t j = 0; j < k; ++j) centers.push_back(ConditionVector({u(rng), u(rng)}));
  std::vector<std::size_t> assignment;
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i < k ? i : pick(rng);
    assignment.push_back(j);
    f.conditions.push_back(centers[j]);
    Eigen::VectorXd z(dim);
    for (std::size_t d = 0; d < dim; ++d) z[d] = std::round(u(rng) * 4.0);  // coarse grid forces ties
    f.latents.push_back(z);
  }
  f.model = cluster::ClusterModel(schema, 1.0, centers, assignment, 1, {0.0});
  return f;
}

}  // namespace

TEST(Dcs, NearestAndFurthestOfWorkedExample) {
  auto f = example_fixture();
  auto ids = dcs(f.model, bits({1, 1, 1, 1}), 2);
  ASSERT_EQ(ids.size(), 2u);
  EXPECT_EQ(ids[0] + 1, 4u);
  EXPECT_EQ(ids[1] + 1, 2u);
}

TEST(Dcs, AllWhenK1EqualsK) {
  auto f = example_fixture();
  auto ids = dcs(f.model, bits({0, 1, 0, 1}), 5);
  std::set<std::size_t> s(ids.begin(), ids.end());
  EXPECT_EQ(s.size(), 5u);
  EXPECT_THROW(dcs(f.model, bits({0, 1, 0, 1}), 6), Error);
}

TEST(Dcs, MatchesFullSortOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    auto f = random_fixture(rng, 40, 9, 2);
    ConditionVector c0({u(rng), u(rng)});
    std::vector<std::size_t> order(f.model.k());
    std::iota(order.begin(), order.end(), 0);
    auto d = [&](std::size_t j) { return cluster::dissimilarity(c0, f.model.center(j), f.model.schema(), 1.0); };
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return d(a) < d(b); });
    for (std::size_t k1 = 1; k1 <= f.model.k(); ++k1) {
      std::set<std::size_t> expect(order.begin(), order.begin() + static_cast<long>((k1 + 1) / 2));
      expect.insert(order.end() - static_cast<long>(k1 / 2), order.end());
      auto got = dcs(f.model, c0, k1);
      EXPECT_EQ(std::set<std::size_t>(got.begin(), got.end()), expect);
      EXPECT_EQ(got.size(), k1);
      if (k1 >= 2) {
        EXPECT_TRUE(std::count(got.begin(), got.end(), order.front()));
        EXPECT_TRUE(std::count(got.begin(), got.end(), order.back()));
      }
    }
  }
}

TEST(RandSelect, DeterministicDistinctAndUniform) {
  auto f = example_fixture();
  EXPECT_EQ(rand_select(f.model, 3, 42), rand_select(f.model, 3, 42));
  auto all = rand_select(f.model, 5, 1);
  EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()).size(), 5u);
  EXPECT_THROW(rand_select(f.model, 6, 1), Error);

  std::map<std::size_t, int> hits;
  const int seeds = 10000;
  for (int s = 0; s < seeds; ++s) ++hits[rand_select(f.model, 1, static_cast<std::uint64_t>(s)).at(0)];
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(hits[j] / static_cast<double>(seeds), 0.2, 0.02);
}

TEST(Nns, SelfFirstAndSmallCluster) {
  auto f = example_fixture();
  std::vector<std::size_t> clusters{2};
  auto lists = nns(f.latents[10], clusters, f.model, f.latents, 2);
  ASSERT_EQ(lists.size(), 1u);
  EXPECT_EQ(lists[0].front(), 10u);

  std::vector<ConditionVector> centers{bits({0, 0, 0, 0}), bits({1, 1, 1, 1})};
  cluster::ClusterModel small(binary4(), 1.0, centers, {0, 0, 1, 1, 1}, 1, {0.0});
  std::vector<Eigen::VectorXd> lat(5, Eigen::VectorXd::Zero(1));
  std::vector<std::size_t> first{0};
  auto got = nns(Eigen::VectorXd::Zero(1), first, small, lat, 3);
  EXPECT_EQ(got[0], (std::vector<std::size_t>{0, 1}));
}

TEST(Nns, MatchesExhaustiveSort) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 4);
  for (int trial = 0; trial < 1000; ++trial) {
    auto f = random_fixture(rng, 30, 4, 2);
    Eigen::VectorXd z0(2);
    z0 << std::round(u(rng)), std::round(u(rng));
    const std::size_t k2 = 1 + trial % 6;
    std::vector<std::size_t> clusters{0, 1, 2, 3};
    auto got = nns(z0, clusters, f.model, f.latents, k2);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < f.latents.size(); ++i)
        if (f.model.cluster_of(i) == clusters[c]) members.push_back(i);
      std::stable_sort(members.begin(), members.end(), [&](auto a, auto b) {
        return (f.latents[a] - z0).norm() < (f.latents[b] - z0).norm();
      });
      members.resize(std::min(k2, members.size()));
      EXPECT_EQ(got[c], members);
    }
  }
}

TEST(Select, WorkedExampleSizing) {
  auto f = example_fixture();
  SelectionConfig cfg{2, 3, ClusterStrategy::dcs, NeighborStrategy::nns, 0};
  auto r = cts::select::select(f.latents[0], bits({1, 1, 1, 1}), f.model, f.conditions, f.latents, cfg);
  EXPECT_EQ(r.indices.size(), 6u);
  EXPECT_EQ(std::set<std::size_t>(r.indices.begin(), r.indices.end()).size(), 6u);
  for (std::size_t i = 0; i < r.indices.size(); ++i) {
    EXPECT_TRUE(std::count(r.clusters.begin(), r.clusters.end(), f.model.cluster_of(r.indices[i])));
    EXPECT_EQ(r.source_cluster[i], f.model.cluster_of(r.indices[i]));
    EXPECT_EQ(r.conditions[i], f.conditions[r.indices[i]]);
    EXPECT_EQ(r.latents[i], f.latents[r.indices[i]]);
  }
}

TEST(Select, ExhaustiveReturnsEverything) {
  auto f = example_fixture();
  SelectionConfig cfg{5, 10, ClusterStrategy::dcs, NeighborStrategy::nns, 0};
  auto r = cts::select::select(f.latents[0], bits({1, 1, 1, 1}), f.model, f.conditions, f.latents, cfg);
  std::vector<std::size_t> idx = r.indices;
  std::sort(idx.begin(), idx.end());
  std::vector<std::size_t> all(f.conditions.size());
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(idx, all);

  cfg = {1, 1, ClusterStrategy::all, NeighborStrategy::all, 0};
  EXPECT_EQ(cts::select::select(f.latents[0], bits({1, 1, 1, 1}), f.model, f.conditions, f.latents, cfg).indices.size(),
            f.conditions.size());
}

TEST(Select, RandomNeighborsDeterministicUnderSeed) {
  auto f = example_fixture();
  SelectionConfig cfg{2, 2, ClusterStrategy::dcs, NeighborStrategy::random, 9};
  auto a = cts::select::select(f.latents[0], bits({1, 1, 1, 1}), f.model, f.conditions, f.latents, cfg);
  auto b = cts::select::select(f.latents[0], bits({1, 1, 1, 1}), f.model, f.conditions, f.latents, cfg);
  EXPECT_EQ(a.indices, b.indices);
  EXPECT_EQ(a.indices.size(), 4u);
}

TEST(Select, ScalesSublinearlyInPractice) {
  std::mt19937_64 rng(13);
  auto time_at = [&](std::size_t n) {
    auto f = random_fixture(rng, n, 20, 8);
    SelectionConfig cfg{4, 5, ClusterStrategy::dcs, NeighborStrategy::nns, 0};
    ConditionVector c0({0.5, 0.5});
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 7; ++rep) {
      auto t0 = std::chrono::steady_clock::now();
      for (int r = 0; r < 20; ++r) cts::select::select(f.latents[0], c0, f.model, f.conditions, f.latents, cfg);
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
  };
  time_at(5000);
  const double small = time_at(5000);
  const double large = time_at(20000);
  EXPECT_LT(large / small, 6.0);
}

TEST(Config, Validation) {
  SelectionConfig cfg{3, 2, ClusterStrategy::dcs, NeighborStrategy::nns, 0};
  EXPECT_THROW(cfg.validate(2), Error);
  EXPECT_NO_THROW(cfg.validate(3));
  cfg.k2 = 0;
  EXPECT_THROW(cfg.validate(3), Error);
  EXPECT_EQ(cluster_strategy_from_string(to_string(ClusterStrategy::rand)), ClusterStrategy::rand);
  EXPECT_EQ(neighbor_strategy_from_string(to_string(NeighborStrategy::random)), NeighborStrategy::random);
  EXPECT_THROW(cluster_strategy_from_string("nearest"), Error);
}
