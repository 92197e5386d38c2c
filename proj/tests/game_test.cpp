#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"

using namespace congested;

namespace {

Allocation alloc(std::initializer_list<std::size_t> one_based) {
  Allocation a;
  for (auto m : one_based) a.push_back(Choice::resource(m - 1));
  return a;
}

}  // namespace

TEST(Game, RejectsBadShapes) {
  EXPECT_THROW(GameInstance(2, 2, {1.0, 0.5, 0.2}, 1.0), InvalidGame);
  EXPECT_THROW(GameInstance(0, 2, {}, 1.0), InvalidGame);
  EXPECT_THROW(GameInstance::from_rows({{1.0, 0.2}, {0.3}}, 1.0), InvalidGame);
  EXPECT_THROW(GameInstance::from_rows({{1.5}}, 1.0), InvalidGame);
  EXPECT_THROW(GameInstance::from_rows({{-0.1}}, 1.0), InvalidGame);
  EXPECT_THROW(GameInstance::from_rows({{0.5}}, 1.0, NoiseModel::gaussian(-1.0)), InvalidGame);
}

TEST(Game, LoadsCountOnlyActiveAgents) {
  Allocation a{Choice::resource(0), Choice::idle(), Choice::resource(0), Choice::resource(1)};
  EXPECT_EQ(resource_loads(a, 3), (std::vector<std::size_t>{2, 1, 0}));
  EXPECT_EQ(loads(a, 3), (std::vector<std::size_t>{2, 0, 2, 1}));
}

TEST(Game, UtilityIsSharedEqually) {
  const auto g = fixtures::strong_weak();
  EXPECT_DOUBLE_EQ(utility(g, 0, alloc({1, 1, 1, 1})), 0.25);
  EXPECT_DOUBLE_EQ(utility(g, 2, alloc({1, 1, 2, 2})), 0.12);
  Allocation a = alloc({1, 1, 2, 2});
  a[1] = Choice::idle();
  EXPECT_DOUBLE_EQ(utility(g, 1, a), 0.0);
  EXPECT_DOUBLE_EQ(utility(g, 0, a), 1.0);
}

TEST(Game, WelfareExamples) {
  const auto g = fixtures::strong_weak();
  EXPECT_NEAR(welfare(g, alloc({1, 1, 2, 2})), 1.24, 1e-9);
  EXPECT_NEAR(welfare(g, alloc({2, 2, 2, 2})), 0.24, 1e-9);
  const auto single = GameInstance::from_rows({{0.3, 0.7}}, 1.0);
  EXPECT_DOUBLE_EQ(welfare(single, alloc({1})), 0.3);
  EXPECT_DOUBLE_EQ(welfare(single, alloc({2})), 0.7);
}

TEST(Game, AllocationOutOfRangeThrows) {
  const auto g = fixtures::strong_weak();
  EXPECT_THROW(welfare(g, alloc({1, 1, 3, 1})), InvalidGame);
  EXPECT_THROW(welfare(g, alloc({1, 1})), InvalidGame);
}

TEST(GameProperty, LoadSumsMatchActiveCount) {
  std::mt19937_64 rng{11};
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 8, m = 1 + rng() % 4;
    Allocation a;
    std::size_t active = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng() % 5 == 0) {
        a.push_back(Choice::idle());
      } else {
        a.push_back(Choice::resource(rng() % m));
        ++active;
      }
    }
    std::size_t total = 0;
    for (auto c : resource_loads(a, m)) total += c;
    EXPECT_EQ(total, active);
  }
}

TEST(GameProperty, WelfareSummationOrdersAgree) {
  std::mt19937_64 rng{12};
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 8, m = 1 + rng() % 4;
    const auto g = fixtures::random_game(rng, n, m);
    Allocation a;
    for (std::size_t i = 0; i < n; ++i) a.push_back(Choice::resource(rng() % m));

    double by_agent = 0.0;
    for (std::size_t i = 0; i < n; ++i) by_agent += utility(g, i, a);
    double by_resource = 0.0;
    const auto counts = resource_loads(a, m);
    for (std::size_t r = 0; r < m; ++r) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (a[i].resource() == r) s += g.base_utility(i, r);
      if (counts[r] > 0) by_resource += s / static_cast<double>(counts[r]);
    }
    EXPECT_NEAR(welfare(g, a), by_agent, 1e-12);
    EXPECT_NEAR(welfare(g, a), by_resource, 1e-12);
  }
}

// Moving another agent onto my resource strictly lowers my utility.
TEST(GameProperty, AgentsAreInterdependent) {
  std::mt19937_64 rng{13};
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 6, m = 2 + rng() % 3;
    const auto g = fixtures::random_game(rng, n, m);
    Allocation a;
    for (std::size_t i = 0; i < n; ++i) a.push_back(Choice::resource(rng() % m));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        if (a[i] == a[k] || g.base_utility(i, a[i].resource()) <= 0.0) continue;
        Allocation moved = a;
        moved[k] = a[i];
        EXPECT_LT(utility(g, i, moved), utility(g, i, a));
      }
    }
  }
}

TEST(Rewards, ZeroNoiseIsExact) {
  const auto g = fixtures::strong_weak();
  std::mt19937_64 rng{1};
  const auto r = sample_rewards(g, alloc({1, 1, 1, 1}), rng);
  for (const auto& x : r) {
    ASSERT_TRUE(x.has_value());
    EXPECT_DOUBLE_EQ(*x, 0.25);
  }
}

TEST(Rewards, IdleAgentGetsNoSample) {
  const auto g = fixtures::strong_weak(NoiseModel::gaussian(0.1));
  std::mt19937_64 rng{2};
  Allocation a = alloc({1, 2, 2, 1});
  a[2] = Choice::idle();
  const auto r = sample_rewards(g, a, rng);
  EXPECT_FALSE(r[2].has_value());
  EXPECT_TRUE(r[0].has_value() && r[1].has_value() && r[3].has_value());
}

TEST(Rewards, GaussianMeanWithinThreeSigma) {
  const auto g = fixtures::strong_weak(NoiseModel::gaussian(0.1));
  std::mt19937_64 rng{3};
  const auto a = alloc({1, 1, 2, 2});
  constexpr int kDraws = 100000;
  double sum0 = 0.0, sum2 = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const auto r = sample_rewards(g, a, rng);
    sum0 += *r[0];
    sum2 += *r[2];
  }
  const double tol = 3.0 * std::sqrt(0.1 / kDraws);
  EXPECT_NEAR(sum0 / kDraws, 0.5, tol);
  EXPECT_NEAR(sum2 / kDraws, 0.12, tol);
}

class SubGaussianTail : public ::testing::TestWithParam<NoiseModel> {};

TEST_P(SubGaussianTail, TailBelowBound) {
  const auto noise = GetParam();
  std::mt19937_64 rng{4};
  constexpr int kDraws = 200000;
  std::vector<double> xs(kDraws);
  double mean = 0.0;
  for (auto& x : xs) {
    x = noise.sample(rng);
    mean += x;
  }
  EXPECT_NEAR(mean / kDraws, 0.0, 4.0 * std::sqrt(noise.variance_proxy / kDraws));
  const double b = noise.variance_proxy;
  for (double s : {0.1, 0.2, 0.3, 0.5, 0.7, 1.0}) {
    std::size_t over = 0;
    for (double x : xs) over += std::abs(x) > s;
    const double empirical = static_cast<double>(over) / kDraws;
    const double bound = 2.0 * std::exp(-s * s / (2.0 * b));
    EXPECT_LE(empirical, bound * 1.05 + 3.0 / std::sqrt(static_cast<double>(kDraws))) << "s=" << s;
  }
}

INSTANTIATE_TEST_SUITE_P(Noise, SubGaussianTail,
                         ::testing::Values(NoiseModel::gaussian(0.1), NoiseModel::gaussian(0.02),
                                           NoiseModel::uniform_bounded(0.1)));

TEST(Noise, UniformBoundedStaysInRange) {
  const auto noise = NoiseModel::uniform_bounded(0.04);
  std::mt19937_64 rng{5};
  for (int i = 0; i < 10000; ++i) {
    const double x = noise.sample(rng);
    EXPECT_LE(std::abs(x), 0.2);
  }
}

TEST(Noise, KindNamesRoundTrip) {
  for (auto k : {NoiseKind::Zero, NoiseKind::Gaussian, NoiseKind::UniformBounded})
    EXPECT_EQ(parse_noise_kind(to_string(k)), k);
  EXPECT_THROW(parse_noise_kind("laplace"), InvalidGame);
}

TEST(GameJson, RoundTrip) {
  std::mt19937_64 rng{6};
  for (int trial = 0; trial < 50; ++trial) {
    auto g = fixtures::random_game(rng, 1 + rng() % 6, 1 + rng() % 4).with_noise(NoiseModel::gaussian(0.1));
    const nlohmann::json j = g;
    EXPECT_EQ(j.get<GameInstance>(), g);
    EXPECT_EQ(nlohmann::json::parse(j.dump()).get<GameInstance>(), g);
  }
}

TEST(GameJson, Schema) {
  const nlohmann::json j = fixtures::strong_weak(NoiseModel::gaussian(0.1));
  EXPECT_EQ(j.at("N"), 4);
  EXPECT_EQ(j.at("M"), 2);
  EXPECT_EQ(j.at("U").size(), 4u);
  EXPECT_EQ(j.at("noise").at("kind"), "gaussian");
  EXPECT_DOUBLE_EQ(j.at("noise").at("b").get<double>(), 0.1);
  auto bad = j;
  bad["N"] = 3;
  EXPECT_THROW(bad.get<GameInstance>(), InvalidGame);
}
