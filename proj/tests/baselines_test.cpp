#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"

using namespace congested;

TEST(RandomPolicy, UniformOverTwo) {
  std::mt19937_64 rng{1};
  constexpr int kDraws = 100000;
  int first = 0;
  for (int i = 0; i < kDraws; ++i) first += random_policy(2, rng) == 0;
  EXPECT_NEAR(first / double(kDraws), 0.5, 3.0 * std::sqrt(0.25 / kDraws));
}

TEST(RandomPolicy, SingleResource) {
  std::mt19937_64 rng{2};
  for (int i = 0; i < 100; ++i) EXPECT_EQ(random_policy(1, rng), 0u);
}

TEST(Ucb, RoundRobinFirst) {
  UcbArmStats s{3, 1.0};
  for (std::size_t m = 0; m < 3; ++m) {
    EXPECT_EQ(ucb_policy(s), m);
    ucb_update(s, m, 0.9);
  }
  EXPECT_EQ(s.t, 3u);
}

TEST(Ucb, LeastPulledWinsOnEqualMeans) {
  UcbArmStats s{3, 1.0};
  s.mean = {0.4, 0.4, 0.4};
  s.pulls = {5, 2, 9};
  s.t = 16;
  EXPECT_EQ(ucb_policy(s), 1u);
  s.pulls = {3, 3, 10};
  EXPECT_EQ(ucb_policy(s), 0u);
}

TEST(Ucb, RunningMean) {
  UcbArmStats s{2, 1.0};
  ucb_update(s, 1, 1.0);
  ucb_update(s, 1, 0.0);
  ucb_update(s, 1, 0.5);
  EXPECT_DOUBLE_EQ(s.mean[1], 0.5);
  EXPECT_EQ(s.pulls[1], 3u);
}

TEST(Ucb, DefaultExploration) { EXPECT_DOUBLE_EQ(default_ucb_exploration(2.0), 2.0 * std::sqrt(2.0)); }

// Scaling rewards and the exploration constant together never changes
// an arm choice.
TEST(UcbProperty, ScaleInvariantArgmax) {
  std::mt19937_64 rng{3};
  std::normal_distribution<double> noise{0.0, 0.3};
  for (double gamma : {0.25, 3.0, 17.5}) {
    UcbArmStats a{4, 1.0}, b{4, gamma};
    const std::vector<double> means{0.2, 0.5, 0.45, 0.1};
    for (int t = 0; t < 3000; ++t) {
      const auto ia = ucb_policy(a), ib = ucb_policy(b);
      ASSERT_EQ(ia, ib) << "step " << t;
      const double r = means[ia] + noise(rng);
      ucb_update(a, ia, r);
      ucb_update(b, ib, gamma * r);
    }
  }
}

TEST(UcbAgent, IgnoresMissingReward) {
  UcbAgent agent{2, 1.0};
  std::mt19937_64 rng{4};
  EXPECT_EQ(agent.next_action(rng), Choice::resource(0));
  agent.observe(std::nullopt, rng);
  EXPECT_EQ(agent.stats().t, 0u);
  agent.observe(0.5, rng);
  EXPECT_EQ(agent.stats().pulls[0], 1u);
}

TEST(RandomPopulation, WelfareMatchesEnumeration) {
  const auto g = fixtures::strong_weak(NoiseModel::gaussian(0.1));
  std::mt19937_64 rng{5};
  constexpr int kSteps = 100000;
  double sum = 0.0, sq = 0.0;
  Allocation a(4);
  for (int t = 0; t < kSteps; ++t) {
    for (auto& c : a) c = Choice::resource(random_policy(2, rng));
    const double w = welfare(g, a);
    sum += w;
    sq += w * w;
  }
  const double mean = sum / kSteps;
  const double se = std::sqrt((sq / kSteps - mean * mean) / kSteps);
  EXPECT_NEAR(mean, uniform_random_expected_welfare(g), 3.0 * se);
}
