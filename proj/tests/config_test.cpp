#include <gtest/gtest.h>

#include <cstdlib>

#include "fixtures.hpp"

using namespace congested;

namespace {

nlohmann::json base_doc() {
  return nlohmann::json::parse(R"({
    "game": {"U": [[1.0, 0.24], [1.0, 0.24]], "u_max": 1.0, "noise": {"kind": "gaussian", "b": 0.1}},
    "policy": "ENE",
    "ene": {"num_epochs": 2}
  })");
}

}  // namespace

TEST(Config, Defaults) {
  const auto ec = parse_experiment(base_doc());
  EXPECT_EQ(ec.run.policy, Policy::Ene);
  EXPECT_EQ(ec.run.ene.num_epochs, 2u);
  EXPECT_DOUBLE_EQ(ec.run.ene.c, 2.0);
  EXPECT_DOUBLE_EQ(ec.run.exploration_scale(), std::sqrt(2.0));
  EXPECT_FALSE(ec.sweep.has_value());
}

TEST(Config, RejectsUnknownAndInvalid) {
  auto doc = base_doc();
  doc["colour"] = 3;
  EXPECT_THROW(parse_experiment(doc), ConfigError);
  doc = base_doc();
  doc["ene"]["epsilon"] = 2.0;
  EXPECT_THROW(parse_experiment(doc), ConfigError);
  doc = base_doc();
  doc["game"]["U"] = {{1.5}};
  EXPECT_THROW(parse_experiment(doc), ConfigError);
  doc = base_doc();
  doc["num_trials"] = "many";
  EXPECT_THROW(parse_experiment(doc), ConfigError);
  doc = base_doc();
  doc.erase("game");
  EXPECT_THROW(parse_experiment(doc), ConfigError);
}

TEST(Config, Overrides) {
  auto doc = base_doc();
  apply_overrides(doc, split_overrides("ene.epsilon=0.05,policy=dUCB,record.granularity=steps,ucb.exploration_scale=2"));
  const auto ec = parse_experiment(doc);
  EXPECT_DOUBLE_EQ(ec.run.ene.epsilon, 0.05);
  EXPECT_EQ(ec.run.policy, Policy::Ucb);
  EXPECT_EQ(ec.run.granularity, Granularity::PerSteps);
  EXPECT_DOUBLE_EQ(ec.run.exploration_scale(), 2.0);
  EXPECT_THROW(apply_overrides(doc, {"novalue"}), ConfigError);
  EXPECT_THROW(apply_overrides(doc, {"policy.x=1"}), ConfigError);
}

TEST(Config, EchoReparsesToSameRun) {
  auto doc = base_doc();
  doc["sweep"] = {{"generator", "fixed"}, {"policies", {"Random"}}};
  doc["horizon"] = 999;
  const auto ec = parse_experiment(doc);
  const auto again = parse_experiment(echo_config(ec));
  EXPECT_EQ(echo_config(again), echo_config(ec));
  EXPECT_EQ(again.run.game, ec.run.game);
  ASSERT_TRUE(again.sweep.has_value());
  EXPECT_EQ(again.sweep->generator, GeneratorKind::Fixed);
}

TEST(Config, GeneratorGame) {
  auto doc = base_doc();
  doc["game"] = {{"generator", "fixed"}, {"N", 3}};
  const auto ec = parse_experiment(doc);
  EXPECT_EQ(ec.run.game.num_agents(), 3u);
  EXPECT_DOUBLE_EQ(ec.run.game.base_utility(2, 1), 0.24);
}

TEST(Config, SeedFromEnvironment) {
  ::setenv(kSeedEnvVar, "1234", 1);
  EXPECT_EQ(seed_from_env(), 1234u);
  ::setenv(kSeedEnvVar, "12x", 1);
  EXPECT_THROW(seed_from_env(), ConfigError);
  ::unsetenv(kSeedEnvVar);
  EXPECT_FALSE(seed_from_env().has_value());
}
