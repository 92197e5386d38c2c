#pragma once

// Comparison policies: per-step uniform random choice and independent
// (selfish) UCB1 per agent. Both obey the same isolation contract as
// EneAgent: they see only their own reward.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "congested/game.hpp"

namespace congested {

template <std::uniform_random_bit_generator G>
std::size_t random_policy(std::size_t num_resources, G& rng) {
  return std::uniform_int_distribution<std::size_t>{0, num_resources - 1}(rng);
}

class RandomAgent {
 public:
  explicit RandomAgent(std::size_t num_resources) : num_resources_{num_resources} {}

  template <std::uniform_random_bit_generator G>
  Choice next_action(G& rng) {
    return Choice::resource(random_policy(num_resources_, rng));
  }

  template <std::uniform_random_bit_generator G>
  void observe(std::optional<double>, G&) {}

 private:
  std::size_t num_resources_;
};

inline double default_ucb_exploration(double u_max) { return u_max * std::numbers::sqrt2; }

struct UcbArmStats {
  std::vector<double> mean;
  std::vector<std::uint64_t> pulls;
  std::uint64_t t{0};
  double exploration_scale{std::numbers::sqrt2};

  UcbArmStats() = default;
  UcbArmStats(std::size_t num_resources, double exploration)
      : mean(num_resources, 0.0), pulls(num_resources, 0), exploration_scale{exploration} {}

  double index(std::size_t m) const {
    return mean[m] + exploration_scale * std::sqrt(std::log(static_cast<double>(t)) / static_cast<double>(pulls[m]));
  }
};

/// UCB1 arm choice: round-robin through unpulled arms, then the largest
/// index with ties to the smaller arm.
inline std::size_t ucb_policy(const UcbArmStats& s) {
  for (std::size_t m = 0; m < s.pulls.size(); ++m) {
    if (s.pulls[m] == 0) return m;
  }
  std::size_t best = 0;
  double best_index = s.index(0);
  for (std::size_t m = 1; m < s.pulls.size(); ++m) {
    const double v = s.index(m);
    if (v > best_index) {
      best_index = v;
      best = m;
    }
  }
  return best;
}

inline void ucb_update(UcbArmStats& s, std::size_t arm, double reward) {
  ++s.pulls[arm];
  ++s.t;
  s.mean[arm] += (reward - s.mean[arm]) / static_cast<double>(s.pulls[arm]);
}

class UcbAgent {
 public:
  UcbAgent(std::size_t num_resources, double exploration_scale) : stats_{num_resources, exploration_scale} {}

  template <std::uniform_random_bit_generator G>
  Choice next_action(G&) {
    last_ = ucb_policy(stats_);
    return Choice::resource(last_);
  }

  template <std::uniform_random_bit_generator G>
  void observe(std::optional<double> reward, G&) {
    if (reward) ucb_update(stats_, last_, *reward);
  }

  const UcbArmStats& stats() const { return stats_; }

 private:
  UcbArmStats stats_;
  std::size_t last_{0};
};

}  // namespace congested
