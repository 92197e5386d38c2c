#pragma once

// Lock-step simulation: every step gathers all agents' actions, scores
// the true welfare of the resulting allocation, then hands each agent
// its own noisy reward and nothing else.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <type_traits>
#include <vector>

#include "congested/baselines.hpp"
#include "congested/ene_agent.hpp"
#include "congested/game.hpp"
#include "congested/metrics.hpp"
#include "congested/oracle.hpp"

namespace congested {

using Rng = std::mt19937_64;

/// What the engine is allowed to hand an agent: an RNG and its own reward.
template <class A>
concept Learner = requires(A a, Rng& rng, std::optional<double> reward) {
  { a.next_action(rng) } -> std::same_as<Choice>;
  a.observe(reward, rng);
};

enum class Policy { Ene, Ucb, Random };

inline std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::Ene: return "ENE";
    case Policy::Ucb: return "dUCB";
    case Policy::Random: return "Random";
  }
  return "?";
}

inline Policy parse_policy(std::string_view s) {
  if (s == "ENE" || s == "ene") return Policy::Ene;
  if (s == "dUCB" || s == "ucb" || s == "UCB") return Policy::Ucb;
  if (s == "Random" || s == "random") return Policy::Random;
  throw ConfigError("unknown policy '" + std::string(s) + "'");
}

enum class Granularity { PerBlock, PerSteps };

struct RunConfig {
  GameInstance game;
  Policy policy{Policy::Ene};
  EneParams ene{};
  std::optional<double> ucb_exploration;   // default u_max * sqrt(2)
  std::optional<std::uint64_t> horizon;    // baselines only; default = ENE horizon
  std::uint32_t num_trials{1};
  std::uint64_t base_seed{0};
  Granularity granularity{Granularity::PerBlock};
  std::uint64_t record_every{1000};
  bool fast_exploit{true};
  bool trace{false};
  std::uint64_t oracle_cap{kDefaultEnumerationCap};

  double exploration_scale() const { return ucb_exploration.value_or(default_ucb_exploration(game.u_max())); }

  std::uint64_t total_steps() const {
    if (policy != Policy::Ene && horizon) return *horizon;
    return ene_horizon(game.num_resources(), ene);
  }

  void validate() const {
    if (num_trials < 1) throw ConfigError("num_trials must be at least 1");
    if (granularity == Granularity::PerSteps && record_every < 1) throw ConfigError("record.every must be positive");
    ene.validate();
  }
};

/// Independent stream `stream` of trial `trial`. Streams 0..N-1 belong
/// to the agents; observation noise uses stream N + 1 + s for the
/// record span starting at step s.
inline Rng make_stream(std::uint64_t base_seed, std::uint64_t trial, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32),
                    static_cast<std::uint32_t>(trial),     static_cast<std::uint32_t>(trial >> 32),
                    static_cast<std::uint32_t>(stream),    static_cast<std::uint32_t>(stream >> 32)};
  return Rng{seq};
}

// Reseeding per span keeps later noise independent of how many draws an
// earlier span consumed, so skipping exploitation steps changes nothing.
inline Rng noise_stream(std::uint64_t base_seed, std::uint64_t trial, std::size_t num_agents,
                        std::uint64_t span_start) {
  return make_stream(base_seed, trial, num_agents + 1 + span_start);
}

struct Span {
  std::uint64_t start{0};
  std::uint64_t length{0};
  Phase phase{Phase::Estimation};
  std::uint32_t epoch{0};
};

/// Record grid of the ENE schedule: one span per estimation and
/// negotiation block, one per exploitation phase.
inline std::vector<Span> ene_grid(std::size_t num_resources, const EneParams& p) {
  std::vector<Span> grid;
  std::uint64_t t = 0;
  for (std::uint32_t j = 1; j <= p.num_epochs; ++j) {
    const auto s = make_schedule(j, num_resources, p);
    for (std::size_t k = 0; k < s.est_num_blocks; ++k, t += s.est_block_len)
      grid.push_back({t, s.est_block_len, Phase::Estimation, j});
    for (std::uint64_t k = 0; k < s.neg_num_blocks; ++k, t += s.neg_block_len)
      grid.push_back({t, s.neg_block_len, Phase::Negotiation, j});
    grid.push_back({t, s.exploit_len, Phase::Exploitation, j});
    t += s.exploit_len;
  }
  return grid;
}

inline std::vector<Span> fixed_grid(std::uint64_t horizon, std::uint64_t every) {
  std::vector<Span> grid;
  for (std::uint64_t t = 0; t < horizon; t += every) grid.push_back({t, std::min(every, horizon - t), Phase::Estimation, 0});
  return grid;
}

/// The grid a config records on. Baselines reuse the ENE block grid so
/// all policies share an x-axis; past the ENE horizon (or with an
/// explicit per-steps granularity) spans are fixed-length.
inline std::vector<Span> record_grid(const RunConfig& cfg) {
  const auto total = cfg.total_steps();
  if (cfg.granularity == Granularity::PerSteps) return fixed_grid(total, cfg.record_every);
  auto grid = ene_grid(cfg.game.num_resources(), cfg.ene);
  std::vector<Span> out;
  for (const auto& s : grid) {
    if (s.start >= total) break;
    out.push_back(s);
    out.back().length = std::min(s.length, total - s.start);
  }
  const std::uint64_t covered = out.empty() ? 0 : out.back().start + out.back().length;
  for (auto& extra : fixed_grid(total - covered, cfg.record_every)) {
    extra.start += covered;
    out.push_back(extra);
  }
  return out;
}

/// Adds `length` steps of a constant allocation's welfare without
/// stepping. Equal to the step loop bit for bit because regret is on true
/// welfare and exploiting agents consume no rewards.
inline void exploit_fast_path(WelfareAccumulator& acc, const GameInstance& g, const Allocation& a,
                              std::uint64_t length) {
  acc.add_repeated(welfare(g, a), length);
}

struct TrialSummary {
  std::uint32_t trial{0};
  std::uint64_t steps{0};
  double cum_regret{0.0};
  double mean_welfare{0.0};
  double efficiency{0.0};
  std::vector<std::size_t> n_hat;          // ENE only
  Allocation final_allocation;
  std::size_t undefined_estimates{0};      // ENE only
  std::size_t c_below_n_hat{0};            // ENE only
};

struct TrialResult {
  MetricsSeries series;
  TrialSummary summary;
  std::vector<std::vector<TraceRecord>> traces;
};

namespace detail {

template <Learner Agent>
struct Population {
  std::vector<Agent> agents;
  std::vector<Rng> rngs;
  Rng noise_rng;
  Allocation allocation;

  double step(const GameInstance& g) {
    for (std::size_t n = 0; n < agents.size(); ++n) allocation[n] = agents[n].next_action(rngs[n]);
    const double w = welfare(g, allocation);
    const auto rewards = sample_rewards(g, allocation, noise_rng);
    for (std::size_t n = 0; n < agents.size(); ++n) agents[n].observe(rewards[n], rngs[n]);
    return w;
  }
};

template <Learner Agent>
Population<Agent> make_population(const RunConfig& cfg, std::uint32_t trial, auto make_agent) {
  const auto N = cfg.game.num_agents();
  Population<Agent> pop{{}, {}, noise_stream(cfg.base_seed, trial, N, 0), Allocation(N)};
  for (std::size_t n = 0; n < N; ++n) {
    pop.agents.push_back(make_agent());
    pop.rngs.push_back(make_stream(cfg.base_seed, trial, n));
  }
  return pop;
}

template <Learner Agent>
TrialResult run_population(const RunConfig& cfg, std::uint32_t trial, const WelfareSummary& summary,
                           Population<Agent>& pop) {
  constexpr bool is_ene = std::is_same_v<Agent, EneAgent>;
  const auto& g = cfg.game;
  TrialResult result;
  WelfareAccumulator acc;
  for (const auto& span : record_grid(cfg)) {
    pop.noise_rng = noise_stream(cfg.base_seed, trial, g.num_agents(), span.start);
    const auto before = acc.raw();
    bool fast = false;
    if constexpr (is_ene) {
      fast = cfg.fast_exploit && span.phase == Phase::Exploitation &&
             pop.agents.front().phase() == Phase::Exploitation && !pop.agents.front().finished();
      if (fast) {
        for (std::size_t n = 0; n < pop.agents.size(); ++n)
          pop.allocation[n] = Choice::resource(pop.agents[n].exploitation_resource());
        exploit_fast_path(acc, g, pop.allocation, span.length);
        for (auto& a : pop.agents) a.skip_exploitation();
      }
    }
    if (!fast) {
      for (std::uint64_t t = 0; t < span.length; ++t) acc.add(pop.step(g));
    }
    MetricsRecord r;
    r.step_start = span.start;
    r.span = span.length;
    r.phase = is_ene ? std::string(to_string(span.phase)) : std::string("baseline");
    r.epoch = span.epoch;
    r.mean_welfare = WelfareAccumulator::to_double(acc.raw() - before) / static_cast<double>(span.length);
    r.cum_regret = acc.regret(summary.w_star);
    r.cum_welfare = acc.sum();
    result.series.push_back(std::move(r));
  }

  auto& s = result.summary;
  s.trial = trial;
  s.steps = acc.steps();
  s.cum_regret = acc.regret(summary.w_star);
  s.mean_welfare = s.steps == 0 ? 0.0 : acc.sum() / static_cast<double>(s.steps);
  s.efficiency = efficiency(s.mean_welfare, summary);
  s.final_allocation = pop.allocation;
  if constexpr (is_ene) {
    for (auto& a : pop.agents) {
      s.n_hat.push_back(a.belief().n_hat);
      s.undefined_estimates += a.undefined_estimates();
      s.c_below_n_hat += a.c_below_n_hat();
      if (cfg.trace) result.traces.push_back(a.trace());
    }
    for (std::size_t n = 0; n < pop.agents.size(); ++n)
      s.final_allocation[n] = Choice::resource(pop.agents[n].exploitation_resource());
  }
  return result;
}

}  // namespace detail

/// One full trial. Deterministic in (base_seed, trial).
inline TrialResult run_trial(const RunConfig& cfg, std::uint32_t trial, const WelfareSummary& summary) {
  cfg.validate();
  const auto& g = cfg.game;
  switch (cfg.policy) {
    case Policy::Ene: {
      auto pop = detail::make_population<EneAgent>(cfg, trial, [&] {
        EneAgent a{g.num_resources(), cfg.ene, g.u_max()};
        if (cfg.trace) a.enable_trace();
        return a;
      });
      return detail::run_population(cfg, trial, summary, pop);
    }
    case Policy::Ucb: {
      auto pop = detail::make_population<UcbAgent>(
          cfg, trial, [&] { return UcbAgent{g.num_resources(), cfg.exploration_scale()}; });
      return detail::run_population(cfg, trial, summary, pop);
    }
    case Policy::Random: {
      auto pop = detail::make_population<RandomAgent>(cfg, trial, [&] { return RandomAgent{g.num_resources()}; });
      return detail::run_population(cfg, trial, summary, pop);
    }
  }
  throw ConfigError("unknown policy");
}

inline TrialResult run_trial(const RunConfig& cfg, std::uint32_t trial) {
  return run_trial(cfg, trial, brute_force_summary(cfg.game, cfg.oracle_cap));
}

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs `count` independent jobs on up to `threads` workers; results are
/// stored by index so the outcome does not depend on scheduling.
template <class Job>
auto parallel_map(std::size_t count, unsigned threads, Job job) {
  using R = decltype(job(std::size_t{0}));
  std::vector<std::optional<R>> slots(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      if (failed) return;
      try {
        slots[i] = job(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const auto n = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(count, 1));
    for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<R> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

inline std::vector<TrialResult> run_trials(const RunConfig& cfg, const WelfareSummary& summary, unsigned threads = 1) {
  return parallel_map(cfg.num_trials, threads,
                      [&](std::size_t i) { return run_trial(cfg, static_cast<std::uint32_t>(i), summary); });
}

enum class GeneratorKind { Fixed, RandomOffset };

inline GeneratorKind parse_generator(std::string_view s) {
  if (s == "fixed") return GeneratorKind::Fixed;
  if (s == "random_offset") return GeneratorKind::RandomOffset;
  throw ConfigError("unknown generator '" + std::string(s) + "'");
}

inline std::string_view to_string(GeneratorKind k) { return k == GeneratorKind::Fixed ? "fixed" : "random_offset"; }

/// Two-resource channel games: `fixed` is the strong/weak channel
/// matrix (1.0 / 0.24 for every agent); `random_offset` starts from rows
/// 1.0 / 0.2 and subtracts i.i.d. Uniform[0, 0.2] per entry.
template <std::uniform_random_bit_generator G>
GameInstance generate_instance(GeneratorKind kind, G& rng, NoiseModel noise, std::size_t num_agents = 4,
                               std::uint64_t seed = 0) {
  std::vector<double> u(num_agents * 2);
  std::uniform_real_distribution<double> offset{0.0, 0.2};
  for (std::size_t n = 0; n < num_agents; ++n) {
    if (kind == GeneratorKind::Fixed) {
      u[n * 2] = 1.0;
      u[n * 2 + 1] = 0.24;
    } else {
      u[n * 2] = 1.0 - offset(rng);
      u[n * 2 + 1] = std::max(0.0, 0.2 - offset(rng));
    }
  }
  return GameInstance(num_agents, 2, std::move(u), 1.0, noise, seed);
}

/// Negotiation phase alone, with utility tables injected instead of
/// estimated. Records the joint chain state after every block.
struct NegotiationBlock {
  Allocation allocation;
  std::vector<Mood> moods;
  std::vector<std::size_t> est_loads;
  std::vector<double> est_utilities;
};

inline std::vector<NegotiationBlock> run_negotiation(const GameInstance& g, const std::vector<UtilityEstimate>& tables,
                                                     const EneParams& params, std::uint64_t num_blocks,
                                                     std::uint64_t block_len, std::uint64_t seed) {
  const auto N = g.num_agents();
  std::vector<Negotiator> agents;
  std::vector<Rng> rngs;
  for (std::size_t n = 0; n < N; ++n) {
    agents.emplace_back(g.num_resources(), params, g.u_max());
    agents.back().begin(tables.at(n));
    rngs.push_back(make_stream(seed, 0, n));
  }
  Rng noise_rng = make_stream(seed, 0, N);
  std::vector<NegotiationBlock> out;
  out.reserve(num_blocks);
  Allocation a(N);
  std::vector<double> sums(N);
  for (std::uint64_t k = 0; k < num_blocks; ++k) {
    for (std::size_t n = 0; n < N; ++n) a[n] = Choice::resource(agents[n].start_block(rngs[n]));
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::uint64_t t = 0; t < block_len; ++t) {
      const auto r = sample_rewards(g, a, noise_rng);
      for (std::size_t n = 0; n < N; ++n) sums[n] += *r[n];
    }
    NegotiationBlock rec{a, {}, {}, {}};
    for (std::size_t n = 0; n < N; ++n) {
      agents[n].finish_block(sums[n] / static_cast<double>(block_len), rngs[n]);
      rec.moods.push_back(agents[n].state().mood);
      rec.est_loads.push_back(agents[n].state().est_load);
      rec.est_utilities.push_back(agents[n].state().est_utility);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

/// True when the block sits in the chain state (m*, U*, all Content).
inline bool is_optimal_content_state(const NegotiationBlock& b, const EstimatedOptimum& target) {
  if (b.allocation != target.allocation) return false;
  for (std::size_t n = 0; n < b.moods.size(); ++n) {
    if (b.moods[n] != Mood::Content) return false;
    if (std::abs(b.est_utilities[n] - target.utilities[n]) > 1e-12) return false;
  }
  return true;
}

}  // namespace congested
