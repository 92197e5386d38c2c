#pragma once

// Per-agent Estimate / Negotiate / Exploit learner.
//
// Time is split into epochs j = 1..J. Each epoch runs
//   estimation:   M+1 blocks of scale_est*j steps. Block k < M pins the
//                 agent to resource k; the last block visits resource 0
//                 with probability 1/2 per step and idles otherwise.
//   negotiation:  ceil(scale_neg_blocks * j^(1+delta/3)) blocks of
//                 ceil(scale_neg_len * j^(1+delta/3)) steps, driven by a
//                 Content/Discontent mood chain.
//   exploitation: scale_exploit * 2^j steps on the resource visited most
//                 often in the tail of the negotiation phase.
//
// The agent only ever sees its own reward samples.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "congested/errors.hpp"
#include "congested/game.hpp"
#include "congested/oracle.hpp"

namespace congested {

struct EneParams {
  double epsilon{0.01};
  double alpha{1.0};
  double delta{0.0};
  double c{1.0};
  std::uint32_t num_epochs{6};
  std::uint64_t scale_est{1};
  std::uint64_t scale_neg_blocks{1};
  std::uint64_t scale_neg_len{1};
  std::uint64_t scale_exploit{1};
  std::size_t n_cap{64};

  void validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("ene.epsilon must lie in (0, 1)");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("ene.alpha must lie in (0, 1]");
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("ene.delta must be non-negative");
    if (!(c >= 1.0) || !std::isfinite(c)) throw ConfigError("ene.c must be at least 1");
    if (num_epochs < 1) throw ConfigError("ene.num_epochs must be positive");
    if (scale_est < 1 || scale_neg_blocks < 1 || scale_neg_len < 1 || scale_exploit < 1)
      throw ConfigError("ene scales must be at least 1");
    if (n_cap < 1) throw ConfigError("ene.n_cap must be positive");
  }
};

struct EpochSchedule {
  std::uint32_t epoch{1};
  std::uint64_t est_block_len{1};
  std::size_t est_num_blocks{2};
  std::uint64_t neg_num_blocks{1};
  std::uint64_t neg_block_len{1};
  std::uint64_t exploit_len{2};

  std::uint64_t estimation_steps() const { return est_block_len * est_num_blocks; }
  std::uint64_t negotiation_steps() const { return neg_num_blocks * neg_block_len; }
  std::uint64_t total_steps() const { return estimation_steps() + negotiation_steps() + exploit_len; }
};

inline EpochSchedule make_schedule(std::uint32_t epoch, std::size_t num_resources, const EneParams& p) {
  const double growth = std::pow(static_cast<double>(epoch), 1.0 + p.delta / 3.0);
  EpochSchedule s;
  s.epoch = epoch;
  s.est_block_len = p.scale_est * epoch;
  s.est_num_blocks = num_resources + 1;
  s.neg_num_blocks = static_cast<std::uint64_t>(std::ceil(static_cast<double>(p.scale_neg_blocks) * growth));
  s.neg_block_len = static_cast<std::uint64_t>(std::ceil(static_cast<double>(p.scale_neg_len) * growth));
  s.exploit_len = p.scale_exploit << epoch;
  return s;
}

/// Steps needed to run all J epochs.
inline std::uint64_t ene_horizon(std::size_t num_resources, const EneParams& p) {
  std::uint64_t total = 0;
  for (std::uint32_t j = 1; j <= p.num_epochs; ++j) total += make_schedule(j, num_resources, p).total_steps();
  return total;
}

enum class Phase { Estimation, Negotiation, Exploitation };
enum class Mood { Content, Discontent };

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Estimation: return "estimation";
    case Phase::Negotiation: return "negotiation";
    case Phase::Exploitation: return "exploitation";
  }
  return "?";
}

inline std::string_view to_string(Mood m) { return m == Mood::Content ? "C" : "D"; }

/// Reward accumulators, cumulative over all epochs' estimation phases.
struct AgentBelief {
  std::vector<double> sum_rewards_per_resource;
  std::vector<std::uint64_t> count_per_resource;
  double sum_rewards_active{0.0};
  std::uint64_t count_active{0};
  std::size_t n_hat{1};
  std::vector<double> u_hat_base;  // estimate of U_{n,m,n_hat}

  explicit AgentBelief(std::size_t num_resources = 0)
      : sum_rewards_per_resource(num_resources, 0.0),
        count_per_resource(num_resources, 0),
        u_hat_base(num_resources, 0.0) {}

  UtilityEstimate utility_estimate() const { return UtilityEstimate{n_hat, u_hat_base}; }
};

template <std::uniform_random_bit_generator G>
Choice estimation_action(std::size_t block, std::size_t num_resources, G& rng) {
  if (block < num_resources) return Choice::resource(block);
  return std::bernoulli_distribution{0.5}(rng) ? Choice::resource(0) : Choice::idle();
}

/// log2-inversion of the active-block mean against the resource-0 mean.
/// With exact expectations mean_first = U/N and
/// mean_active = 2 (1 - 2^-N) U/N, which inverts to exactly N.
inline double raw_num_agents_estimate(double mean_first, double mean_active) {
  if (!(mean_first > 0.0)) throw EstimateUndefined("mean reward on the first resource is not positive");
  const double arg = 1.0 - mean_active / (2.0 * mean_first);
  if (!(arg > 0.0)) throw EstimateUndefined("log argument of the agent-count estimator is not positive");
  return std::log(arg) / std::log(0.5);
}

inline std::size_t round_num_agents(double raw, std::size_t n_cap) {
  const double r = std::round(raw);
  if (!(r >= 1.0)) return 1;
  if (r >= static_cast<double>(n_cap)) return n_cap;
  return static_cast<std::size_t>(r);
}

/// Refreshes n_hat and the per-resource utility table from the
/// accumulators. Returns false if the agent-count estimate is undefined,
/// in which case the previous n_hat is kept.
inline bool finish_estimation(AgentBelief& b, std::size_t n_cap) {
  const std::size_t M = b.count_per_resource.size();
  bool defined = true;
  if (b.count_active == 0 || b.count_per_resource.empty() || b.count_per_resource[0] == 0) {
    defined = false;
  } else {
    const double mean_first = b.sum_rewards_per_resource[0] / static_cast<double>(b.count_per_resource[0]);
    const double mean_active = b.sum_rewards_active / static_cast<double>(b.count_active);
    try {
      b.n_hat = round_num_agents(raw_num_agents_estimate(mean_first, mean_active), n_cap);
    } catch (const EstimateUndefined&) {
      defined = false;
    }
  }
  for (std::size_t m = 0; m < M; ++m) {
    b.u_hat_base[m] = b.count_per_resource[m] == 0
                          ? 0.0
                          : b.sum_rewards_per_resource[m] / static_cast<double>(b.count_per_resource[m]);
  }
  return defined;
}

struct NegotiationState {
  Mood mood{Mood::Discontent};
  std::size_t resource{0};
  std::size_t est_load{1};
  double est_utility{0.0};
};

template <std::uniform_random_bit_generator G>
std::size_t negotiation_choose_resource(const NegotiationState& s, std::size_t num_resources, double epsilon,
                                        double c, G& rng) {
  if (num_resources == 1) return 0;
  if (s.mood == Mood::Discontent) return std::uniform_int_distribution<std::size_t>{0, num_resources - 1}(rng);
  if (!std::bernoulli_distribution{std::pow(epsilon, c)}(rng)) return s.resource;
  auto other = std::uniform_int_distribution<std::size_t>{0, num_resources - 2}(rng);
  return other >= s.resource ? other + 1 : other;
}

struct LoadEstimate {
  std::size_t load{1};
  double utility{0.0};
};

/// Nearest tabulated utility over loads 1..n_hat; ties go to the smaller load.
inline LoadEstimate negotiation_estimate(double block_mean, std::size_t m, const UtilityEstimate& table) {
  LoadEstimate best{1, table.at(m, 1)};
  double best_gap = std::abs(block_mean - best.utility);
  for (std::size_t l = 2; l <= table.n_hat; ++l) {
    const double u = table.at(m, l);
    const double gap = std::abs(block_mean - u);
    if (gap < best_gap) {
      best_gap = gap;
      best = {l, u};
    }
  }
  return best;
}

/// Probability that a mood redraw lands on Content.
inline double content_probability(double est_utility, double epsilon, double u_max) {
  const double u = std::clamp(est_utility, 0.0, u_max);
  return std::pow(epsilon, u_max - u);
}

/// Content agents whose (resource, load estimate) key is unchanged stay
/// Content; everyone else redraws.
template <std::uniform_random_bit_generator G>
Mood negotiation_update_mood(const NegotiationState& previous, std::size_t new_resource, std::size_t new_load,
                             double new_utility, double epsilon, double u_max, G& rng) {
  if (previous.mood == Mood::Content && previous.resource == new_resource && previous.est_load == new_load)
    return Mood::Content;
  return std::bernoulli_distribution{content_probability(new_utility, epsilon, u_max)}(rng) ? Mood::Content
                                                                                            : Mood::Discontent;
}

/// Most visited resource over the last alpha fraction of blocks.
inline std::size_t exploitation_choice(std::span<const std::size_t> history, double alpha,
                                       std::size_t num_resources) {
  if (history.empty()) return 0;
  const double skip = (1.0 - alpha) * static_cast<double>(history.size());
  auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(skip - 1e-9)));
  first = std::min(first, history.size() - 1);
  std::vector<std::size_t> counts(num_resources, 0);
  for (std::size_t k = first; k < history.size(); ++k) ++counts.at(history[k]);
  return static_cast<std::size_t>(std::distance(counts.begin(), std::max_element(counts.begin(), counts.end())));
}

/// One agent's negotiation phase, usable on its own with injected beliefs.
class Negotiator {
 public:
  Negotiator(std::size_t num_resources, const EneParams& params, double u_max)
      : num_resources_{num_resources}, params_{params}, u_max_{u_max} {}

  void begin(UtilityEstimate table) {
    table_ = std::move(table);
    state_ = NegotiationState{};
    history_.clear();
  }

  template <std::uniform_random_bit_generator G>
  std::size_t start_block(G& rng) {
    pending_resource_ = negotiation_choose_resource(state_, num_resources_, params_.epsilon, params_.c, rng);
    history_.push_back(pending_resource_);
    return pending_resource_;
  }

  template <std::uniform_random_bit_generator G>
  void finish_block(double block_mean, G& rng) {
    const auto est = negotiation_estimate(block_mean, pending_resource_, table_);
    const Mood mood =
        negotiation_update_mood(state_, pending_resource_, est.load, est.utility, params_.epsilon, u_max_, rng);
    state_ = NegotiationState{mood, pending_resource_, est.load, est.utility};
  }

  std::size_t exploitation_resource() const {
    return exploitation_choice(history_, params_.alpha, num_resources_);
  }

  const NegotiationState& state() const { return state_; }
  const std::vector<std::size_t>& history() const { return history_; }
  const UtilityEstimate& table() const { return table_; }

 private:
  std::size_t num_resources_;
  EneParams params_;
  double u_max_;
  UtilityEstimate table_{};
  NegotiationState state_{};
  std::vector<std::size_t> history_;
  std::size_t pending_resource_{0};
};

struct TraceRecord {
  std::uint32_t epoch{0};
  Phase phase{Phase::Estimation};
  std::uint64_t block{0};
  Choice resource{};
  std::optional<Mood> mood;
  std::size_t est_load{0};
  double est_utility{0.0};
};

class EneAgent {
 public:
  EneAgent(std::size_t num_resources, EneParams params, double u_max)
      : num_resources_{num_resources},
        params_{params},
        u_max_{u_max},
        belief_{num_resources},
        negotiator_{num_resources, params, u_max},
        schedule_{make_schedule(1, num_resources, params)} {
    params_.validate();
  }

  void enable_trace() { tracing_ = true; }
  const std::vector<TraceRecord>& trace() const { return trace_; }

  template <std::uniform_random_bit_generator G>
  Choice next_action(G& rng) {
    switch (phase_) {
      case Phase::Estimation:
        pending_ = estimation_action(block_, num_resources_, rng);
        break;
      case Phase::Negotiation:
        if (step_ == 0) {
          block_sum_ = 0.0;
          pending_ = Choice::resource(negotiator_.start_block(rng));
        }
        break;
      case Phase::Exploitation:
        pending_ = Choice::resource(exploit_resource_);
        break;
    }
    return pending_;
  }

  template <std::uniform_random_bit_generator G>
  void observe(std::optional<double> reward, G& rng) {
    if (finished_) return;
    switch (phase_) {
      case Phase::Estimation:
        if (block_ < num_resources_) {
          belief_.sum_rewards_per_resource[block_] += reward.value_or(0.0);
          ++belief_.count_per_resource[block_];
        } else if (reward) {
          belief_.sum_rewards_active += *reward;
          ++belief_.count_active;
        }
        if (++step_ == schedule_.est_block_len) end_estimation_block();
        break;
      case Phase::Negotiation:
        block_sum_ += reward.value_or(0.0);
        if (++step_ == schedule_.neg_block_len) end_negotiation_block(rng);
        break;
      case Phase::Exploitation:
        if (++step_ == schedule_.exploit_len) end_epoch();
        break;
    }
  }

  /// Jumps over whatever remains of the current exploitation phase. The
  /// agent ignores rewards there, so this is equivalent to stepping.
  void skip_exploitation() {
    if (finished_ || phase_ != Phase::Exploitation) return;
    end_epoch();
  }

  bool finished() const { return finished_; }
  Phase phase() const { return phase_; }
  std::uint32_t epoch() const { return epoch_; }
  std::size_t exploitation_resource() const { return exploit_resource_; }
  const AgentBelief& belief() const { return belief_; }
  const Negotiator& negotiator() const { return negotiator_; }
  std::size_t undefined_estimates() const { return undefined_estimates_; }
  std::size_t c_below_n_hat() const { return c_below_n_hat_; }

 private:
  void end_estimation_block() {
    if (tracing_) {
      const auto visited = block_ < num_resources_ ? block_ : 0;
      trace_.push_back({epoch_, Phase::Estimation, block_, Choice::resource(visited), std::nullopt, 0, 0.0});
    }
    step_ = 0;
    if (++block_ < schedule_.est_num_blocks) return;
    if (!finish_estimation(belief_, params_.n_cap)) ++undefined_estimates_;
    if (params_.c < static_cast<double>(belief_.n_hat)) ++c_below_n_hat_;
    negotiator_.begin(belief_.utility_estimate());
    phase_ = Phase::Negotiation;
    block_ = 0;
  }

  template <std::uniform_random_bit_generator G>
  void end_negotiation_block(G& rng) {
    negotiator_.finish_block(block_sum_ / static_cast<double>(schedule_.neg_block_len), rng);
    if (tracing_) {
      const auto& s = negotiator_.state();
      trace_.push_back({epoch_, Phase::Negotiation, block_, pending_, s.mood, s.est_load, s.est_utility});
    }
    step_ = 0;
    if (++block_ < schedule_.neg_num_blocks) return;
    exploit_resource_ = negotiator_.exploitation_resource();
    phase_ = Phase::Exploitation;
    block_ = 0;
  }

  void end_epoch() {
    if (tracing_)
      trace_.push_back({epoch_, Phase::Exploitation, 0, Choice::resource(exploit_resource_), std::nullopt, 0, 0.0});
    step_ = 0;
    block_ = 0;
    if (epoch_ == params_.num_epochs) {
      // Past the last epoch the agent keeps exploiting.
      finished_ = true;
      return;
    }
    ++epoch_;
    schedule_ = make_schedule(epoch_, num_resources_, params_);
    phase_ = Phase::Estimation;
  }

  std::size_t num_resources_;
  EneParams params_;
  double u_max_;
  AgentBelief belief_;
  Negotiator negotiator_;
  EpochSchedule schedule_;

  std::uint32_t epoch_{1};
  Phase phase_{Phase::Estimation};
  std::uint64_t block_{0};
  std::uint64_t step_{0};
  Choice pending_{};
  double block_sum_{0.0};
  std::size_t exploit_resource_{0};
  bool finished_{false};

  std::size_t undefined_estimates_{0};
  std::size_t c_below_n_hat_{0};
  bool tracing_{false};
  std::vector<TraceRecord> trace_;
};

}  // namespace congested
