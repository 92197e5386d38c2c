#pragma once

// Congestion game with agent-specific, load-divided utilities.
//
// Each of N agents picks one of M resources (or stays idle where the
// protocol allows it). Agents sharing a resource split it equally, so
// agent n on resource m with load l earns U[n][m] / l.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "congested/errors.hpp"

namespace congested {

/// A single agent's action for one time step: a resource index in
/// [0, M) or Idle. Idle is its own value so it can never be counted
/// into a resource's load.
class Choice {
 public:
  constexpr Choice() = default;

  static constexpr Choice idle() { return Choice{}; }
  static constexpr Choice resource(std::size_t m) { return Choice{m}; }

  constexpr bool is_idle() const { return !active_; }
  constexpr bool is_active() const { return active_; }
  constexpr std::size_t resource() const { return index_; }

  friend constexpr bool operator==(const Choice&, const Choice&) = default;

 private:
  constexpr explicit Choice(std::size_t m) : index_{m}, active_{true} {}

  std::size_t index_{0};
  bool active_{false};
};

using Allocation = std::vector<Choice>;

inline Allocation make_allocation(std::span<const std::size_t> resources) {
  Allocation a;
  a.reserve(resources.size());
  for (auto m : resources) a.push_back(Choice::resource(m));
  return a;
}

inline Allocation make_allocation(std::initializer_list<std::size_t> resources) {
  return make_allocation(std::span<const std::size_t>{resources.begin(), resources.size()});
}

enum class NoiseKind { Zero, Gaussian, UniformBounded };

inline std::string_view to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::Zero: return "zero";
    case NoiseKind::Gaussian: return "gaussian";
    case NoiseKind::UniformBounded: return "uniform";
  }
  return "zero";
}

inline NoiseKind parse_noise_kind(std::string_view s) {
  if (s == "zero" || s == "Zero") return NoiseKind::Zero;
  if (s == "gaussian" || s == "Gaussian") return NoiseKind::Gaussian;
  if (s == "uniform" || s == "UniformBounded" || s == "uniform_bounded") return NoiseKind::UniformBounded;
  throw InvalidGame("unknown noise kind '" + std::string(s) + "'");
}

/// Zero-mean sub-Gaussian observation noise with variance proxy b.
///
/// Gaussian draws N(0, b). UniformBounded draws U[-w, w] with w = sqrt(b);
/// a variable bounded in [-w, w] is sub-Gaussian with proxy w^2.
struct NoiseModel {
  NoiseKind kind{NoiseKind::Zero};
  double variance_proxy{0.0};

  static NoiseModel zero() { return {}; }
  static NoiseModel gaussian(double b) { return {NoiseKind::Gaussian, b}; }
  static NoiseModel uniform_bounded(double b) { return {NoiseKind::UniformBounded, b}; }

  template <std::uniform_random_bit_generator G>
  double sample(G& rng) const {
    switch (kind) {
      case NoiseKind::Zero:
        return 0.0;
      case NoiseKind::Gaussian:
        return std::normal_distribution<double>{0.0, std::sqrt(variance_proxy)}(rng);
      case NoiseKind::UniformBounded: {
        const double w = std::sqrt(variance_proxy);
        return std::uniform_real_distribution<double>{-w, w}(rng);
      }
    }
    return 0.0;
  }

  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

/// Ground truth of one game: who values which resource how much.
class GameInstance {
 public:
  GameInstance() = default;

  /// `utilities` is row-major N x M: utilities[n * M + m] = U_{n,m,1}.
  GameInstance(std::size_t num_agents, std::size_t num_resources, std::vector<double> utilities,
               double u_max, NoiseModel noise = {}, std::uint64_t seed = 0)
      : num_agents_{num_agents},
        num_resources_{num_resources},
        utilities_{std::move(utilities)},
        u_max_{u_max},
        noise_{noise},
        seed_{seed} {
    validate();
  }

  static GameInstance from_rows(const std::vector<std::vector<double>>& rows, double u_max,
                                NoiseModel noise = {}, std::uint64_t seed = 0) {
    if (rows.empty()) throw InvalidGame("utility matrix has no rows");
    const std::size_t m = rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * m);
    for (const auto& row : rows) {
      if (row.size() != m) throw InvalidGame("utility matrix rows have different lengths");
      flat.insert(flat.end(), row.begin(), row.end());
    }
    return GameInstance(rows.size(), m, std::move(flat), u_max, noise, seed);
  }

  std::size_t num_agents() const { return num_agents_; }
  std::size_t num_resources() const { return num_resources_; }
  double u_max() const { return u_max_; }
  const NoiseModel& noise() const { return noise_; }
  std::uint64_t seed() const { return seed_; }

  double base_utility(std::size_t n, std::size_t m) const { return utilities_[n * num_resources_ + m]; }
  std::span<const double> row(std::size_t n) const {
    return {utilities_.data() + n * num_resources_, num_resources_};
  }

  /// Same game, different observation noise.
  GameInstance with_noise(NoiseModel noise) const {
    GameInstance g = *this;
    g.noise_ = noise;
    g.validate();
    return g;
  }

  friend bool operator==(const GameInstance&, const GameInstance&) = default;

 private:
  void validate() const {
    if (num_agents_ < 1) throw InvalidGame("N must be at least 1");
    if (num_resources_ < 1) throw InvalidGame("M must be at least 1");
    if (utilities_.size() != num_agents_ * num_resources_)
      throw InvalidGame("utility matrix must be N x M");
    if (!(u_max_ >= 0.0) || !std::isfinite(u_max_)) throw InvalidGame("u_max must be finite and non-negative");
    for (double u : utilities_) {
      if (!std::isfinite(u) || u < 0.0 || u > u_max_)
        throw InvalidGame("base utilities must lie in [0, u_max]");
    }
    if (!(noise_.variance_proxy >= 0.0)) throw InvalidGame("noise variance proxy must be non-negative");
    if (noise_.kind == NoiseKind::Zero && noise_.variance_proxy != 0.0)
      throw InvalidGame("zero noise must have variance proxy 0");
  }

  std::size_t num_agents_{0};
  std::size_t num_resources_{0};
  std::vector<double> utilities_;
  double u_max_{0.0};
  NoiseModel noise_{};
  std::uint64_t seed_{0};
};

/// Per-resource occupancy counts; idle agents are not counted.
inline std::vector<std::size_t> resource_loads(const Allocation& a, std::size_t num_resources) {
  std::vector<std::size_t> counts(num_resources, 0);
  for (const auto& c : a) {
    if (c.is_active()) ++counts.at(c.resource());
  }
  return counts;
}

/// Load seen by each agent: how many agents (itself included) chose the
/// same resource. Idle agents see load 0.
inline std::vector<std::size_t> loads(const Allocation& a, std::size_t num_resources) {
  const auto counts = resource_loads(a, num_resources);
  std::vector<std::size_t> out(a.size(), 0);
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (a[n].is_active()) out[n] = counts[a[n].resource()];
  }
  return out;
}

inline std::vector<std::size_t> loads(const GameInstance& g, const Allocation& a) {
  return loads(a, g.num_resources());
}

namespace detail {
inline void check_allocation(const GameInstance& g, const Allocation& a) {
  if (a.size() != g.num_agents()) throw InvalidGame("allocation length must equal N");
  for (const auto& c : a) {
    if (c.is_active() && c.resource() >= g.num_resources()) throw InvalidGame("resource index out of range");
  }
}
}  // namespace detail

/// U_{n, m_n, 1} / load_n, or 0 for an idle agent.
inline double utility(const GameInstance& g, std::size_t n, const Allocation& a) {
  detail::check_allocation(g, a);
  if (a[n].is_idle()) return 0.0;
  std::size_t load = 0;
  for (const auto& c : a) load += (c == a[n]) ? 1 : 0;
  return g.base_utility(n, a[n].resource()) / static_cast<double>(load);
}

/// Sum of all agents' utilities.
inline double welfare(const GameInstance& g, const Allocation& a) {
  detail::check_allocation(g, a);
  const auto counts = resource_loads(a, g.num_resources());
  double w = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (a[n].is_active())
      w += g.base_utility(n, a[n].resource()) / static_cast<double>(counts[a[n].resource()]);
  }
  return w;
}

/// Noisy reward per agent; idle agents get no sample at all.
template <std::uniform_random_bit_generator G>
std::vector<std::optional<double>> sample_rewards(const GameInstance& g, const Allocation& a, G& rng) {
  detail::check_allocation(g, a);
  const auto counts = resource_loads(a, g.num_resources());
  std::vector<std::optional<double>> out(a.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (a[n].is_idle()) continue;
    const double u = g.base_utility(n, a[n].resource()) / static_cast<double>(counts[a[n].resource()]);
    out[n] = u + g.noise().sample(rng);
  }
  return out;
}

// JSON schema: {"N", "M", "U": [[...N rows of M...]], "u_max",
//               "noise": {"kind", "b"}, "seed"}

inline void to_json(nlohmann::json& j, const NoiseModel& n) {
  j = nlohmann::json{{"kind", std::string(to_string(n.kind))}, {"b", n.variance_proxy}};
}

inline void from_json(const nlohmann::json& j, NoiseModel& n) {
  n.kind = parse_noise_kind(j.at("kind").get<std::string>());
  n.variance_proxy = n.kind == NoiseKind::Zero ? j.value("b", 0.0) : j.at("b").get<double>();
}

inline void to_json(nlohmann::json& j, const GameInstance& g) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t n = 0; n < g.num_agents(); ++n) {
    auto r = g.row(n);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j = nlohmann::json{{"N", g.num_agents()}, {"M", g.num_resources()}, {"U", rows},
                     {"u_max", g.u_max()},  {"noise", g.noise()},     {"seed", g.seed()}};
}

inline void from_json(const nlohmann::json& j, GameInstance& g) {
  const auto rows = j.at("U").get<std::vector<std::vector<double>>>();
  NoiseModel noise = j.contains("noise") ? j.at("noise").get<NoiseModel>() : NoiseModel{};
  auto built = GameInstance::from_rows(rows, j.at("u_max").get<double>(), noise, j.value("seed", std::uint64_t{0}));
  if (j.contains("N") && j.at("N").get<std::size_t>() != built.num_agents())
    throw InvalidGame("N does not match the number of rows in U");
  if (j.contains("M") && j.at("M").get<std::size_t>() != built.num_resources())
    throw InvalidGame("M does not match the row length of U");
  g = std::move(built);
}

}  // namespace congested
