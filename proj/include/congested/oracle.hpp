#pragma once

// Centralized, exact welfare landscape of a game. Used for metrics and
// tests only; agents never see any of this.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "json.hpp"

#include "congested/game.hpp"

namespace congested {

inline constexpr double kWelfareTieTolerance = 1e-12;
inline constexpr std::uint64_t kDefaultEnumerationCap = 10'000'000;

struct WelfareSummary {
  double w_star{0.0};
  double w_second{0.0};
  double w_worst{0.0};
  double rho{0.0};
  Allocation optimal_allocation;
  std::uint64_t num_optima{0};
};

namespace detail {

inline std::uint64_t checked_allocation_count(std::size_t num_agents, std::size_t num_resources,
                                              std::uint64_t cap) {
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < num_agents; ++i) {
    if (total > cap / num_resources) {
      throw InstanceTooLarge("M^N exceeds the enumeration cap of " + std::to_string(cap));
    }
    total *= num_resources;
  }
  if (total > cap) throw InstanceTooLarge("M^N exceeds the enumeration cap of " + std::to_string(cap));
  return total;
}

/// Visits every allocation in lexicographic order (agent 0 most
/// significant). `visit(resources, counts)` sees per-agent resource
/// indices and per-resource loads.
template <class Visit>
void for_each_allocation(std::size_t num_agents, std::size_t num_resources, Visit&& visit) {
  std::vector<std::size_t> res(num_agents, 0);
  std::vector<std::size_t> counts(num_resources, 0);
  counts[0] = num_agents;
  while (true) {
    visit(static_cast<const std::vector<std::size_t>&>(res), static_cast<const std::vector<std::size_t>&>(counts));
    bool advanced = false;
    for (std::size_t i = num_agents; i > 0 && !advanced;) {
      --i;
      --counts[res[i]];
      if (res[i] + 1 < num_resources) {
        ++res[i];
        advanced = true;
      } else {
        res[i] = 0;
      }
      ++counts[res[i]];
    }
    if (!advanced) return;
  }
}

/// Lexicographic search over all allocations for the maximum of
/// sum_n value(n, m_n, load(m_n)).
template <class Value>
WelfareSummary enumerate_summary(std::size_t num_agents, std::size_t num_resources, std::uint64_t cap,
                                 Value&& value) {
  checked_allocation_count(num_agents, num_resources, cap);
  auto total = [&](const std::vector<std::size_t>& res, const std::vector<std::size_t>& counts) {
    double w = 0.0;
    for (std::size_t n = 0; n < res.size(); ++n) w += value(n, res[n], counts[res[n]]);
    return w;
  };

  double best = -std::numeric_limits<double>::infinity();
  double worst = std::numeric_limits<double>::infinity();
  for_each_allocation(num_agents, num_resources, [&](const auto& res, const auto& counts) {
    const double w = total(res, counts);
    best = std::max(best, w);
    worst = std::min(worst, w);
  });

  WelfareSummary s;
  s.w_star = best;
  s.w_worst = worst;
  s.w_second = -std::numeric_limits<double>::infinity();
  bool have_argmax = false;
  for_each_allocation(num_agents, num_resources, [&](const auto& res, const auto& counts) {
    const double w = total(res, counts);
    const bool optimal = w >= best - kWelfareTieTolerance;
    if (optimal) ++s.num_optima;
    if (optimal && !have_argmax) {
      have_argmax = true;
      s.optimal_allocation = make_allocation(std::span<const std::size_t>{res});
      return;
    }
    // Allocations tied with the argmax count as achieving w_star exactly.
    s.w_second = std::max(s.w_second, optimal ? best : w);
  });
  // W** = max over m != m*; with a single allocation there is nothing else.
  if (!std::isfinite(s.w_second)) s.w_second = s.w_star;
  s.rho = (s.w_star - s.w_second) / (2.0 * static_cast<double>(num_agents));
  return s;
}

}  // namespace detail

/// Exhaustive search over all M^N allocations.
///
/// w_second follows the max-over-m != m* definition: any tie at the top
/// makes w_second == w_star and rho == 0. num_optima reports how many
/// allocations are within kWelfareTieTolerance of w_star so callers can
/// detect such degenerate instances.
inline WelfareSummary brute_force_summary(const GameInstance& g, std::uint64_t cap = kDefaultEnumerationCap) {
  return detail::enumerate_summary(g.num_agents(), g.num_resources(), cap,
                                   [&](std::size_t n, std::size_t m, std::size_t load) {
                                     return g.base_utility(n, m) / static_cast<double>(load);
                                   });
}

/// Mean welfare when every agent picks a resource uniformly at random.
inline double uniform_random_expected_welfare(const GameInstance& g, std::uint64_t cap = kDefaultEnumerationCap) {
  const auto count = detail::checked_allocation_count(g.num_agents(), g.num_resources(), cap);
  double sum = 0.0;
  detail::for_each_allocation(g.num_agents(), g.num_resources(), [&](const auto& res, const auto& counts) {
    for (std::size_t n = 0; n < res.size(); ++n)
      sum += g.base_utility(n, res[n]) / static_cast<double>(counts[res[n]]);
  });
  return sum / static_cast<double>(count);
}

/// One agent's utility model after an estimation phase: it knows an
/// estimate of N and of its own utility at that load, and extrapolates
/// to any other load by U(m, l) = n_hat * u_at_n_hat[m] / l.
struct UtilityEstimate {
  std::size_t n_hat{1};
  std::vector<double> u_at_n_hat;

  double at(std::size_t m, std::size_t load) const {
    return static_cast<double>(n_hat) * u_at_n_hat[m] / static_cast<double>(load);
  }

  static UtilityEstimate exact(const GameInstance& g, std::size_t n) {
    UtilityEstimate e;
    e.n_hat = g.num_agents();
    for (std::size_t m = 0; m < g.num_resources(); ++m)
      e.u_at_n_hat.push_back(g.base_utility(n, m) / static_cast<double>(g.num_agents()));
    return e;
  }
};

struct EstimatedOptimum {
  Allocation allocation;
  std::vector<double> utilities;
};

/// Allocation maximizing the agents' summed estimated utilities, with
/// the same lexicographic tie-break as the true oracle.
inline EstimatedOptimum estimated_optimum(const std::vector<UtilityEstimate>& beliefs,
                                          std::uint64_t cap = kDefaultEnumerationCap) {
  if (beliefs.empty()) throw InvalidGame("no beliefs");
  const std::size_t M = beliefs.front().u_at_n_hat.size();
  for (const auto& b : beliefs) {
    if (b.u_at_n_hat.size() != M) throw InvalidGame("beliefs disagree on the number of resources");
  }
  auto s = detail::enumerate_summary(beliefs.size(), M, cap, [&](std::size_t n, std::size_t m, std::size_t load) {
    return beliefs[n].at(m, load);
  });
  EstimatedOptimum out;
  out.allocation = s.optimal_allocation;
  const auto counts = resource_loads(out.allocation, M);
  for (std::size_t n = 0; n < beliefs.size(); ++n) {
    const auto m = out.allocation[n].resource();
    out.utilities.push_back(beliefs[n].at(m, counts[m]));
  }
  return out;
}

/// (mean_welfare - w_worst) / (w_star - w_worst); 1.0 when every
/// allocation has the same welfare.
inline double efficiency(double mean_welfare, const WelfareSummary& s) {
  if (!(s.w_star > s.w_worst)) return 1.0;
  return (mean_welfare - s.w_worst) / (s.w_star - s.w_worst);
}

namespace detail {

// Hungarian method (shortest augmenting path, O(n^3)) on a square
// cost matrix; returns the column assigned to each row.
inline std::vector<std::size_t> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= n; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

template <class Visit>
void for_each_composition(std::size_t total, std::size_t parts, std::vector<std::size_t>& current, Visit&& visit) {
  if (current.size() + 1 == parts) {
    current.push_back(total);
    visit(static_cast<const std::vector<std::size_t>&>(current));
    current.pop_back();
    return;
  }
  for (std::size_t k = 0; k <= total; ++k) {
    current.push_back(k);
    for_each_composition(total - k, parts, current, visit);
    current.pop_back();
  }
}

}  // namespace detail

struct ExactOptimum {
  double w_star{0.0};
  Allocation allocation;
};

/// Exact optimum without enumerating M^N allocations: for every load
/// vector (n_1..n_M) summing to N, agents are matched to resource slots
/// by an assignment solve where a slot on m is worth U_{n,m,1}/n_m.
inline ExactOptimum load_vector_optimum(const GameInstance& g) {
  const std::size_t N = g.num_agents();
  const std::size_t M = g.num_resources();
  ExactOptimum best;
  best.w_star = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> current;
  detail::for_each_composition(N, M, current, [&](const std::vector<std::size_t>& counts) {
    std::vector<std::size_t> slot_resource;
    for (std::size_t m = 0; m < M; ++m) slot_resource.insert(slot_resource.end(), counts[m], m);
    std::vector<std::vector<double>> cost(N, std::vector<double>(N, 0.0));
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t s = 0; s < N; ++s) {
        const auto m = slot_resource[s];
        cost[n][s] = -g.base_utility(n, m) / static_cast<double>(counts[m]);
      }
    }
    const auto assignment = detail::min_cost_assignment(cost);
    Allocation a(N);
    for (std::size_t n = 0; n < N; ++n) a[n] = Choice::resource(slot_resource[assignment[n]]);
    const double w = welfare(g, a);
    if (w > best.w_star) {
      best.w_star = w;
      best.allocation = std::move(a);
    }
  });
  return best;
}

inline nlohmann::json allocation_to_json(const Allocation& a) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : a) {
    if (c.is_idle())
      arr.push_back(nullptr);
    else
      arr.push_back(c.resource() + 1);
  }
  return arr;
}

inline void to_json(nlohmann::json& j, const WelfareSummary& s) {
  j = nlohmann::json{{"w_star", s.w_star},
                     {"w_second", s.w_second},
                     {"w_worst", s.w_worst},
                     {"rho", s.rho},
                     {"num_optima", s.num_optima},
                     {"optimal_allocation", allocation_to_json(s.optimal_allocation)}};
}

}  // namespace congested
