#pragma once

#include <vector>

#include "congested/congested.hpp"

namespace fixtures {

// Four agents, a strong channel (1.0) and a weak one (0.24).
inline congested::GameInstance strong_weak(congested::NoiseModel noise = {}) {
  return congested::GameInstance::from_rows({{1.0, 0.24}, {1.0, 0.24}, {1.0, 0.24}, {1.0, 0.24}}, 1.0, noise);
}

template <class G>
congested::GameInstance random_game(G& rng, std::size_t n, std::size_t m) {
  std::uniform_real_distribution<double> u{0.0, 1.0};
  std::vector<double> flat(n * m);
  for (auto& x : flat) x = u(rng);
  return congested::GameInstance(n, m, flat, 1.0);
}

}  // namespace fixtures
