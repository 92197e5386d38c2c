#pragma once

// JSON experiment configs, dotted-path overrides, and the echo written
// back into run reports.
//
//   {
//     "game": {"N", "M", "U", "u_max", "noise", "seed"}
//           | {"generator": "fixed" | "random_offset", "N", "noise", "seed"},
//     "policy": "ENE" | "dUCB" | "Random",
//     "ene": {"epsilon", "alpha", "delta", "c", "num_epochs", "scale_est",
//             "scale_neg_blocks", "scale_neg_len", "scale_exploit", "n_cap"},
//     "ucb": {"exploration_scale"},
//     "horizon", "num_trials", "base_seed",
//     "record": {"granularity": "block" | "steps", "every"},
//     "fast_exploit", "trace", "oracle_cap",
//     "sweep": {"generator", "policies": [...]}
//   }

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "congested/engine.hpp"
#include "congested/errors.hpp"
#include "congested/game.hpp"

namespace congested {

inline constexpr const char* kSeedEnvVar = "CONGESTED_BANDITS_SEED";

struct SweepSpec {
  GeneratorKind generator{GeneratorKind::RandomOffset};
  std::vector<Policy> policies{Policy::Ene, Policy::Random, Policy::Ucb};
  std::size_t num_agents{4};
  NoiseModel noise{};
};

struct ExperimentConfig {
  RunConfig run;
  std::optional<SweepSpec> sweep;
};

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

/// Applies "a.b.c=value" overrides in place. Values are parsed as JSON
/// when possible (numbers, booleans, arrays) and taken as strings otherwise.
inline void apply_overrides(nlohmann::json& doc, const std::vector<std::string>& overrides) {
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    const std::string raw = item.substr(eq + 1);
    nlohmann::json value;
    try {
      value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error&) {
      value = raw;
    }
    nlohmann::json* node = &doc;
    std::stringstream path(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(path, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      if (!node->is_object()) throw ConfigError("override '" + key + "' descends into a non-object");
      node = &(*node)[parts[i]];
      if (node->is_null()) *node = nlohmann::json::object();
    }
    if (!node->is_object()) throw ConfigError("override '" + key + "' descends into a non-object");
    (*node)[parts.back()] = value;
  }
}

/// Splits "k=v,k=v" into single overrides.
inline std::vector<std::string> split_overrides(std::string_view list) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : list) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

namespace detail {

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

inline EneParams parse_ene(const nlohmann::json& j, std::size_t num_agents) {
  EneParams p;
  p.epsilon = get_or(j, "epsilon", p.epsilon);
  p.alpha = get_or(j, "alpha", p.alpha);
  p.delta = get_or(j, "delta", p.delta);
  p.c = get_or(j, "c", static_cast<double>(num_agents));
  p.num_epochs = get_or(j, "num_epochs", p.num_epochs);
  p.scale_est = get_or(j, "scale_est", p.scale_est);
  p.scale_neg_blocks = get_or(j, "scale_neg_blocks", p.scale_neg_blocks);
  p.scale_neg_len = get_or(j, "scale_neg_len", p.scale_neg_len);
  p.scale_exploit = get_or(j, "scale_exploit", p.scale_exploit);
  p.n_cap = get_or(j, "n_cap", p.n_cap);
  p.validate();
  return p;
}

inline GameInstance parse_game(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("'game' must be an object");
  try {
    if (j.contains("generator")) {
      const auto kind = parse_generator(j.at("generator").get<std::string>());
      const auto noise = j.contains("noise") ? j.at("noise").get<NoiseModel>() : NoiseModel{};
      const auto seed = get_or(j, "seed", std::uint64_t{0});
      auto rng = make_stream(seed, 0, 0);
      return generate_instance(kind, rng, noise, get_or(j, "N", std::size_t{4}), seed);
    }
    return j.get<GameInstance>();
  } catch (const InvalidGame& e) {
    throw ConfigError(std::string("invalid game: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid game: ") + e.what());
  }
}

}  // namespace detail

inline std::optional<std::uint64_t> seed_from_env() {
  const char* v = std::getenv(kSeedEnvVar);
  if (v == nullptr || *v == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const auto seed = std::stoull(v, &used, 0);
    if (used != std::string_view(v).size()) throw ConfigError("");
    return seed;
  } catch (...) {
    throw ConfigError(std::string(kSeedEnvVar) + " is not an unsigned integer");
  }
}

inline ExperimentConfig parse_experiment(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known = {"game",       "policy", "ene",          "ucb",   "horizon",
                                                 "num_trials", "base_seed", "record",    "fast_exploit",
                                                 "trace",      "oracle_cap", "sweep"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown config field '" + key + "'");
  }
  if (!doc.contains("game")) throw ConfigError("config has no 'game'");

  ExperimentConfig ec;
  auto& rc = ec.run;
  rc.game = detail::parse_game(doc.at("game"));
  try {
    rc.policy = parse_policy(detail::get_or<std::string>(doc, "policy", "ENE"));
    rc.ene = detail::parse_ene(doc.value("ene", nlohmann::json::object()), rc.game.num_agents());
    if (doc.contains("ucb") && doc.at("ucb").contains("exploration_scale"))
      rc.ucb_exploration = doc.at("ucb").at("exploration_scale").get<double>();
    if (doc.contains("horizon") && !doc.at("horizon").is_null()) rc.horizon = doc.at("horizon").get<std::uint64_t>();
    rc.num_trials = detail::get_or(doc, "num_trials", rc.num_trials);
    rc.base_seed = detail::get_or(doc, "base_seed", rc.base_seed);
    if (doc.contains("record")) {
      const auto& r = doc.at("record");
      const auto g = detail::get_or<std::string>(r, "granularity", "block");
      if (g == "block")
        rc.granularity = Granularity::PerBlock;
      else if (g == "steps")
        rc.granularity = Granularity::PerSteps;
      else
        throw ConfigError("record.granularity must be 'block' or 'steps'");
      rc.record_every = detail::get_or(r, "every", rc.record_every);
    }
    rc.fast_exploit = detail::get_or(doc, "fast_exploit", rc.fast_exploit);
    rc.trace = detail::get_or(doc, "trace", rc.trace);
    rc.oracle_cap = detail::get_or(doc, "oracle_cap", rc.oracle_cap);
    if (doc.contains("sweep")) {
      const auto& s = doc.at("sweep");
      SweepSpec spec;
      spec.generator = parse_generator(detail::get_or<std::string>(s, "generator", "random_offset"));
      if (s.contains("policies")) {
        spec.policies.clear();
        for (const auto& p : s.at("policies")) spec.policies.push_back(parse_policy(p.get<std::string>()));
      }
      spec.num_agents = rc.game.num_agents();
      spec.noise = rc.game.noise();
      ec.sweep = spec;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  rc.validate();
  return ec;
}

/// Loads a config file, applies overrides and then the seed env var.
inline ExperimentConfig load_experiment(const std::string& path, const std::vector<std::string>& overrides = {}) {
  auto doc = read_json_file(path);
  apply_overrides(doc, overrides);
  auto ec = parse_experiment(doc);
  if (auto seed = seed_from_env()) ec.run.base_seed = *seed;
  return ec;
}

/// Fully resolved config; feeding it back to parse_experiment reproduces
/// the same run.
inline nlohmann::json echo_config(const ExperimentConfig& ec) {
  const auto& rc = ec.run;
  const auto& p = rc.ene;
  nlohmann::json j;
  j["game"] = rc.game;
  j["policy"] = std::string(to_string(rc.policy));
  j["ene"] = {{"epsilon", p.epsilon},         {"alpha", p.alpha},
              {"delta", p.delta},             {"c", p.c},
              {"num_epochs", p.num_epochs},   {"scale_est", p.scale_est},
              {"scale_neg_blocks", p.scale_neg_blocks}, {"scale_neg_len", p.scale_neg_len},
              {"scale_exploit", p.scale_exploit},       {"n_cap", p.n_cap}};
  j["ucb"] = {{"exploration_scale", rc.exploration_scale()}};
  if (rc.horizon) j["horizon"] = *rc.horizon;
  j["num_trials"] = rc.num_trials;
  j["base_seed"] = rc.base_seed;
  j["record"] = {{"granularity", rc.granularity == Granularity::PerBlock ? "block" : "steps"},
                 {"every", rc.record_every}};
  j["fast_exploit"] = rc.fast_exploit;
  j["trace"] = rc.trace;
  j["oracle_cap"] = rc.oracle_cap;
  if (ec.sweep) {
    nlohmann::json pols = nlohmann::json::array();
    for (auto pol : ec.sweep->policies) pols.push_back(std::string(to_string(pol)));
    j["sweep"] = {{"generator", std::string(to_string(ec.sweep->generator))}, {"policies", pols}};
  }
  return j;
}

}  // namespace congested
