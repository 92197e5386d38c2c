#pragma once

// Subcommands behind the `congested_bandits` executable. They return
// process exit codes: 0 success, 1 config/usage error, 2 instance too
// large for the oracle.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "congested/config.hpp"
#include "congested/engine.hpp"
#include "congested/metrics.hpp"
#include "congested/oracle.hpp"

namespace congested::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitTooLarge = 2;

struct Options {
  std::string config_path;
  std::string output_dir{"."};
  std::vector<std::string> overrides;
  unsigned threads{1};  // 0 = auto
};

/// Writes via a sibling temp file and rename so readers never see a
/// partially written file.
inline void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw ConfigError("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw ConfigError("output directory '" + dir.string() + "' is not usable");
}

inline std::string trace_csv(const std::vector<TraceRecord>& trace) {
  std::string out = "epoch,phase,block,resource,mood,est_load,est_utility\n";
  for (const auto& r : trace) {
    out += std::to_string(r.epoch) + ',' + std::string(to_string(r.phase)) + ',' + std::to_string(r.block + 1) + ',';
    out += r.resource.is_idle() ? std::string("idle") : std::to_string(r.resource.resource() + 1);
    out += ',';
    out += r.mood ? std::string(to_string(*r.mood)) : std::string("-");
    out += ',' + std::to_string(r.est_load) + ',' + format_double(r.est_utility) + '\n';
  }
  return out;
}

inline nlohmann::json trial_summary_json(const TrialSummary& s) {
  nlohmann::json j{{"trial", s.trial},
                   {"steps", s.steps},
                   {"cum_regret", s.cum_regret},
                   {"mean_welfare", s.mean_welfare},
                   {"efficiency", s.efficiency},
                   {"final_allocation", allocation_to_json(s.final_allocation)}};
  if (!s.n_hat.empty()) {
    j["n_hat"] = s.n_hat;
    j["undefined_estimates"] = s.undefined_estimates;
    j["c_below_n_hat"] = s.c_below_n_hat;
  }
  return j;
}

template <class Body>
int guarded(Body body) {
  try {
    return body();
  } catch (const InstanceTooLarge& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitTooLarge;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

/// Runs num_trials trials; writes trial_<i>.csv, aggregate.csv and report.json.
inline int cmd_run(const Options& opt) {
  return guarded([&] {
    const auto started = std::chrono::steady_clock::now();
    const auto ec = load_experiment(opt.config_path, opt.overrides);
    const auto& cfg = ec.run;
    const auto summary = brute_force_summary(cfg.game, cfg.oracle_cap);
    const std::filesystem::path out{opt.output_dir};
    ensure_dir(out);

    const auto results = run_trials(cfg, summary, opt.threads);
    std::vector<MetricsSeries> series;
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& r : results) {
      write_atomic(out / ("trial_" + std::to_string(r.summary.trial) + ".csv"), trial_csv(r.series));
      for (std::size_t n = 0; n < r.traces.size(); ++n) {
        write_atomic(out / ("trace_" + std::to_string(r.summary.trial) + "_agent_" + std::to_string(n + 1) + ".csv"),
                     trace_csv(r.traces[n]));
      }
      series.push_back(r.series);
      trials.push_back(trial_summary_json(r.summary));
    }
    const auto agg = aggregate_trials(series, {summary});
    write_atomic(out / "aggregate.csv", aggregate_csv(agg));

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    nlohmann::json report{{"config", echo_config(ec)},
                          {"welfare_summary", summary},
                          {"final_efficiency", agg.final_efficiency_mean},
                          {"final_efficiency_std", agg.final_efficiency_std},
                          {"trials", trials},
                          {"wall_time_s", wall}};
    write_atomic(out / "report.json", report.dump(2) + "\n");
    return kExitOk;
  });
}

/// Prints the game's WelfareSummary as JSON on stdout.
inline int cmd_oracle(const Options& opt, std::ostream& os = std::cout) {
  return guarded([&] {
    const auto ec = load_experiment(opt.config_path, opt.overrides);
    const auto summary = brute_force_summary(ec.run.game, ec.run.oracle_cap);
    os << nlohmann::json(summary).dump(2) << '\n';
    return kExitOk;
  });
}

/// Parses the config and reports problems without running anything.
inline int cmd_validate(const Options& opt, std::ostream& os = std::cout) {
  return guarded([&] {
    const auto ec = load_experiment(opt.config_path, opt.overrides);
    os << "ok: " << to_string(ec.run.policy) << ", N=" << ec.run.game.num_agents()
       << ", M=" << ec.run.game.num_resources() << ", steps=" << ec.run.total_steps() << '\n';
    return kExitOk;
  });
}

/// Sweep instance i: its own generator stream, independent of the
/// agent and noise streams of trial i.
inline GameInstance sweep_instance(const ExperimentConfig& ec, std::uint32_t i) {
  const auto& spec = *ec.sweep;
  auto rng = make_stream(ec.run.base_seed, i, std::uint64_t{1} << 40);
  return generate_instance(spec.generator, rng, spec.noise, spec.num_agents, ec.run.base_seed);
}

struct SweepRow {
  Policy policy;
  MeanStd efficiency;
  std::size_t n{0};
};

/// Every policy on num_trials generated instances (one trial each).
/// Writes efficiency_summary.csv, efficiency_curves.csv and sweep_report.json.
inline int cmd_sweep(const Options& opt) {
  return guarded([&] {
    const auto started = std::chrono::steady_clock::now();
    auto ec = load_experiment(opt.config_path, opt.overrides);
    if (!ec.sweep) ec.sweep = SweepSpec{GeneratorKind::RandomOffset, {Policy::Ene, Policy::Random, Policy::Ucb},
                                        ec.run.game.num_agents(), ec.run.game.noise()};
    const std::filesystem::path out{opt.output_dir};
    ensure_dir(out);

    const auto count = ec.run.num_trials;
    std::vector<GameInstance> games;
    std::vector<WelfareSummary> summaries;
    for (std::uint32_t i = 0; i < count; ++i) {
      games.push_back(sweep_instance(ec, i));
      summaries.push_back(brute_force_summary(games.back(), ec.run.oracle_cap));
    }

    std::string summary_csv = "policy,mean,stddev,n\n";
    std::string curves_csv = "policy,step_end,mean_efficiency,std_efficiency\n";
    nlohmann::json rows = nlohmann::json::array();
    for (auto policy : ec.sweep->policies) {
      auto results = parallel_map(count, opt.threads, [&](std::size_t i) {
        RunConfig cfg = ec.run;
        cfg.game = games[i];
        cfg.policy = policy;
        cfg.horizon.reset();
        cfg.granularity = Granularity::PerBlock;
        return run_trial(cfg, static_cast<std::uint32_t>(i), summaries[i]);
      });
      std::vector<MetricsSeries> series;
      std::vector<double> effs;
      for (const auto& r : results) {
        series.push_back(r.series);
        effs.push_back(r.summary.efficiency);
      }
      const auto agg = aggregate_trials(series, summaries);
      const auto ms = mean_std(effs);
      summary_csv += std::string(to_string(policy)) + ',' + format_double(ms.mean) + ',' + format_double(ms.stddev) +
                     ',' + std::to_string(effs.size()) + '\n';
      for (const auto& p : agg.points) {
        curves_csv += std::string(to_string(policy)) + ',' + std::to_string(p.step_end) + ',' +
                      format_double(p.mean_efficiency) + ',' + format_double(p.std_efficiency) + '\n';
      }
      rows.push_back({{"policy", std::string(to_string(policy))},
                      {"mean", ms.mean},
                      {"stddev", ms.stddev},
                      {"n", effs.size()},
                      {"efficiencies", effs}});
    }
    write_atomic(out / "efficiency_summary.csv", summary_csv);
    write_atomic(out / "efficiency_curves.csv", curves_csv);
    nlohmann::json instances = nlohmann::json::array();
    for (std::size_t i = 0; i < games.size(); ++i)
      instances.push_back({{"game", games[i]}, {"welfare_summary", summaries[i]}});
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    nlohmann::json report{{"config", echo_config(ec)}, {"policies", rows}, {"instances", instances}, {"wall_time_s", wall}};
    write_atomic(out / "sweep_report.json", report.dump(2) + "\n");
    return kExitOk;
  });
}

}  // namespace congested::cli
