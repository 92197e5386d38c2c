#pragma once

// Welfare/regret bookkeeping and the per-trial CSV format.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "congested/errors.hpp"
#include "congested/oracle.hpp"

namespace congested {

/// Exact running sum of per-step welfare.
///
/// Each step's welfare is truncated to a multiple of 2^-60 and summed in
/// 128-bit integers, so adding w L times and adding L*w give the same
/// bits. That makes the exploitation fast path identical to stepping,
/// and regret = t*W* - sum is exactly non-decreasing.
class WelfareAccumulator {
 public:
  static constexpr int kFractionBits = 60;

  static __int128 quantize(double w) { return static_cast<__int128>(std::ldexp(w, kFractionBits)); }
  static double to_double(__int128 q) { return std::ldexp(static_cast<double>(q), -kFractionBits); }

  void add(double w) {
    total_ += quantize(w);
    ++steps_;
  }

  void add_repeated(double w, std::uint64_t count) {
    total_ += quantize(w) * static_cast<__int128>(count);
    steps_ += count;
  }

  std::uint64_t steps() const { return steps_; }
  double sum() const { return to_double(total_); }
  __int128 raw() const { return total_; }

  double regret(double w_star) const {
    return to_double(quantize(w_star) * static_cast<__int128>(steps_) - total_);
  }

  friend bool operator==(const WelfareAccumulator&, const WelfareAccumulator&) = default;

 private:
  __int128 total_{0};
  std::uint64_t steps_{0};
};

struct MetricsRecord {
  std::uint64_t step_start{0};
  std::uint64_t span{0};
  std::string phase;
  std::uint32_t epoch{0};
  double mean_welfare{0.0};
  double cum_regret{0.0};
  double cum_welfare{0.0};

  std::uint64_t step_end() const { return step_start + span; }
};

using MetricsSeries = std::vector<MetricsRecord>;

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

inline constexpr std::string_view kTrialCsvHeader = "step_start,span,phase,epoch,mean_welfare,cum_regret";

/// '.' decimals, LF line endings, shortest round-trip doubles.
inline std::string trial_csv(const MetricsSeries& series) {
  std::string out{kTrialCsvHeader};
  out += '\n';
  for (const auto& r : series) {
    out += std::to_string(r.step_start);
    out += ',';
    out += std::to_string(r.span);
    out += ',';
    out += r.phase;
    out += ',';
    out += std::to_string(r.epoch);
    out += ',';
    out += format_double(r.mean_welfare);
    out += ',';
    out += format_double(r.cum_regret);
    out += '\n';
  }
  return out;
}

struct AggregatePoint {
  std::uint64_t step_end{0};
  double mean_regret{0.0};
  double std_regret{0.0};
  double mean_efficiency{0.0};
  double std_efficiency{0.0};
};

struct AggregateSeries {
  std::vector<AggregatePoint> points;
  double final_efficiency_mean{0.0};
  double final_efficiency_std{0.0};
  std::size_t num_trials{0};
};

struct MeanStd {
  double mean{0.0};
  double stddev{0.0};
};

/// Sample mean and (n-1) standard deviation; stddev is 0 for one value.
inline MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return r;
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return r;
}

/// Running efficiency at the end of record r: cumulative mean welfare
/// normalized against the instance's best and worst welfare.
inline double running_efficiency(const MetricsRecord& r, const WelfareSummary& s) {
  if (r.step_end() == 0) return 0.0;
  return efficiency(r.cum_welfare / static_cast<double>(r.step_end()), s);
}

/// Pointwise mean/stddev over trials. Each trial carries its own
/// WelfareSummary so trials on different instances can be pooled.
inline AggregateSeries aggregate_trials(const std::vector<MetricsSeries>& trials,
                                        const std::vector<WelfareSummary>& summaries) {
  if (trials.empty()) throw MisalignedSeries("no trials to aggregate");
  if (summaries.size() != trials.size() && summaries.size() != 1)
    throw MisalignedSeries("need one welfare summary per trial or a shared one");
  const auto& grid = trials.front();
  for (const auto& t : trials) {
    if (t.size() != grid.size()) throw MisalignedSeries("trials have different record counts");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i].step_start != grid[i].step_start || t[i].span != grid[i].span)
        throw MisalignedSeries("trials have different record grids");
    }
  }
  auto summary_of = [&](std::size_t k) -> const WelfareSummary& {
    return summaries.size() == 1 ? summaries.front() : summaries[k];
  };

  AggregateSeries out;
  out.num_trials = trials.size();
  std::vector<double> regrets(trials.size()), effs(trials.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t k = 0; k < trials.size(); ++k) {
      regrets[k] = trials[k][i].cum_regret;
      effs[k] = running_efficiency(trials[k][i], summary_of(k));
    }
    const auto r = mean_std(regrets);
    const auto e = mean_std(effs);
    out.points.push_back({grid[i].step_end(), r.mean, r.stddev, e.mean, e.stddev});
  }
  if (!out.points.empty()) {
    out.final_efficiency_mean = out.points.back().mean_efficiency;
    out.final_efficiency_std = out.points.back().std_efficiency;
  }
  return out;
}

inline constexpr std::string_view kAggregateCsvHeader =
    "step_end,mean_cum_regret,std_cum_regret,mean_efficiency,std_efficiency";

inline std::string aggregate_csv(const AggregateSeries& a) {
  std::string out{kAggregateCsvHeader};
  out += '\n';
  for (const auto& p : a.points) {
    out += std::to_string(p.step_end) + ',' + format_double(p.mean_regret) + ',' + format_double(p.std_regret) +
           ',' + format_double(p.mean_efficiency) + ',' + format_double(p.std_efficiency) + '\n';
  }
  return out;
}

}  // namespace congested
