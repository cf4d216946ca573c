#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "optstop/policy.hpp"
#include "optstop/pomdp.hpp"

namespace optstop {

struct StepRecord {
  int t = 0;
  State state = State::NoIntrusion;
  double belief = 0.0;
  int remaining_stops = 0;
  Action action = Action::Continue;
  Counts observation{};  // counters the decision was based on
  double reward = 0.0;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

enum class Outcome { Prevented, EarlyStop, Truncated };

struct EpisodeTrace {
  std::vector<StepRecord> steps;    // empty when recording is off
  std::optional<int> intrusion_time;  // first step with s_t = 1
  std::vector<int> stop_times;      // chronological: tau_L, ..., tau_1
  bool truncated = false;
  double total_reward = 0.0;
  int length = 0;

  Outcome outcome() const;
  /// Steps from the intrusion start to the final stop (prevented episodes only).
  std::optional<int> delay() const;

  friend bool operator==(const EpisodeTrace&, const EpisodeTrace&) = default;
};

/// Simulates one episode from s_1 = 0, l_1 = L, b_1(1) = 0. The episode ends at
/// the final stop or is truncated after max_steps decisions. Every random draw
/// comes from streams derived from `seed`.
EpisodeTrace run_episode(const StoppingPomdp& pomdp, const Policy& policy, std::uint64_t seed,
                         bool record_steps = true);

struct EpisodeSummary {
  double reward = 0.0;
  int length = 0;
  Outcome outcome = Outcome::Truncated;
  std::optional<int> delay;
};

struct EvalMetrics {
  double reward_mean = 0.0;
  double reward_ci95 = 0.0;  // half-width, normal approximation
  double length_mean = 0.0;
  double prevention_probability = 0.0;
  double early_stopping_probability = 0.0;
  double delay_mean = 0.0;  // NaN when no episode was prevented
  std::size_t delay_excluded = 0;
  std::size_t episodes = 0;
  std::size_t truncated = 0;
};

/// Seed of evaluation episode `index` under `master_seed`; shared by every
/// policy evaluated with the same master seed.
std::uint64_t evaluation_seed(std::uint64_t master_seed, std::uint64_t index);

/// Episodes run on `threads` workers (0 = hardware concurrency). Results are
/// indexed by episode and do not depend on the worker count.
std::vector<EpisodeSummary> evaluate_episodes(const StoppingPomdp& pomdp, const Policy& policy,
                                              std::size_t n_episodes, std::uint64_t master_seed,
                                              std::size_t threads = 0);

EvalMetrics summarize(std::span<const EpisodeSummary> episodes);

EvalMetrics evaluate(const StoppingPomdp& pomdp, const Policy& policy, std::size_t n_episodes,
                     std::uint64_t master_seed);

struct NamedPolicy {
  std::string name;
  Policy policy;
};

struct ComparisonRow {
  std::string name;
  EvalMetrics metrics;
  std::vector<double> rewards;  // per-episode, aligned across rows
};

/// Evaluates every policy on the same episode seeds.
std::vector<ComparisonRow> compare(const StoppingPomdp& pomdp, std::span<const NamedPolicy> policies,
                                   std::size_t n_episodes, std::uint64_t master_seed);

/// Mean and standard error of the per-episode differences a - b.
struct PairedDifference {
  double mean = 0.0;
  double standard_error = 0.0;
};
PairedDifference paired_difference(std::span<const double> a, std::span<const double> b);

// CSV writers. Reals use 17 significant digits.
std::string metrics_csv_header();
void write_metrics_csv(std::ostream& out, std::span<const ComparisonRow> rows);
void write_trace_csv(std::ostream& out, const EpisodeTrace& trace);

std::string format_real(double v);

}  // namespace optstop
