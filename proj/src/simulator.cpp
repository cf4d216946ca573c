#include "optstop/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "optstop/rng.hpp"

namespace optstop {

namespace {
constexpr int kNotStarted = std::numeric_limits<int>::max();
constexpr double kZ95 = 1.959963984540054;
constexpr std::size_t kEpisodesPerWorker = 64;
}  // namespace

Outcome EpisodeTrace::outcome() const {
  if (truncated) return Outcome::Truncated;
  if (intrusion_time && !stop_times.empty() && stop_times.back() >= *intrusion_time)
    return Outcome::Prevented;
  return Outcome::EarlyStop;
}

std::optional<int> EpisodeTrace::delay() const {
  if (outcome() != Outcome::Prevented) return std::nullopt;
  return stop_times.back() - *intrusion_time;
}

EpisodeTrace run_episode(const StoppingPomdp& pomdp, const Policy& policy, std::uint64_t seed,
                         bool record_steps) {
  validate_policy(policy, pomdp.stops());
  EpisodeStreams streams(seed);
  EpisodeTrace trace;
  if (record_steps) trace.steps.reserve(128);

  State s = State::NoIntrusion;
  int l = pomdp.stops();
  Belief b(0.0);
  Counts last{};
  for (int t = 1;; ++t) {
    if (t > pomdp.max_steps()) {
      trace.truncated = true;
      break;
    }
    const DecisionContext ctx{l, b.intrusion(), last, t,
                              trace.intrusion_time.value_or(kNotStarted)};
    const Action a = sample_action(policy, ctx, streams.policy);
    const double r = pomdp.reward(s, a, l);
    trace.total_reward += r;
    trace.length = t;
    if (record_steps) trace.steps.push_back({t, s, b.intrusion(), l, a, last, r});
    if (a == Action::Stop) trace.stop_times.push_back(t);

    const auto [next, next_l] = pomdp.transition(s, a, l, streams.state);
    if (next == State::Terminal) break;
    const Observation o = pomdp.observe(next, next_l, streams.observation);
    b = pomdp.belief_update(b, a, o);
    if (next == State::Intrusion && !trace.intrusion_time) trace.intrusion_time = t + 1;
    s = next;
    l = next_l;
    last = o.counts;
  }
  return trace;
}

std::uint64_t evaluation_seed(std::uint64_t master_seed, std::uint64_t index) {
  return derive_seed({master_seed, seed_tag::kEvaluation, index});
}

std::vector<EpisodeSummary> evaluate_episodes(const StoppingPomdp& pomdp, const Policy& policy,
                                              std::size_t n_episodes, std::uint64_t master_seed,
                                              std::size_t threads) {
  if (n_episodes < 1) throw std::invalid_argument("evaluation needs at least one episode");
  std::vector<EpisodeSummary> out(n_episodes);
  auto run_range = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < n_episodes; i += stride) {
      const auto tr = run_episode(pomdp, policy, evaluation_seed(master_seed, i), false);
      out[i] = {tr.total_reward, tr.length, tr.outcome(), tr.delay()};
    }
  };
  if (threads == 0) threads = std::thread::hardware_concurrency();
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, 1 + n_episodes / kEpisodesPerWorker);
  if (workers == 1) {
    run_range(0, 1);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          run_range(w, workers);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

EvalMetrics summarize(std::span<const EpisodeSummary> episodes) {
  EvalMetrics m;
  m.episodes = episodes.size();
  if (episodes.empty()) return m;
  double sum = 0.0, len = 0.0, delay = 0.0;
  std::size_t prevented = 0, early = 0;
  for (const auto& e : episodes) {
    sum += e.reward;
    len += e.length;
    switch (e.outcome) {
      case Outcome::Prevented:
        ++prevented;
        delay += *e.delay;
        break;
      case Outcome::EarlyStop: ++early; break;
      case Outcome::Truncated: ++m.truncated; break;
    }
  }
  const double n = double(episodes.size());
  m.reward_mean = sum / n;
  double ss = 0.0;
  for (const auto& e : episodes) ss += (e.reward - m.reward_mean) * (e.reward - m.reward_mean);
  m.reward_ci95 = episodes.size() > 1 ? kZ95 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  m.length_mean = len / n;
  m.prevention_probability = double(prevented) / n;
  m.early_stopping_probability = double(early) / n;
  m.delay_mean = prevented ? delay / double(prevented) : std::numeric_limits<double>::quiet_NaN();
  m.delay_excluded = episodes.size() - prevented;
  return m;
}

EvalMetrics evaluate(const StoppingPomdp& pomdp, const Policy& policy, std::size_t n_episodes,
                     std::uint64_t master_seed) {
  const auto eps = evaluate_episodes(pomdp, policy, n_episodes, master_seed);
  return summarize(eps);
}

std::vector<ComparisonRow> compare(const StoppingPomdp& pomdp, std::span<const NamedPolicy> policies,
                                   std::size_t n_episodes, std::uint64_t master_seed) {
  std::vector<ComparisonRow> rows;
  for (const auto& p : policies) {
    const auto eps = evaluate_episodes(pomdp, p.policy, n_episodes, master_seed);
    ComparisonRow row{p.name, summarize(eps), {}};
    row.rewards.reserve(eps.size());
    for (const auto& e : eps) row.rewards.push_back(e.reward);
    rows.push_back(std::move(row));
  }
  return rows;
}

PairedDifference paired_difference(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("paired samples must be non-empty and equally long");
  const double n = double(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  const double se = a.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  return {mean, se};
}

std::string format_real(double v) { return fmt::format("{:.17g}", v); }

std::string metrics_csv_header() {
  return "policy,reward_mean,reward_ci95,length_mean,prevention_probability,"
         "early_stopping_probability,delay_mean,delay_excluded,episodes,truncated";
}

void write_metrics_csv(std::ostream& out, std::span<const ComparisonRow> rows) {
  out << metrics_csv_header() << '\n';
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << r.name << ',' << format_real(m.reward_mean) << ',' << format_real(m.reward_ci95) << ','
        << format_real(m.length_mean) << ',' << format_real(m.prevention_probability) << ','
        << format_real(m.early_stopping_probability) << ',' << format_real(m.delay_mean) << ','
        << m.delay_excluded << ',' << m.episodes << ',' << m.truncated << '\n';
  }
}

void write_trace_csv(std::ostream& out, const EpisodeTrace& trace) {
  out << "t,state,belief,remaining_stops,action,dx,dy,dz,reward\n";
  for (const auto& s : trace.steps) {
    out << s.t << ',' << (s.state == State::Intrusion ? 1 : 0) << ',' << format_real(s.belief)
        << ',' << s.remaining_stops << ',' << encode(s.action) << ',' << s.observation.dx << ','
        << s.observation.dy << ',' << s.observation.dz << ',' << format_real(s.reward) << '\n';
  }
}

}  // namespace optstop
