#include <doctest.h>

#include <cmath>
#include <sstream>

#include "optstop/config.hpp"
#include "optstop/policy.hpp"
#include "optstop/simulator.hpp"
#include "optstop/tspsa.hpp"
#include "test_support.hpp"

using namespace optstop;

namespace {

StoppingPomdp default_pomdp() { return build_pomdp(default_scenario()); }

// Identical counter distributions: the belief only follows the prior and
// never reaches 1 within the step cap.
StoppingPomdp uninformative(int L, int max_steps = 1000) {
  Bounds b{1, 0, 0};
  auto m = test_support::point_mass(b, {});
  return StoppingPomdp(0.01, L, {}, test_support::share(ObservationModel::factorized(b, {m, m})),
                       max_steps);
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

const Policy always_stop = HardThreshold{{0.0, 0.0, 0.0}};

}  // namespace

TEST_CASE("always stopping ends after L steps") {
  const auto pomdp = default_pomdp();
  int calm = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto tr = run_episode(pomdp, always_stop, evaluation_seed(1, i));
    REQUIRE(tr.length == 3);
    REQUIRE(!tr.truncated);
    REQUIRE(tr.stop_times == std::vector<int>{1, 2, 3});
    calm += !tr.intrusion_time.has_value();
  }
  const double q = 0.99 * 0.99;
  CHECK(std::abs(calm - n * q) < 3 * std::sqrt(n * q * (1 - q)));
}

TEST_CASE("always stopping with one stop is an early stop") {
  auto cfg = default_scenario();
  cfg.stops = 1;
  const auto pomdp = build_pomdp(cfg);
  // The episode starts without intrusion, so a stop at t = 1 always precedes it.
  const auto m = evaluate(pomdp, HardThreshold{{0.0}}, 10000, 3);
  CHECK(m.early_stopping_probability == 1.0);
  CHECK(m.prevention_probability == 0.0);
  CHECK(m.length_mean == 1.0);
  CHECK(m.reward_mean == 0.0);
  CHECK(std::isnan(m.delay_mean));
  CHECK(m.delay_excluded == 10000);
}

TEST_CASE("never stopping truncates every episode") {
  const auto pomdp = uninformative(2, 300);
  const auto m = evaluate(pomdp, HardThreshold{{1.0, 1.0}}, 200, 4);
  CHECK(m.truncated == 200);
  CHECK(m.prevention_probability == 0.0);
  CHECK(m.early_stopping_probability == 0.0);
  CHECK(m.length_mean == 300.0);
  const auto tr = run_episode(pomdp, HardThreshold{{1.0, 1.0}}, 11);
  CHECK(tr.truncated);
  CHECK(tr.outcome() == Outcome::Truncated);
  CHECK(tr.steps.size() == 300);
}

TEST_CASE("the intrusion-time oracle stops on consecutive steps from the onset") {
  const auto pomdp = default_pomdp();
  for (std::uint64_t i = 0; i < 500; ++i) {
    const auto tr = run_episode(pomdp, IntrusionTimeOracle{}, evaluation_seed(8, i));
    if (tr.truncated) continue;
    REQUIRE(tr.intrusion_time.has_value());
    const int it = *tr.intrusion_time;
    REQUIRE(tr.stop_times == std::vector<int>{it, it + 1, it + 2});
    REQUIRE(tr.delay() == 2);
    REQUIRE(tr.steps[it - 1].state == State::Intrusion);
    REQUIRE(tr.steps[it - 2].state == State::NoIntrusion);
  }
  const auto m = evaluate(pomdp, IntrusionTimeOracle{}, 2000, 8);
  CHECK(m.prevention_probability == doctest::Approx(1.0 - double(m.truncated) / 2000));
  CHECK(m.early_stopping_probability == 0.0);
  CHECK(m.delay_mean == 2.0);
}

TEST_CASE("traces are reproducible and consistent") {
  const auto pomdp = default_pomdp();
  const Policy p = SmoothThreshold{ThetaVector({0.1, 0.0, -0.1})};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto a = run_episode(pomdp, p, seed);
    REQUIRE(a == run_episode(pomdp, p, seed));
    std::ostringstream sa, sb;
    write_trace_csv(sa, a);
    write_trace_csv(sb, run_episode(pomdp, p, seed));
    REQUIRE(sa.str() == sb.str());

    double sum = 0.0;
    int stops = 0;
    for (std::size_t k = 0; k < a.steps.size(); ++k) {
      const auto& st = a.steps[k];
      REQUIRE(st.t == int(k) + 1);
      REQUIRE(st.reward == pomdp.reward(st.state, st.action, st.remaining_stops));
      REQUIRE(st.remaining_stops == 3 - stops);
      REQUIRE(st.belief >= 0.0);
      REQUIRE(st.belief <= 1.0);
      sum += st.reward;
      stops += st.action == Action::Stop;
    }
    REQUIRE(sum == a.total_reward);
    REQUIRE(a.length == int(a.steps.size()));
    for (std::size_t k = 1; k < a.stop_times.size(); ++k) REQUIRE(a.stop_times[k - 1] < a.stop_times[k]);
    REQUIRE((a.truncated || a.stop_times.size() == 3));
    const auto unrecorded = run_episode(pomdp, p, seed, false);
    REQUIRE(unrecorded.steps.empty());
    REQUIRE(unrecorded.total_reward == a.total_reward);
    REQUIRE(unrecorded.stop_times == a.stop_times);
  }
}

TEST_CASE("outcomes partition the episodes") {
  const auto pomdp = default_pomdp();
  for (const Policy& p : {Policy{Shiryaev{0.75}}, Policy{AlertBaseline{}},
                          Policy{HardThreshold{{0.5, 0.5, 0.5}}}, Policy{HardThreshold{{0.2, 0.1, 0.05}}}}) {
    const auto m = evaluate(pomdp, p, 500, 6);
    CHECK(m.prevention_probability + m.early_stopping_probability + double(m.truncated) / m.episodes ==
          doctest::Approx(1.0));
    CHECK(m.reward_ci95 >= 0.0);
    CHECK(m.delay_excluded ==
          m.episodes - std::size_t(std::llround(m.prevention_probability * m.episodes)));
  }
}

TEST_CASE("summaries") {
  std::vector<EpisodeSummary> eps{{10.0, 5, Outcome::Prevented, 1},
                                  {0.0, 1, Outcome::EarlyStop, std::nullopt},
                                  {4.0, 3, Outcome::Prevented, 3},
                                  {2.0, 9, Outcome::Truncated, std::nullopt}};
  const auto m = summarize(eps);
  CHECK(m.reward_mean == 4.0);
  const double sd = std::sqrt((36.0 + 16.0 + 0.0 + 4.0) / 3.0);
  CHECK(m.reward_ci95 == doctest::Approx(1.959964 * sd / 2.0).epsilon(1e-6));
  CHECK(m.length_mean == 4.5);
  CHECK(m.prevention_probability == 0.5);
  CHECK(m.early_stopping_probability == 0.25);
  CHECK(m.delay_mean == 2.0);
  CHECK(m.delay_excluded == 2);
  CHECK(m.truncated == 1);
  CHECK_THROWS_AS(evaluate(default_pomdp(), AlertBaseline{}, 0, 1), std::invalid_argument);
}

TEST_CASE("comparisons use paired seeds") {
  const auto pomdp = default_pomdp();
  const std::vector<NamedPolicy> same{{"a", Shiryaev{0.75}}, {"b", Shiryaev{0.75}}};
  const auto rows = compare(pomdp, same, 300, 10);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].rewards == rows[1].rewards);
  CHECK(rows[0].metrics.reward_mean == rows[1].metrics.reward_mean);
  CHECK(rows[0].metrics.delay_mean == rows[1].metrics.delay_mean);
  const auto d = paired_difference(rows[0].rewards, rows[1].rewards);
  CHECK(d.mean == 0.0);
  CHECK(d.standard_error == 0.0);

  const std::vector<NamedPolicy> zoo{{"oracle", IntrusionTimeOracle{}},
                                     {"shiryaev", Shiryaev{0.75}},
                                     {"alert", AlertBaseline{}},
                                     {"hard", HardThreshold{{0.5, 0.5, 0.5}}}};
  const auto table = compare(pomdp, zoo, 500, 10);
  for (std::size_t k = 1; k < table.size(); ++k) {
    const auto diff = paired_difference(table[0].rewards, table[k].rewards);
    CHECK(diff.mean >= -2.0 * diff.standard_error);
  }

  std::ostringstream csv;
  write_metrics_csv(csv, table);
  const auto lines = lines_of(csv.str());
  REQUIRE(lines.size() == 1 + zoo.size());
  CHECK(lines[0] == metrics_csv_header());
  for (const auto& l : lines) CHECK(std::count(l.begin(), l.end(), ',') == 9);
  CHECK(lines[1].rfind("oracle,", 0) == 0);
}

TEST_CASE("CSV headers") {
  CHECK(metrics_csv_header() ==
        "policy,reward_mean,reward_ci95,length_mean,prevention_probability,"
        "early_stopping_probability,delay_mean,delay_excluded,episodes,truncated");
  std::ostringstream out;
  write_trace_csv(out, run_episode(default_pomdp(), always_stop, 1));
  const auto lines = lines_of(out.str());
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "t,state,belief,remaining_stops,action,dx,dy,dz,reward");
  CHECK(lines[1] == "1,0,0,3,1,0,0,0,0");
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(format_real(2.0) == "2");
}

TEST_CASE("paired difference arithmetic") {
  const std::vector<double> a{3, 5, 7, 9}, b{1, 2, 3, 4};
  const auto d = paired_difference(a, b);
  CHECK(d.mean == 3.5);
  CHECK(d.standard_error == doctest::Approx(std::sqrt((2.25 + 0.25 + 0.25 + 2.25) / 3.0 / 4.0)));
  CHECK_THROWS_AS(paired_difference(a, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("evaluation seeds are shared across policies") {
  CHECK(evaluation_seed(42, 0) == evaluation_seed(42, 0));
  CHECK(evaluation_seed(42, 0) != evaluation_seed(42, 1));
  CHECK(evaluation_seed(42, 0) != evaluation_seed(43, 0));
  const auto pomdp = default_pomdp();
  const auto a = run_episode(pomdp, Shiryaev{0.75}, evaluation_seed(5, 3));
  const auto b = run_episode(pomdp, AlertBaseline{}, evaluation_seed(5, 3));
  const auto n = std::min(a.steps.size(), b.steps.size());
  REQUIRE(n >= 1);
  // The state process does not depend on the actions until the final stop.
  for (std::size_t k = 0; k < n; ++k) CHECK(a.steps[k].state == b.steps[k].state);
}

TEST_CASE("worker count does not change evaluation results") {
  auto pomdp = test_support::make_pomdp(test_support::poisson_model({20, 10, 5}, {1, 2, 0.5}, {3, 5, 1.5}));
  const Policy policy = SmoothThreshold{ThetaVector({0.3, 0.1, -0.2})};
  const auto serial = evaluate_episodes(pomdp, policy, 1000, 5, 1);
  const auto parallel = evaluate_episodes(pomdp, policy, 1000, 5, 4);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].reward == parallel[i].reward);
    CHECK(serial[i].length == parallel[i].length);
    CHECK(serial[i].outcome == parallel[i].outcome);
    CHECK(serial[i].delay == parallel[i].delay);
  }
}

TEST_CASE("evaluating a trained policy file agrees with the final training evaluation") {
  const auto cfg = load_config(std::string(OPTSTOP_SOURCE_DIR) + "/configs/smoke.yaml");
  const auto pomdp = build_pomdp(cfg);
  const auto res = train_with_restarts(pomdp, cfg.trainer, cfg.seed);
  std::stringstream file;
  save_policy(SmoothThreshold{res.best_run().theta}, file);
  const Policy loaded = load_policy(file);
  const auto m = evaluate(pomdp, loaded, cfg.evaluation.episodes, cfg.seed);
  const auto& final_eval = res.best_run().curve.final_eval();
  CHECK(std::abs(m.reward_mean - final_eval.reward_mean) <= final_eval.reward_ci95);
}
