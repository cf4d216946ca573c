#include <doctest.h>

#include <cmath>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "optstop/config.hpp"
#include "optstop/dp_oracle.hpp"
#include "optstop/simulator.hpp"
#include "test_support.hpp"

using namespace optstop;

namespace {

// Plain value iteration written against the model definition: untruncated
// Poisson total counts, odds-form filter, Gauss-Seidel sweeps.
struct ReferenceSolution {
  std::vector<std::vector<double>> v;
  std::vector<double> alpha;
};

ReferenceSolution reference_solve(const std::vector<double>& z0, const std::vector<double>& z1,
                                  int L, double p, int n) {
  auto value = [&](const std::vector<double>& v, double b) {
    const double x = b * (n - 1);
    const int c = std::min(int(x), n - 2);
    return v[c] + (x - c) * (v[c + 1] - v[c]);
  };
  auto expect = [&](const std::vector<double>& v, double b) {
    const double pred = b + (1 - b) * p;
    double s = 0.0;
    for (std::size_t o = 0; o < z0.size(); ++o) {
      const double w = z1[o] * pred + z0[o] * (1 - pred);
      if (w > 0) s += w * value(v, z1[o] * pred / w);
    }
    return s;
  };
  ReferenceSolution out;
  out.v.assign(L + 1, std::vector<double>(n, 0.0));
  for (int l = 1; l <= L; ++l) {
    std::vector<double> stop(n);
    for (int i = 0; i < n; ++i) {
      const double b = double(i) / (n - 1);
      stop[i] = b * 50.0 / (4.0 * l) + (l > 1 ? expect(out.v[l - 1], b) : 0.0);
    }
    auto& v = out.v[l];
    for (double change = 1.0; change > 1e-10;) {
      change = 0.0;
      for (int i = 0; i < n; ++i) {
        const double b = double(i) / (n - 1);
        const double next = std::max(stop[i], 1.0 - 10.0 * b / L + expect(v, b));
        change = std::max(change, std::abs(next - v[i]));
        v[i] = next;
      }
    }
    double alpha = 1.0;
    for (int i = 0; i < n; ++i) {
      const double b = double(i) / (n - 1);
      if (stop[i] >= 1.0 - 10.0 * b / L + expect(v, b)) {
        alpha = b;
        break;
      }
    }
    out.alpha.push_back(alpha);
  }
  return out;
}

std::vector<double> poisson_pmf(double mean, int kmax) {
  std::vector<double> out(kmax + 1);
  for (int k = 0; k <= kmax; ++k) out[k] = std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
  return out;
}

ExperimentConfig scaled_scenario(int L, std::array<double, 3> calm, double ratio) {
  auto cfg = default_scenario();
  cfg.stops = L;
  for (int d = 0; d < 3; ++d) {
    cfg.observation.synthetic.families[0][d] = CounterFamily::poisson(calm[d]);
    cfg.observation.synthetic.families[1][d] = CounterFamily::poisson(ratio * calm[d]);
  }
  return cfg;
}

// Three outcomes with an increasing likelihood ratio.
StoppingPomdp three_point(int L) {
  return test_support::make_pomdp(test_support::dx_only({0.6, 0.3, 0.1}, {0.2, 0.3, 0.5}), L);
}

OracleConfig exact(int resolution) {
  OracleConfig cfg;
  cfg.resolution = resolution;
  cfg.binning.mode = ObservationBinning::Mode::Exact;
  return cfg;
}

}  // namespace

TEST_CASE("certain intrusion with one stop") {
  const auto pomdp = three_point(1);
  const auto g = value_iteration(pomdp, exact(101));
  REQUIRE(g.converged);
  const int top = g.resolution - 1;
  CHECK(g.points.front() == 0.0);
  CHECK(g.points.back() == 1.0);
  CHECK(g.values[1][top] == doctest::Approx(12.5));
  CHECK(g.stop[1][top]);
  CHECK(g.continue_values[1][top] == doctest::Approx(-9.0 + 12.5));
  for (double v : g.values[0]) CHECK(v == 0.0);
  for (int i = 0; i < g.resolution; ++i)
    if (g.stop[1][i]) CHECK(g.stop_values[1][i] >= g.continue_values[1][i]);
  // Stopping with no intrusion forfeits the service reward.
  CHECK(g.continue_values[1][0] > g.stop_values[1][0]);
}

TEST_CASE("agreement with an independent solver") {
  const auto pomdp = three_point(2);
  const auto g = value_iteration(pomdp, exact(201));
  const auto ref = reference_solve({0.6, 0.3, 0.1}, {0.2, 0.3, 0.5}, 2, 0.01, 201);
  const auto t = extract_thresholds(g);
  for (int l = 1; l <= 2; ++l) {
    CHECK(t[l - 1].alpha == doctest::Approx(ref.alpha[l - 1]));
    for (int i = 0; i < g.resolution; ++i) REQUIRE(std::abs(g.values[l][i] - ref.v[l][i]) < 1e-4);
  }
}

TEST_CASE("threshold is stable under grid refinement") {
  const auto pomdp = three_point(1);
  const int coarse = 101;
  const auto g = value_iteration(pomdp, exact(coarse));
  const auto fine = reference_solve({0.6, 0.3, 0.1}, {0.2, 0.3, 0.5}, 1, 0.01, 10 * (coarse - 1) + 1);
  CHECK(std::abs(extract_thresholds(g)[0].alpha - fine.alpha[0]) <= g.cell_width());
}

TEST_CASE("total-count binning on the default scenario matches the reference") {
  auto cfg = default_scenario();
  cfg.oracle.resolution = 201;
  cfg.oracle.tol = 1e-11;
  cfg.oracle.max_iters = 100000;
  const auto pomdp = build_pomdp(cfg);
  const auto g = value_iteration(pomdp, cfg.oracle);
  const auto ref = reference_solve(poisson_pmf(1.4, 60), poisson_pmf(1.75, 60), 3, 0.01, 201);
  for (int l = 1; l <= 3; ++l) {
    CHECK(extract_thresholds(g)[l - 1].alpha == doctest::Approx(ref.alpha[l - 1]));
    CHECK(g.values[l][0] == doctest::Approx(ref.v[l][0]).epsilon(1e-6));
  }
}

TEST_CASE("exact and total-count alphabets agree when the total is sufficient") {
  auto cfg = scaled_scenario(2, {0.5, 1.0, 0.25}, 2.0);
  cfg.observation.synthetic.bounds = {12, 12, 12};
  const auto pomdp = build_pomdp(cfg);
  OracleConfig by_total;
  by_total.resolution = 201;
  by_total.binning = {ObservationBinning::Mode::TotalCount, 1, 100};
  const auto a = value_iteration(pomdp, by_total);
  const auto b = value_iteration(pomdp, exact(201));
  CHECK(build_alphabet(pomdp.observation_model(), exact(3).binning).size() == 13 * 13 * 13);
  for (int l = 1; l <= 2; ++l) {
    CHECK(extract_thresholds(a)[l - 1].alpha == extract_thresholds(b)[l - 1].alpha);
    for (int i = 0; i < a.resolution; ++i) REQUIRE(std::abs(a.values[l][i] - b.values[l][i]) < 1e-6);
  }
}

TEST_CASE("alphabets") {
  const auto model = test_support::poisson_model({20, 10, 5}, {1, 2, 1}, {3, 4, 2});
  for (auto binning : {ObservationBinning{ObservationBinning::Mode::TotalCount, 5, 50},
                       ObservationBinning{ObservationBinning::Mode::TotalCount, 1, 4},
                       ObservationBinning{ObservationBinning::Mode::Exact, 1, 1}}) {
    const auto a = build_alphabet(model, binning);
    double s0 = 0, s1 = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      s0 += a.z0[k];
      s1 += a.z1[k];
    }
    CHECK(s0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s1 == doctest::Approx(1.0).epsilon(1e-12));
  }
  // The last of four bins absorbs every total of 3 or more.
  const auto capped = build_alphabet(model, {ObservationBinning::Mode::TotalCount, 1, 4});
  REQUIRE(capped.size() == 4);
  const auto t0 = model.total_count_pmf(State::NoIntrusion);
  CHECK(capped.z0[0] == doctest::Approx(t0[0]));
  CHECK(capped.z0[3] == doctest::Approx(1.0 - t0[0] - t0[1] - t0[2]));
  CHECK_THROWS_AS(build_alphabet(model, {ObservationBinning::Mode::TotalCount, 0, 4}),
                  std::invalid_argument);
  CHECK(parse_binning_mode("exact") == ObservationBinning::Mode::Exact);
  CHECK(to_string(ObservationBinning::Mode::TotalCount) == "total_count");
  CHECK_THROWS_AS(parse_binning_mode("dense"), std::invalid_argument);
}

TEST_CASE("threshold extraction from policy tables") {
  BeliefGrid g;
  g.resolution = 5;
  g.points = {0, 0.25, 0.5, 0.75, 1};
  g.values.assign(3, std::vector<double>(5, 0.0));
  g.stop = {std::vector<bool>(5, false), std::vector<bool>(5, true), std::vector<bool>(5, false)};
  const auto t = extract_thresholds(g);
  CHECK(t[0].alpha == 0.0);
  CHECK_FALSE(t[0].empty);
  CHECK(t[1].alpha == 1.0);
  CHECK(t[1].empty);
  CHECK(threshold_policy(g).thresholds == std::vector<double>{0.0, 1.0});

  g.stop[2] = {false, false, true, false, true};
  const auto r = verify_structure(g, three_point(2));
  CHECK_FALSE(r.connected.ok);
  CHECK(r.connected.first_violation.find("b=0.75") != std::string::npos);
}

TEST_CASE("default scenario structure") {
  const auto cfg = default_scenario();
  const auto pomdp = build_pomdp(cfg);
  const auto g = value_iteration(pomdp, cfg.oracle);
  REQUIRE(g.converged);
  const auto r = verify_structure(g, pomdp, cfg.tp2_order);
  CHECK(r.all_ok());
  REQUIRE(r.thresholds.size() == 3);
  CHECK(r.thresholds[0].alpha >= r.thresholds[1].alpha);
  CHECK(r.thresholds[1].alpha >= r.thresholds[2].alpha);
  // Regression fixtures at 1001 grid points.
  CHECK(r.thresholds[0].alpha == doctest::Approx(0.512));
  CHECK(r.thresholds[1].alpha == doctest::Approx(0.503));
  CHECK(r.thresholds[2].alpha == doctest::Approx(0.499));
  CHECK(r.value_at_zero == doctest::Approx(41.2044).epsilon(1e-5));

  const auto alphabet = build_alphabet(pomdp.observation_model(), cfg.oracle.binning);
  CHECK(bellman_residual(pomdp, alphabet, g) < cfg.oracle.tol);

  for (int l = 2; l <= 3; ++l)
    for (int i = 0; i < g.resolution; ++i) REQUIRE(g.values[l][i] >= g.values[l - 1][i] - 1e-9);

  // Convexity in b, up to interpolation error of two cells times the slope bound.
  const double h = g.cell_width();
  for (int l = 1; l <= 3; ++l) {
    double slope = 0.0;
    for (int i = 1; i < g.resolution; ++i)
      slope = std::max(slope, std::abs(g.values[l][i] - g.values[l][i - 1]) / h);
    for (int i = 1; i + 1 < g.resolution; ++i)
      REQUIRE(g.values[l][i] <= 0.5 * (g.values[l][i - 1] + g.values[l][i + 1]) + 2 * h * slope);
  }
}

TEST_CASE("simulated reward of the oracle policy matches the value") {
  const auto cfg = default_scenario();
  const auto pomdp = build_pomdp(cfg);
  const auto g = value_iteration(pomdp, cfg.oracle);
  const auto eps = evaluate_episodes(pomdp, threshold_policy(g), 10000, 2024);
  const auto m = summarize(eps);
  const double se = m.reward_ci95 / 1.96;
  CHECK(std::abs(m.reward_mean - g.values[3][0]) <= 3.0 * se);
}

TEST_CASE("single stop is vacuously nested") {
  const auto pomdp = three_point(1);
  const auto r = verify_structure(value_iteration(pomdp, exact(101)), pomdp);
  CHECK(r.nested.ok);
  CHECK(r.monotone.ok);
  CHECK(r.connected.ok);
}

TEST_CASE("non-TP2 observations are reported, not rejected") {
  const auto pomdp = test_support::make_pomdp(test_support::dx_only({0.5, 0.2, 0.3}, {0.1, 0.6, 0.3}), 2);
  const auto g = value_iteration(pomdp, exact(101));
  const auto r = verify_structure(g, pomdp);
  CHECK_FALSE(r.tp2_observations.ok);
  CHECK(r.tp2_observations.first_violation == "(1,0,0) vs (2,0,0)");
  CHECK(r.tp2_transitions.ok);
  CHECK(r.thresholds.size() == 2);
  CHECK_FALSE(r.all_ok());
}

TEST_CASE("weak signals can break threshold ordering under TP2") {
  // Equal-ratio Poisson counters are TP2 in the total count, yet with a ratio of
  // 1.2 the single-stop threshold falls below the two-stop threshold.
  const auto cfg = scaled_scenario(3, {0.171, 0.343, 0.0857}, 1.2);
  const auto pomdp = build_pomdp(cfg);
  const auto g = value_iteration(pomdp, cfg.oracle);
  const auto r = verify_structure(g, pomdp, ObservationOrder::TotalCount);
  CHECK(r.tp2_observations.ok);
  CHECK(r.tp2_transitions.ok);
  CHECK(r.connected.ok);
  CHECK_FALSE(r.monotone.ok);
  CHECK_FALSE(r.nested.ok);
  CHECK(r.thresholds[0].alpha < r.thresholds[1].alpha);

  const auto ref = reference_solve(poisson_pmf(0.171 + 0.343 + 0.0857, 40),
                                   poisson_pmf(1.2 * (0.171 + 0.343 + 0.0857), 40), 3, 0.01, 1001);
  CHECK(ref.alpha[0] < ref.alpha[1]);
}

TEST_CASE("non-convergence is reported") {
  auto cfg = default_scenario();
  cfg.oracle.resolution = 101;
  cfg.oracle.max_iters = 3;
  const auto pomdp = build_pomdp(cfg);
  const auto g = value_iteration(pomdp, cfg.oracle);
  CHECK_FALSE(g.converged);
  CHECK(g.max_residual() >= cfg.oracle.tol);
  CHECK(g.iterations[1] == 3);
  OracleConfig bad;
  bad.resolution = 2;
  CHECK_THROWS_AS(value_iteration(pomdp, bad), std::invalid_argument);
}

TEST_CASE("report and value table output") {
  const auto pomdp = three_point(2);
  const auto g = value_iteration(pomdp, exact(11));
  std::ostringstream csv;
  write_value_csv(csv, g);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "b,l,V,action");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2 * 11);

  std::ostringstream yaml;
  write_structure_report(yaml, verify_structure(g, pomdp));
  const auto doc = YAML::Load(yaml.str());
  CHECK(doc["resolution"].as<int>() == 11);
  CHECK(doc["nested"]["ok"].as<bool>());
  CHECK(doc["thresholds"].size() == 2);
  CHECK(doc["observation_order"].as<std::string>() == "lexicographic");
}
