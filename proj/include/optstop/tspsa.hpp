#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "optstop/policy.hpp"
#include "optstop/pomdp.hpp"
#include "optstop/simulator.hpp"

namespace optstop {

struct SpsaConfig {
  double a = 1.0;
  double c = 1.0;
  double lambda = 0.101;
  double A = 100.0;
  double epsilon = 0.602;
  int iterations = 10000;
  int rollouts_per_eval = 1;
  int restarts = 5;
  // Initial theta is drawn uniformly from [init_low, init_high].
  double init_low = -2.0;
  double init_high = 2.0;
  // Evaluate the smooth policy every eval_every iterations (and at 0 and N).
  int eval_every = 100;
  int eval_episodes = 500;
  // The two perturbed rollouts of an iteration share episode seeds.
  bool common_random_numbers = true;

  void validate() const;
};

struct Gains {
  double a_n = 0.0;
  double c_n = 0.0;
};

/// a_n = a / (n + A)^epsilon and c_n = c / n^lambda for n >= 1.
Gains gains(int n, const SpsaConfig& cfg);

/// L independent Rademacher components.
std::vector<double> perturbation(int L, Rng& rng);

/// (J_hi - J_lo) / (2 c_n delta_i) per component.
std::vector<double> spsa_gradient(double j_hi, double j_lo, double c_n, std::span<const double> delta);

struct ObjectiveEstimate {
  double value = 0.0;  // mean episodic reward
  int truncated = 0;   // truncated episodes included in the mean
};

/// Mean reward of m smooth-policy episodes; episode k uses
/// EpisodeStreams(derive_seed({seed, k})).
ObjectiveEstimate estimate_objective(const StoppingPomdp& pomdp, const ThetaVector& theta, int m,
                                     std::uint64_t seed);

struct EvalPoint {
  double reward_mean = 0.0;
  double reward_ci95 = 0.0;
};

/// Row 0 holds the initial theta. Row n >= 1 holds theta after update n together
/// with the quantities that produced it.
struct CurveRow {
  int iteration = 0;
  std::vector<double> theta;
  double j_hi = 0.0;
  double j_lo = 0.0;
  std::vector<double> delta;
  std::optional<EvalPoint> eval;
};

struct TrainingCurve {
  std::vector<CurveRow> rows;

  /// Last row carrying an evaluation.
  const EvalPoint& final_eval() const;
};

struct TrainingResult {
  ThetaVector theta;
  TrainingCurve curve;
  int restart = 0;
};

/// Runs cfg.iterations T-SPSA updates from theta_init. All randomness derives
/// from (seed, restart). Throws TrainingError on a non-finite estimate.
TrainingResult train(const StoppingPomdp& pomdp, const SpsaConfig& cfg, ThetaVector theta_init,
                     std::uint64_t seed, int restart = 0);

/// Initial theta for a restart, uniform on [init_low, init_high].
ThetaVector initial_theta(int L, const SpsaConfig& cfg, std::uint64_t seed, int restart);

struct RestartResults {
  std::vector<TrainingResult> runs;
  std::size_t best = 0;  // highest final evaluation reward

  const TrainingResult& best_run() const { return runs.at(best); }
};

RestartResults train_with_restarts(const StoppingPomdp& pomdp, const SpsaConfig& cfg,
                                   std::uint64_t seed);

/// Seed shared by all evaluations made during training.
std::uint64_t training_eval_seed(std::uint64_t seed);

/// Recomputes every theta snapshot from row 0 and the logged estimates.
std::vector<std::vector<double>> replay(const TrainingCurve& curve, const SpsaConfig& cfg);

std::string curve_csv_header(int L);
void write_curve_csv(std::ostream& out, const TrainingCurve& curve);

}  // namespace optstop
