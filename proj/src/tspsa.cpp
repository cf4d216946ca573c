#include "optstop/tspsa.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "optstop/errors.hpp"
#include "optstop/rng.hpp"

namespace optstop {

void SpsaConfig::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(what); };
  if (!(a >= 0.0)) fail("trainer.a must be non-negative");
  if (!(c > 0.0)) fail("trainer.c must be positive");
  if (!(lambda > 0.0 && lambda <= 1.0)) fail("trainer.lambda must lie in (0, 1]");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) fail("trainer.epsilon must lie in (0, 1]");
  if (!(A >= 0.0)) fail("trainer.A must be non-negative");
  if (iterations < 1) fail("trainer.iterations must be at least 1");
  if (rollouts_per_eval < 1) fail("trainer.rollouts_per_eval must be at least 1");
  if (restarts < 1) fail("trainer.restarts must be at least 1");
  if (!(init_low <= init_high)) fail("trainer.init_low must not exceed trainer.init_high");
  if (eval_every < 1) fail("trainer.eval_every must be at least 1");
  if (eval_episodes < 1) fail("trainer.eval_episodes must be at least 1");
}

Gains gains(int n, const SpsaConfig& cfg) {
  if (n < 1) throw std::invalid_argument("gain index must be at least 1");
  return {cfg.a / std::pow(double(n) + cfg.A, cfg.epsilon), cfg.c / std::pow(double(n), cfg.lambda)};
}

std::vector<double> perturbation(int L, Rng& rng) {
  if (L < 1) throw std::invalid_argument("perturbation length must be at least 1");
  std::vector<double> d(L);
  for (auto& v : d) v = (rng() >> 63) ? 1.0 : -1.0;
  return d;
}

std::vector<double> spsa_gradient(double j_hi, double j_lo, double c_n,
                                  std::span<const double> delta) {
  if (!(c_n > 0.0)) throw std::invalid_argument("perturbation size must be positive");
  std::vector<double> g(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i) g[i] = (j_hi - j_lo) / (2.0 * c_n * delta[i]);
  return g;
}

namespace {

ObjectiveEstimate rollouts(const StoppingPomdp& pomdp, const ThetaVector& theta, int m,
                           std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("objective estimate needs at least one rollout");
  const Policy policy = SmoothThreshold{theta};
  ObjectiveEstimate est;
  double sum = 0.0;
  for (int k = 0; k < m; ++k) {
    const auto tr = run_episode(pomdp, policy, derive_seed({seed, std::uint64_t(k)}), false);
    sum += tr.total_reward;
    est.truncated += tr.truncated ? 1 : 0;
  }
  est.value = sum / m;
  return est;
}

EvalPoint eval_point(const StoppingPomdp& pomdp, const ThetaVector& theta, const SpsaConfig& cfg,
                     std::uint64_t seed) {
  const auto m = evaluate(pomdp, SmoothThreshold{theta}, std::size_t(cfg.eval_episodes),
                          training_eval_seed(seed));
  return {m.reward_mean, m.reward_ci95};
}

std::string join_reals(std::span<const double> v) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
  return s.str();
}

}  // namespace

ObjectiveEstimate estimate_objective(const StoppingPomdp& pomdp, const ThetaVector& theta, int m,
                                     std::uint64_t seed) {
  return rollouts(pomdp, theta, m, seed);
}

const EvalPoint& TrainingCurve::final_eval() const {
  for (auto it = rows.rbegin(); it != rows.rend(); ++it)
    if (it->eval) return *it->eval;
  throw std::logic_error("training curve has no evaluation");
}

std::uint64_t training_eval_seed(std::uint64_t seed) {
  return derive_seed({seed, seed_tag::kTraining, seed_tag::kEvaluation});
}

ThetaVector initial_theta(int L, const SpsaConfig& cfg, std::uint64_t seed, int restart) {
  Rng rng(derive_seed({seed, seed_tag::kInit, std::uint64_t(restart)}));
  std::vector<double> theta(L);
  for (auto& v : theta) v = cfg.init_low + (cfg.init_high - cfg.init_low) * uniform01(rng);
  return ThetaVector(std::move(theta));
}

TrainingResult train(const StoppingPomdp& pomdp, const SpsaConfig& cfg, ThetaVector theta_init,
                     std::uint64_t seed, int restart) {
  cfg.validate();
  const int L = pomdp.stops();
  if (theta_init.size() != std::size_t(L))
    throw std::invalid_argument("initial theta length must equal the stop budget L");

  const std::uint64_t run_seed = derive_seed({seed, seed_tag::kRestart, std::uint64_t(restart)});
  Rng delta_rng(derive_seed({run_seed, seed_tag::kPerturbation}));

  TrainingResult out;
  out.restart = restart;
  std::vector<double> theta = theta_init.values();
  out.curve.rows.reserve(std::size_t(cfg.iterations) + 1);
  out.curve.rows.push_back({0, theta, NAN, NAN, {}, eval_point(pomdp, theta_init, cfg, seed)});

  std::vector<double> hi(L), lo(L);
  for (int n = 1; n <= cfg.iterations; ++n) {
    const auto [a_n, c_n] = gains(n, cfg);
    const auto delta = perturbation(L, delta_rng);
    for (int i = 0; i < L; ++i) {
      hi[i] = theta[i] + c_n * delta[i];
      lo[i] = theta[i] - c_n * delta[i];
    }
    const std::uint64_t it_seed = derive_seed({run_seed, seed_tag::kTraining, std::uint64_t(n)});
    std::uint64_t hi_seed = it_seed, lo_seed = it_seed;
    if (!cfg.common_random_numbers) {
      hi_seed = derive_seed({it_seed, 1});
      lo_seed = derive_seed({it_seed, 0});
    }
    const auto j_hi = rollouts(pomdp, ThetaVector(hi), cfg.rollouts_per_eval, hi_seed);
    const auto j_lo = rollouts(pomdp, ThetaVector(lo), cfg.rollouts_per_eval, lo_seed);
    if (!std::isfinite(j_hi.value) || !std::isfinite(j_lo.value))
      throw TrainingError("non-finite objective estimate at iteration " + std::to_string(n) +
                          " (J_hi=" + std::to_string(j_hi.value) +
                          ", J_lo=" + std::to_string(j_lo.value) + ", theta=[" +
                          join_reals(theta) + "])");
    const auto g = spsa_gradient(j_hi.value, j_lo.value, c_n, delta);
    for (int i = 0; i < L; ++i) theta[i] += a_n * g[i];
    for (double v : theta)
      if (!std::isfinite(v))
        throw TrainingError("non-finite theta at iteration " + std::to_string(n));

    CurveRow row{n, theta, j_hi.value, j_lo.value, delta, std::nullopt};
    if (n % cfg.eval_every == 0 || n == cfg.iterations)
      row.eval = eval_point(pomdp, ThetaVector(theta), cfg, seed);
    out.curve.rows.push_back(std::move(row));
  }
  out.theta = ThetaVector(theta);
  return out;
}

RestartResults train_with_restarts(const StoppingPomdp& pomdp, const SpsaConfig& cfg,
                                   std::uint64_t seed) {
  cfg.validate();
  RestartResults res;
  for (int r = 0; r < cfg.restarts; ++r) {
    res.runs.push_back(train(pomdp, cfg, initial_theta(pomdp.stops(), cfg, seed, r), seed, r));
    if (res.runs.back().curve.final_eval().reward_mean >
        res.runs[res.best].curve.final_eval().reward_mean)
      res.best = res.runs.size() - 1;
  }
  return res;
}

std::vector<std::vector<double>> replay(const TrainingCurve& curve, const SpsaConfig& cfg) {
  std::vector<std::vector<double>> out;
  if (curve.rows.empty()) return out;
  std::vector<double> theta = curve.rows.front().theta;
  out.push_back(theta);
  for (std::size_t k = 1; k < curve.rows.size(); ++k) {
    const auto& row = curve.rows[k];
    const auto [a_n, c_n] = gains(row.iteration, cfg);
    const auto g = spsa_gradient(row.j_hi, row.j_lo, c_n, row.delta);
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += a_n * g[i];
    out.push_back(theta);
  }
  return out;
}

std::string curve_csv_header(int L) {
  std::string h = "iteration";
  for (int i = 1; i <= L; ++i) h += ",theta_" + std::to_string(i);
  for (int i = 1; i <= L; ++i) h += ",threshold_" + std::to_string(i);
  return h + ",J_hi,J_lo,eval_reward_mean,eval_reward_ci95";
}

void write_curve_csv(std::ostream& out, const TrainingCurve& curve) {
  const int L = curve.rows.empty() ? 0 : int(curve.rows.front().theta.size());
  out << curve_csv_header(L) << '\n';
  for (const auto& row : curve.rows) {
    out << row.iteration;
    for (double v : row.theta) out << ',' << format_real(v);
    for (double v : row.theta) out << ',' << format_real(sigmoid(v));
    if (row.iteration == 0)
      out << ",,";
    else
      out << ',' << format_real(row.j_hi) << ',' << format_real(row.j_lo);
    if (row.eval)
      out << ',' << format_real(row.eval->reward_mean) << ',' << format_real(row.eval->reward_ci95);
    else
      out << ",,";
    out << '\n';
  }
}

}  // namespace optstop
