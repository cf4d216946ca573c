#pragma once

#include <memory>
#include <utility>

#include "optstop/observation_model.hpp"
#include "optstop/types.hpp"

namespace optstop {

struct RewardParams {
  double stop = 50.0;        // reward scale for stopping during an intrusion
  double service = 1.0;      // per-step service reward
  double intrusion = -10.0;  // per-step intrusion loss

  void validate() const;
};

/// The stopping POMDP: intrusion onset probability, stop budget, reward
/// parameters, observation model and an episode cap for arbitrary policies.
class StoppingPomdp {
 public:
  StoppingPomdp(double intrusion_probability, int stops, RewardParams rewards,
                std::shared_ptr<const ObservationModel> model, int max_steps = 1000);

  double intrusion_probability() const noexcept { return p_; }
  int stops() const noexcept { return stops_; }
  const RewardParams& rewards() const noexcept { return rewards_; }
  const ObservationModel& observation_model() const noexcept { return *model_; }
  std::shared_ptr<const ObservationModel> observation_model_ptr() const { return model_; }
  int max_steps() const noexcept { return max_steps_; }

  /// P_l[to | from, a]. Throws std::invalid_argument if l = 0 outside Terminal.
  double transition_probability(State from, Action a, int l, State to) const;

  /// Samples the successor state and the new stop budget.
  std::pair<State, int> transition(State s, Action a, int l, Rng& rng) const;

  double reward(State s, Action a, int l) const;

  /// Expected one-step rewards at belief b with l stops remaining.
  double stop_reward(double b1, int l) const;
  double continue_reward(double b1, int l) const;

  /// Slope of R^S_{b,l} - R^C_{b,l} in b(1): r_stop/(4l) - r_int/L.
  double reward_gap_slope(int l) const;

  Observation observe(State next, int remaining_stops, Rng& rng) const;

  Belief belief_update(Belief b, Action a, const Observation& o) const;

 private:
  double p_;
  int stops_;
  RewardParams rewards_;
  std::shared_ptr<const ObservationModel> model_;
  int max_steps_;
};

/// One step of the two-state filter given the observation likelihoods under
/// no-intrusion (z0) and intrusion (z1). Throws ZeroLikelihoodError when the
/// normalizer vanishes. The result is clamped to [0, 1].
double belief_update(double b1, double z0, double z1, double p);

/// Filter step evaluated against an observation model.
Belief belief_update(Belief b, Action a, const Observation& o, const ObservationModel& model,
                     double p);

}  // namespace optstop
