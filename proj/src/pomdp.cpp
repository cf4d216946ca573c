#include "optstop/pomdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "optstop/errors.hpp"
#include "optstop/rng.hpp"

namespace optstop {

void RewardParams::validate() const {
  if (!(stop > 0.0)) throw std::invalid_argument("stop reward must be > 0");
  if (!(service > 0.0)) throw std::invalid_argument("service reward must be > 0");
  if (!(intrusion < 0.0)) throw std::invalid_argument("intrusion loss must be < 0");
}

StoppingPomdp::StoppingPomdp(double intrusion_probability, int stops, RewardParams rewards,
                             std::shared_ptr<const ObservationModel> model, int max_steps)
    : p_(intrusion_probability), stops_(stops), rewards_(rewards), model_(std::move(model)),
      max_steps_(max_steps) {
  if (!(p_ > 0.0 && p_ < 1.0)) throw std::invalid_argument("intrusion probability must be in (0,1)");
  if (stops_ < 1) throw std::invalid_argument("stop budget L must be >= 1");
  if (max_steps_ < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (!model_) throw std::invalid_argument("observation model is required");
  rewards_.validate();
}

double StoppingPomdp::transition_probability(State from, Action a, int l, State to) const {
  if (from == State::Terminal) return to == State::Terminal ? 1.0 : 0.0;
  if (l < 1) throw std::invalid_argument("non-terminal state with no stops remaining");
  if (a == Action::Stop && l == 1) return to == State::Terminal ? 1.0 : 0.0;
  if (from == State::Intrusion) return to == State::Intrusion ? 1.0 : 0.0;
  switch (to) {
    case State::NoIntrusion: return 1.0 - p_;
    case State::Intrusion: return p_;
    case State::Terminal: return 0.0;
  }
  return 0.0;
}

std::pair<State, int> StoppingPomdp::transition(State s, Action a, int l, Rng& rng) const {
  if (s == State::Terminal) return {State::Terminal, 0};
  if (l < 1) throw std::invalid_argument("non-terminal state with no stops remaining");
  if (a == Action::Stop && l == 1) return {State::Terminal, 0};
  const int next_l = l - encode(a);
  if (s == State::Intrusion) return {State::Intrusion, next_l};
  const bool starts = uniform01(rng) < p_;
  return {starts ? State::Intrusion : State::NoIntrusion, next_l};
}

double StoppingPomdp::reward(State s, Action a, int l) const {
  if (s == State::Terminal) return 0.0;
  if (l < 1) throw std::invalid_argument("non-terminal state with no stops remaining");
  const int si = encode(s);
  if (a == Action::Stop) return si * rewards_.stop / (4.0 * l);
  return rewards_.service + si * rewards_.intrusion / stops_;
}

double StoppingPomdp::stop_reward(double b1, int l) const {
  return b1 * rewards_.stop / (4.0 * l);
}

double StoppingPomdp::continue_reward(double b1, int l) const {
  (void)l;
  return rewards_.service + b1 * rewards_.intrusion / stops_;
}

double StoppingPomdp::reward_gap_slope(int l) const {
  return rewards_.stop / (4.0 * l) - rewards_.intrusion / stops_;
}

Observation StoppingPomdp::observe(State next, int remaining_stops, Rng& rng) const {
  if (next == State::Terminal) return Observation::sentinel();
  return Observation{model_->sample(next, rng), remaining_stops, false};
}

Belief StoppingPomdp::belief_update(Belief b, Action a, const Observation& o) const {
  return optstop::belief_update(b, a, o, *model_, p_);
}

double belief_update(double b1, double z0, double z1, double p) {
  const double predicted = b1 + (1.0 - b1) * p;
  const double num = z1 * predicted;
  const double norm = num + z0 * (1.0 - b1) * (1.0 - p);
  if (!(norm > 0.0)) throw ZeroLikelihoodError("observation has zero likelihood under both states");
  return std::clamp(num / norm, 0.0, 1.0);
}

Belief belief_update(Belief b, Action a, const Observation& o, const ObservationModel& model,
                     double p) {
  (void)a;  // the transition kernel is the same for C and a non-final S
  if (o.terminal) throw std::invalid_argument("belief is undefined after the terminal observation");
  const double z0 = model.likelihood(State::NoIntrusion, o.counts);
  const double z1 = model.likelihood(State::Intrusion, o.counts);
  return Belief(belief_update(b.intrusion(), z0, z1, p));
}

}  // namespace optstop
