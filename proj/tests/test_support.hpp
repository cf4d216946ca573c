#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <vector>

#include "optstop/observation_model.hpp"
#include "optstop/pomdp.hpp"

namespace test_support {

using namespace optstop;

inline ObservationModel::Marginals point_mass(const Bounds& b, Counts at) {
  ObservationModel::Marginals m;
  for (int d = 0; d < 3; ++d) m[d].assign(b.max(d) + 1, 0.0);
  m[0][at.dx] = 1.0;
  m[1][at.dy] = 1.0;
  m[2][at.dz] = 1.0;
  return m;
}

/// Model whose dx counter follows the given PMFs; dy and dz are always 0.
inline ObservationModel dx_only(const std::vector<double>& calm, const std::vector<double>& attack) {
  Bounds b{int(calm.size()) - 1, 0, 0};
  auto m0 = point_mass(b, {});
  auto m1 = point_mass(b, {});
  m0[0] = calm;
  m1[0] = attack;
  return ObservationModel::factorized(b, {m0, m1});
}

inline std::shared_ptr<const ObservationModel> share(ObservationModel m) {
  return std::make_shared<const ObservationModel>(std::move(m));
}

inline StoppingPomdp make_pomdp(ObservationModel m, int L = 3, double p = 0.01, int max_steps = 1000) {
  return StoppingPomdp(p, L, RewardParams{}, share(std::move(m)), max_steps);
}

/// Small factorized truncated-Poisson model with ordered means.
inline ObservationModel poisson_model(Bounds b, std::array<double, 3> calm,
                                      std::array<double, 3> attack) {
  SyntheticSpec spec;
  spec.bounds = b;
  for (int d = 0; d < 3; ++d) {
    spec.families[0][d] = CounterFamily::poisson(calm[d]);
    spec.families[1][d] = CounterFamily::poisson(attack[d]);
  }
  return synthetic_model(spec);
}

/// Belief filter written in odds form, independent of the library code.
inline double odds_update(double b, double z0, double z1, double p) {
  const double prior_odds = (b + (1.0 - b) * p) / ((1.0 - b) * (1.0 - p));
  if (std::isinf(prior_odds)) return 1.0;
  const double post = prior_odds * z1 / z0;
  if (std::isinf(post)) return 1.0;
  return post / (1.0 + post);
}

}  // namespace test_support
