#include "optstop/types.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "optstop/rng.hpp"

namespace optstop {

std::string to_string(State s) {
  switch (s) {
    case State::NoIntrusion: return "no_intrusion";
    case State::Intrusion: return "intrusion";
    case State::Terminal: return "terminal";
  }
  return "?";
}

std::string to_string(Action a) { return a == Action::Stop ? "stop" : "continue"; }

int Bounds::max(int dim) const {
  switch (dim) {
    case 0: return dx_max;
    case 1: return dy_max;
    case 2: return dz_max;
  }
  throw std::out_of_range("counter dimension must be 0, 1 or 2");
}

Belief::Belief(double intrusion) : b1_(intrusion) {
  if (!(intrusion >= 0.0 && intrusion <= 1.0))
    throw std::domain_error("belief must lie in [0, 1]");
}

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words;
  words.reserve(parts.size() * 2);
  for (auto p : parts) {
    words.push_back(static_cast<std::uint32_t>(p & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (std::uint64_t(out[1]) << 32) | out[0];
}

EpisodeStreams::EpisodeStreams(std::uint64_t seed)
    : state(derive_seed({seed, 1})), observation(derive_seed({seed, 2})),
      policy(derive_seed({seed, 3})) {}

}  // namespace optstop
