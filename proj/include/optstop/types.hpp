#pragma once

#include <compare>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace optstop {

using Rng = std::mt19937_64;

enum class State : std::uint8_t { NoIntrusion = 0, Intrusion = 1, Terminal = 2 };

// S is encoded as 1, C as 0.
enum class Action : std::uint8_t { Continue = 0, Stop = 1 };

constexpr int encode(Action a) noexcept { return a == Action::Stop ? 1 : 0; }

/// 0 for NoIntrusion, 1 for Intrusion. Terminal has no encoding.
inline int encode(State s) {
  if (s == State::Terminal) throw std::invalid_argument("terminal state has no numeric encoding");
  return s == State::Intrusion ? 1 : 0;
}

inline int state_index(State s) { return encode(s); }

std::string to_string(State s);
std::string to_string(Action a);

struct Counts {
  int dx = 0;  // severe alerts
  int dy = 0;  // warning alerts
  int dz = 0;  // login attempts

  int total() const noexcept { return dx + dy + dz; }
  friend auto operator<=>(const Counts&, const Counts&) = default;
};

struct Bounds {
  int dx_max = 600;
  int dy_max = 300;
  int dz_max = 100;

  bool contains(const Counts& c) const noexcept {
    return c.dx >= 0 && c.dy >= 0 && c.dz >= 0 && c.dx <= dx_max && c.dy <= dy_max &&
           c.dz <= dz_max;
  }
  std::uint64_t cells() const noexcept {
    return std::uint64_t(dx_max + 1) * std::uint64_t(dy_max + 1) * std::uint64_t(dz_max + 1);
  }
  int max_total() const noexcept { return dx_max + dy_max + dz_max; }
  int max(int dim) const;
  friend bool operator==(const Bounds&, const Bounds&) = default;
};

/// What the defender sees at a time-step: the counter triple plus its remaining
/// stop budget. The terminal observation carries no counters.
struct Observation {
  Counts counts;
  int remaining_stops = 0;
  bool terminal = false;

  static Observation sentinel() { return Observation{{}, 0, true}; }
  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Posterior probability that the intrusion is ongoing.
class Belief {
 public:
  Belief() = default;
  explicit Belief(double intrusion);

  double intrusion() const noexcept { return b1_; }
  double no_intrusion() const noexcept { return 1.0 - b1_; }

  friend bool operator==(const Belief&, const Belief&) = default;

 private:
  double b1_ = 0.0;
};

}  // namespace optstop
