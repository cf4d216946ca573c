#pragma once

#include <cstdint>
#include <initializer_list>

#include "optstop/types.hpp"

namespace optstop {

/// Mixes a tuple of integers into one 64-bit seed through std::seed_seq, whose
/// output is fully specified by the standard.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

// Domain tags keep seed families from colliding.
namespace seed_tag {
inline constexpr std::uint64_t kEvaluation = 0x45564131;
inline constexpr std::uint64_t kTraining = 0x54524e31;
inline constexpr std::uint64_t kPerturbation = 0x50455254;
inline constexpr std::uint64_t kInit = 0x494e4954;
inline constexpr std::uint64_t kRestart = 0x52535452;
}  // namespace seed_tag

/// Independent streams for one episode: intrusion process, observations, and
/// policy randomisation. Splitting them keeps intrusion times and observation
/// draws aligned across policies that share an episode seed.
struct EpisodeStreams {
  explicit EpisodeStreams(std::uint64_t seed);

  Rng state;
  Rng observation;
  Rng policy;
};

/// Uniform double in [0, 1) from 53 random bits, independent of the standard
/// library's distribution implementations.
inline double uniform01(Rng& rng) { return double(rng() >> 11) * 0x1.0p-53; }

}  // namespace optstop
