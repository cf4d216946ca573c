#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "optstop/types.hpp"

namespace optstop {

double sigmoid(double x) noexcept;

/// L raw parameters; component l-1 maps to the threshold used with l stops left.
class ThetaVector {
 public:
  ThetaVector() = default;
  explicit ThetaVector(std::vector<double> theta);

  std::size_t size() const noexcept { return theta_.size(); }
  double operator[](std::size_t i) const { return theta_[i]; }
  const std::vector<double>& values() const noexcept { return theta_; }

  /// sigma(theta_l) for stops remaining l in 1..L.
  double threshold(int l) const;
  std::vector<double> thresholds() const;

  friend bool operator==(const ThetaVector&, const ThetaVector&) = default;

 private:
  std::vector<double> theta_;
};

struct SmoothThreshold {
  ThetaVector theta;
};

struct HardThreshold {
  std::vector<double> thresholds;  // alpha_l at index l-1
};

struct Shiryaev {
  double threshold = 0.75;
};

struct AlertBaseline {};

struct IntrusionTimeOracle {};

using Policy =
    std::variant<SmoothThreshold, HardThreshold, Shiryaev, AlertBaseline, IntrusionTimeOracle>;

/// What a policy may look at when choosing an action.
struct DecisionContext {
  int remaining_stops = 1;
  double belief = 0.0;
  Counts last_counts{};  // counters of the most recent observation
  int t = 1;
  // Start step of the intrusion. Simulators supply the value known to them,
  // using a step index beyond the horizon while the intrusion has not started.
  std::optional<int> intrusion_time;
};

/// Smooth approximation of a threshold rule:
/// (1 + (b(1 - s) / (s(1 - b)))^-20)^-1 with s = sigmoid(theta_l), and the
/// limits 0 at b = 0 and 1 at b = 1.
double stop_probability(const ThetaVector& theta, int l, double b1);

/// Throws std::invalid_argument when the oracle policy lacks an intrusion time.
Action sample_action(const Policy& policy, const DecisionContext& ctx, Rng& rng);

HardThreshold harden(const ThetaVector& theta);

/// Throws std::invalid_argument if the policy does not fit a stop budget of L.
void validate_policy(const Policy& policy, int stops);

std::string policy_kind(const Policy& policy);

// Serialization: YAML with a `kind` tag; reals printed with 17 significant digits.
void save_policy(const Policy& policy, std::ostream& out);
void save_policy(const Policy& policy, const std::filesystem::path& path);
Policy load_policy(std::istream& in);
Policy load_policy(const std::filesystem::path& path);

}  // namespace optstop
