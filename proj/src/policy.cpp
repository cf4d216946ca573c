#include "optstop/policy.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

#include "optstop/errors.hpp"
#include "optstop/rng.hpp"

namespace optstop {

namespace {

constexpr double kSmoothExponent = -20.0;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_stops(int l, std::size_t size) {
  if (l < 1 || std::size_t(l) > size)
    throw std::out_of_range("remaining stops outside 1..L for this policy");
}

}  // namespace

double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

ThetaVector::ThetaVector(std::vector<double> theta) : theta_(std::move(theta)) {
  if (theta_.empty()) throw std::invalid_argument("theta must have at least one component");
}

double ThetaVector::threshold(int l) const {
  check_stops(l, theta_.size());
  return sigmoid(theta_[l - 1]);
}

std::vector<double> ThetaVector::thresholds() const {
  std::vector<double> out(theta_.size());
  for (std::size_t i = 0; i < theta_.size(); ++i) out[i] = sigmoid(theta_[i]);
  return out;
}

double stop_probability(const ThetaVector& theta, int l, double b1) {
  const double s = theta.threshold(l);
  if (b1 <= 0.0) return 0.0;
  if (b1 >= 1.0) return 1.0;
  const double ratio = (b1 * (1.0 - s)) / (s * (1.0 - b1));
  return 1.0 / (1.0 + std::pow(ratio, kSmoothExponent));
}

Action sample_action(const Policy& policy, const DecisionContext& ctx, Rng& rng) {
  const int l = ctx.remaining_stops;
  return std::visit(
      overloaded{
          [&](const SmoothThreshold& p) {
            const double prob = stop_probability(p.theta, l, ctx.belief);
            return uniform01(rng) < prob ? Action::Stop : Action::Continue;
          },
          [&](const HardThreshold& p) {
            check_stops(l, p.thresholds.size());
            return ctx.belief >= p.thresholds[l - 1] ? Action::Stop : Action::Continue;
          },
          [&](const Shiryaev& p) {
            return ctx.belief >= p.threshold ? Action::Stop : Action::Continue;
          },
          [&](const AlertBaseline&) {
            return ctx.last_counts.dx + ctx.last_counts.dy >= 1 ? Action::Stop : Action::Continue;
          },
          [&](const IntrusionTimeOracle&) {
            if (!ctx.intrusion_time)
              throw std::invalid_argument("intrusion-time oracle requires the intrusion time");
            return ctx.t >= *ctx.intrusion_time ? Action::Stop : Action::Continue;
          },
      },
      policy);
}

HardThreshold harden(const ThetaVector& theta) { return HardThreshold{theta.thresholds()}; }

void validate_policy(const Policy& policy, int stops) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  std::visit(overloaded{
                 [&](const SmoothThreshold& p) {
                   if (p.theta.size() != std::size_t(stops))
                     throw std::invalid_argument("theta length must equal the stop budget L");
                   for (double v : p.theta.values())
                     if (!std::isfinite(v)) throw std::invalid_argument("theta must be finite");
                 },
                 [&](const HardThreshold& p) {
                   if (p.thresholds.size() != std::size_t(stops))
                     throw std::invalid_argument("threshold count must equal the stop budget L");
                   for (double v : p.thresholds)
                     if (!in_unit(v)) throw std::invalid_argument("thresholds must lie in [0,1]");
                 },
                 [&](const Shiryaev& p) {
                   if (!in_unit(p.threshold))
                     throw std::invalid_argument("Shiryaev threshold must lie in [0,1]");
                 },
                 [](const AlertBaseline&) {},
                 [](const IntrusionTimeOracle&) {},
             },
             policy);
}

std::string policy_kind(const Policy& policy) {
  return std::visit(overloaded{
                        [](const SmoothThreshold&) { return std::string("smooth_threshold"); },
                        [](const HardThreshold&) { return std::string("hard_threshold"); },
                        [](const Shiryaev&) { return std::string("shiryaev"); },
                        [](const AlertBaseline&) { return std::string("alert_baseline"); },
                        [](const IntrusionTimeOracle&) {
                          return std::string("intrusion_time_oracle");
                        },
                    },
                    policy);
}

void save_policy(const Policy& policy, std::ostream& out) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap << YAML::Key << "kind" << YAML::Value << policy_kind(policy);
  std::visit(overloaded{
                 [&](const SmoothThreshold& p) {
                   e << YAML::Key << "theta" << YAML::Value << YAML::Flow << p.theta.values();
                   e << YAML::Key << "thresholds" << YAML::Value << YAML::Flow
                     << p.theta.thresholds();
                 },
                 [&](const HardThreshold& p) {
                   e << YAML::Key << "thresholds" << YAML::Value << YAML::Flow << p.thresholds;
                 },
                 [&](const Shiryaev& p) {
                   e << YAML::Key << "threshold" << YAML::Value << p.threshold;
                 },
                 [](const AlertBaseline&) {},
                 [](const IntrusionTimeOracle&) {},
             },
             policy);
  e << YAML::EndMap;
  out << e.c_str() << '\n';
}

void save_policy(const Policy& policy, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write policy file " + path.string());
  save_policy(policy, out);
}

Policy load_policy(std::istream& in) {
  YAML::Node root;
  try {
    root = YAML::Load(in);
  } catch (const YAML::Exception& ex) {
    throw SchemaError(std::string("policy file is not valid YAML: ") + ex.what());
  }
  if (!root.IsMap() || !root["kind"]) throw SchemaError("policy file needs a 'kind' field");
  auto reals = [&](const char* key) {
    const auto node = root[key];
    if (!node || !node.IsSequence()) throw SchemaError(std::string("missing list '") + key + "'");
    try {
      return node.as<std::vector<double>>();
    } catch (const YAML::Exception&) {
      throw SchemaError(std::string("'") + key + "' must be a list of reals", node.Mark().line + 1);
    }
  };
  const std::string kind = root["kind"].as<std::string>();
  try {
    if (kind == "smooth_threshold") return SmoothThreshold{ThetaVector(reals("theta"))};
    if (kind == "hard_threshold") {
      HardThreshold p{reals("thresholds")};
      validate_policy(p, int(p.thresholds.size()));
      return p;
    }
    if (kind == "shiryaev") {
      if (!root["threshold"]) throw SchemaError("shiryaev policy needs 'threshold'");
      Shiryaev p{root["threshold"].as<double>()};
      validate_policy(p, 1);
      return p;
    }
  } catch (const std::invalid_argument& ex) {
    throw SchemaError(std::string("invalid policy: ") + ex.what());
  } catch (const YAML::Exception& ex) {
    throw SchemaError(std::string("invalid policy: ") + ex.what());
  }
  if (kind == "alert_baseline") return AlertBaseline{};
  if (kind == "intrusion_time_oracle") return IntrusionTimeOracle{};
  throw SchemaError("unknown policy kind '" + kind + "'");
}

Policy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open policy file " + path.string());
  return load_policy(in);
}

}  // namespace optstop
