#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>

#include "optstop/dp_oracle.hpp"
#include "optstop/observation_model.hpp"
#include "optstop/pomdp.hpp"
#include "optstop/tp2.hpp"
#include "optstop/tspsa.hpp"

namespace optstop {

struct ObservationSource {
  enum class Kind { Synthetic, Traces, Model };
  Kind kind = Kind::Synthetic;
  SyntheticSpec synthetic{};
  std::filesystem::path path;  // trace CSV or serialized model
  ModelVariant variant = ModelVariant::Factorized;
  double epsilon = 1e-9;  // smoothing for trace fits
  Bounds bounds{};
};

struct EvaluationConfig {
  int episodes = 500;
  double shiryaev_threshold = 0.75;
  int consistency_episodes = 10000;
};

/// Everything one experiment needs. Relative input paths are resolved against
/// the directory of the config file; output_dir is taken as given.
struct ExperimentConfig {
  std::uint64_t seed = 42;
  std::filesystem::path output_dir = "out";

  double intrusion_probability = 0.01;
  int stops = 3;
  int max_steps = 1000;
  RewardParams rewards{};

  ObservationSource observation{};
  ObservationOrder tp2_order = ObservationOrder::Lexicographic;

  SpsaConfig trainer{};
  EvaluationConfig evaluation{};
  OracleConfig oracle{};

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Parses and validates a YAML config. Unknown keys are rejected.
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& cfg, std::ostream& out);

/// OPTSTOP_SEED and OPTSTOP_OUTPUT_DIR override the file values when set.
void apply_env_overrides(ExperimentConfig& cfg);

/// The L = 3 synthetic scenario with truncated-Poisson counters.
ExperimentConfig default_scenario();
/// An L = 1 scenario with well-separated counter distributions.
ExperimentConfig easy_scenario();
/// "default" or "easy"; throws ConfigError otherwise.
ExperimentConfig named_scenario(const std::string& name);

ObservationModel build_observation_model(const ExperimentConfig& cfg);
StoppingPomdp build_pomdp(const ExperimentConfig& cfg);

}  // namespace optstop
