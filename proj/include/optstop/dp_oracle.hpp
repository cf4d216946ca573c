#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "optstop/policy.hpp"
#include "optstop/pomdp.hpp"
#include "optstop/tp2.hpp"

namespace optstop {

/// How the oracle reduces the (dx, dy, dz) outcome space.
struct ObservationBinning {
  enum class Mode { TotalCount, Exact };
  Mode mode = Mode::TotalCount;
  int bin_width = 5;  // total-count mode
  int max_bins = 50;  // the last bin absorbs all larger totals

  void validate() const;
};

std::string to_string(ObservationBinning::Mode m);
ObservationBinning::Mode parse_binning_mode(const std::string& s);

/// Per-symbol likelihoods under no-intrusion (z0) and intrusion (z1).
struct ObservationAlphabet {
  std::vector<double> z0;
  std::vector<double> z1;

  std::size_t size() const noexcept { return z0.size(); }
};

/// Exact mode enumerates every cell of the bounded grid with positive mass and
/// is intended for small grids.
ObservationAlphabet build_alphabet(const ObservationModel& model, const ObservationBinning& binning);

struct OracleConfig {
  int resolution = 1001;
  double tol = 1e-6;
  int max_iters = 10000;
  ObservationBinning binning{};

  void validate() const;
};

/// Values, Bellman branches and the greedy policy on a uniform belief grid.
/// Vectors are indexed [l][i] for l in 0..L; row 0 is the post-final-stop value 0.
struct BeliefGrid {
  int resolution = 0;
  std::vector<double> points;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<double>> stop_values;
  std::vector<std::vector<double>> continue_values;
  std::vector<std::vector<bool>> stop;  // tie resolves to Stop
  std::vector<int> iterations;          // sweeps used per l
  std::vector<double> residuals;        // final sup-norm change per l
  bool converged = false;

  int stops() const noexcept { return int(values.size()) - 1; }
  double cell_width() const noexcept { return 1.0 / double(resolution - 1); }
  /// Linear interpolation of V_l at b.
  double value_at(int l, double b) const;
  double max_residual() const;
};

/// Value iteration on the stopping Bellman equation. The l = 1 value function is
/// solved first; each V_l then uses the converged V_{l-1} in its stop branch.
BeliefGrid value_iteration(const StoppingPomdp& pomdp, const OracleConfig& cfg = {});

/// Largest |V - T V| over the grid, recomputed from the returned values.
double bellman_residual(const StoppingPomdp& pomdp, const ObservationAlphabet& alphabet,
                        const BeliefGrid& grid);

struct ThresholdEstimate {
  double alpha = 1.0;
  bool empty = false;  // no grid point stops
};

/// alpha_l = smallest grid belief whose entry is Stop, for l = 1..L.
std::vector<ThresholdEstimate> extract_thresholds(const BeliefGrid& grid);

/// The deterministic threshold policy built from the extracted thresholds.
HardThreshold threshold_policy(const BeliefGrid& grid);

struct Verdict {
  bool ok = true;
  std::string first_violation;  // empty when ok
};

struct StructureReport {
  std::vector<ThresholdEstimate> thresholds;
  Verdict nested;       // S_{l-1} subset of S_l
  Verdict connected;    // each S_l is a suffix of the grid
  Verdict monotone;     // alpha_1 >= alpha_2 >= ... >= alpha_L
  Verdict tp2_transitions;
  Verdict tp2_observations;
  ObservationOrder order = ObservationOrder::Lexicographic;
  int resolution = 0;
  double max_residual = 0.0;
  bool converged = false;
  double value_at_zero = 0.0;  // V*_L(0)

  bool structure_ok() const { return nested.ok && connected.ok && monotone.ok; }
  bool all_ok() const { return structure_ok() && tp2_transitions.ok && tp2_observations.ok; }
};

StructureReport verify_structure(const BeliefGrid& grid, const StoppingPomdp& pomdp,
                                 ObservationOrder order = ObservationOrder::Lexicographic);

void write_structure_report(std::ostream& out, const StructureReport& report);
void write_value_csv(std::ostream& out, const BeliefGrid& grid);

}  // namespace optstop
