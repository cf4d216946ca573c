#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "optstop/types.hpp"

namespace optstop {

enum class ModelVariant { Factorized, Joint };

std::string to_string(ModelVariant v);
ModelVariant parse_variant(const std::string& s);

/// Per-state distributions of the (dx, dy, dz) counter triple.
///
/// Factorized models store three marginals per state and assume the counters are
/// conditionally independent given the state. Joint models store a sparse map of
/// explicitly listed cells plus a per-state background probability that every
/// unlisted cell of the bounded grid carries (zero for an unsmoothed fit).
///
/// Instances are immutable once constructed and safe to share across threads.
class ObservationModel {
 public:
  using Marginals = std::array<std::vector<double>, 3>;
  using Table = std::map<std::uint64_t, double>;  // cell index -> probability

  /// Takes ownership of normalized marginals (one triple per non-terminal state).
  /// Throws std::invalid_argument when sizes do not match the bounds or a PMF
  /// does not sum to 1 within 1e-12.
  static ObservationModel factorized(Bounds bounds, std::array<Marginals, 2> pmfs,
                                     double epsilon = 0.0);

  static ObservationModel joint(Bounds bounds, std::array<Table, 2> cells,
                                std::array<double, 2> background, double epsilon = 0.0);

  ModelVariant variant() const noexcept { return variant_; }
  const Bounds& bounds() const noexcept { return bounds_; }
  double epsilon() const noexcept { return epsilon_; }

  /// f(dx, dy, dz | s). Throws std::out_of_range for counters outside the bounds
  /// and std::invalid_argument for the terminal state.
  double likelihood(State s, const Counts& c) const;

  Counts sample(State s, Rng& rng) const;

  /// Marginal PMF of one counter (0 = dx, 1 = dy, 2 = dz). For joint models the
  /// joint is summed out.
  std::vector<double> marginal(State s, int dim) const;

  /// PMF of dx + dy + dz, indexed 0..bounds().max_total().
  std::vector<double> total_count_pmf(State s) const;

  const std::array<Marginals, 2>& factorized_pmfs() const;
  const std::array<Table, 2>& joint_cells() const;
  const std::array<double, 2>& joint_background() const;  // joint only

  std::uint64_t cell_index(const Counts& c) const noexcept;
  Counts cell_counts(std::uint64_t index) const noexcept;

  friend bool operator==(const ObservationModel&, const ObservationModel&);

 private:
  ObservationModel() = default;
  void build_samplers();

  ModelVariant variant_ = ModelVariant::Factorized;
  Bounds bounds_{};
  double epsilon_ = 0.0;

  std::array<Marginals, 2> marginals_;
  std::array<Marginals, 2> cdfs_;

  std::array<Table, 2> cells_;
  std::array<double, 2> background_{0.0, 0.0};
  std::array<std::vector<std::uint64_t>, 2> cell_keys_;
  std::array<std::vector<double>, 2> cell_cdf_;  // last entry adds the background mass
};

/// obs_likelihood from the model, for a non-terminal state and observation.
double obs_likelihood(const ObservationModel& model, State s, const Observation& o);

// ---------------------------------------------------------------------------
// Traces and empirical fitting
// ---------------------------------------------------------------------------

struct TraceRecord {
  State state = State::NoIntrusion;
  Counts counts;
  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct TraceSet {
  std::vector<TraceRecord> records;
  std::size_t clipped = 0;  // counter values reduced to the bound
};

/// Parses the `state,dx,dy,dz` CSV. Counters above the bounds are clipped.
/// Throws SchemaError (with the line number) for malformed rows and
/// std::runtime_error when the file cannot be opened.
TraceSet load_traces(const std::filesystem::path& path, const Bounds& bounds = {});
TraceSet parse_traces(std::istream& in, const Bounds& bounds = {});
void write_traces(std::ostream& out, const std::vector<TraceRecord>& records);

/// Relative frequencies per state, each entry floored at epsilon and renormalized.
/// Throws EmptyStateError when a state has no records.
ObservationModel fit_empirical(const std::vector<TraceRecord>& records, ModelVariant variant,
                               const Bounds& bounds, double epsilon = 1e-9);

// ---------------------------------------------------------------------------
// Synthetic models
// ---------------------------------------------------------------------------

struct CounterFamily {
  enum class Kind { TruncatedPoisson, Table };
  Kind kind = Kind::TruncatedPoisson;
  double mean = 1.0;
  std::map<int, double> table;

  static CounterFamily poisson(double mean) { return {Kind::TruncatedPoisson, mean, {}}; }
  static CounterFamily explicit_table(std::map<int, double> t) {
    return {Kind::Table, 0.0, std::move(t)};
  }
};

struct SyntheticSpec {
  Bounds bounds{};
  // [state][dim]; state 0 = no intrusion, 1 = intrusion; dim 0/1/2 = dx/dy/dz.
  std::array<std::array<CounterFamily, 3>, 2> families;
  double epsilon = 0.0;
};

/// Builds a factorized model. Throws std::invalid_argument for a mean <= 0 or a
/// table that cannot be normalized.
ObservationModel synthetic_model(const SyntheticSpec& spec);

/// Truncated Poisson PMF on [0, bound], computed in log space.
std::vector<double> truncated_poisson(double mean, int bound);

// ---------------------------------------------------------------------------
// Serialization (YAML, probabilities with 17 significant digits)
// ---------------------------------------------------------------------------

void save_model(const ObservationModel& model, std::ostream& out);
void save_model(const ObservationModel& model, const std::filesystem::path& path);
ObservationModel load_model(std::istream& in);
ObservationModel load_model(const std::filesystem::path& path);

}  // namespace optstop
