#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "optstop/observation_model.hpp"
#include "optstop/pomdp.hpp"

namespace optstop {

using Matrix3 = std::array<std::array<double, 3>, 3>;

/// Transition matrix over (0, 1, terminal) for a continue / non-final stop
/// (final_stop = false) or for the final stop.
Matrix3 transition_matrix(double p, bool final_stop);

/// minors[i][j] is the determinant after deleting row i and column j (0-based).
Matrix3 second_order_minors(const Matrix3& m);

struct MinorReport {
  Matrix3 matrix{};
  Matrix3 minors{};
  bool tp2 = false;
};

struct TransitionTp2Report {
  MinorReport continue_matrix;    // a = C, or a = S with l > 1
  MinorReport final_stop_matrix;  // a = S with l = 1
  bool tp2 = false;
};

TransitionTp2Report check_tp2_transitions(const StoppingPomdp& pomdp);

/// Verdict for a two-row matrix. The violation names the pair of column
/// indices (j < k) whose minor row0[j]*row1[k] - row0[k]*row1[j] is negative.
struct Tp2Verdict {
  bool tp2 = true;
  std::optional<std::pair<std::size_t, std::size_t>> violation;
  double violating_minor = 0.0;
};

/// Checks every 2x2 minor of a two-row non-negative matrix. All-zero columns are
/// skipped; for the remaining columns the minors are all non-negative iff each
/// adjacent pair is, so the scan is linear.
Tp2Verdict check_tp2_rows(std::span<const double> row0, std::span<const double> row1);

enum class ObservationOrder { Lexicographic, TotalCount };

std::string to_string(ObservationOrder o);
ObservationOrder parse_order(const std::string& s);

struct ObservationTp2Report {
  ObservationOrder order = ObservationOrder::Lexicographic;
  Tp2Verdict verdict;
  std::size_t columns = 0;
  // Readable description of the violating pair, empty when TP2.
  std::string violation;
};

/// Lexicographic order enumerates the joint (dx, dy, dz) grid; total-count order
/// compares the distributions of dx + dy + dz.
ObservationTp2Report check_tp2_observations(const ObservationModel& model,
                                            ObservationOrder order = ObservationOrder::Lexicographic);

}  // namespace optstop
